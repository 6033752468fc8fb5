#include "mrrlvr/rewards.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "mrrlvr/errors.hpp"
#include "mrrlvr/mathtext.hpp"
#include "mrrlvr/rng.hpp"

namespace mrrlvr::rewards {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\n\r\f\v");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\n\r\f\v");
    return s.substr(b, e - b + 1);
}

// Split on top-level `sep`: separators nested inside brace groups stay put.
std::vector<std::string> split_top_level(const std::string& payload, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    for (std::size_t i = 0; i < payload.size(); ++i) {
        char c = payload[i];
        bool escaped = i > 0 && payload[i - 1] == '\\';
        if (c == '{' && !escaped) ++depth;
        if (c == '}' && !escaped) --depth;
        if (c == sep && depth <= 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

// Extract the boxed payload shared by both parsers. Returns the payload, a
// Malformed, or — with allow_bare when no \boxed{ marker exists — raw itself.
std::variant<std::string, Malformed> boxed_payload(const std::string& raw, bool allow_bare) {
    try {
        auto boxed = mathtext::extract_boxed(raw);
        if (boxed) return *boxed;
    } catch (const UnbalancedBracesError& e) {
        return Malformed{Malformed::Reason::unbalanced, 0, 0, e.what()};
    }
    if (allow_bare) return trim(raw);
    return Malformed{Malformed::Reason::no_boxed, 0, 0, "no \\boxed{...} group in response"};
}

}  // namespace

const char* reason_name(Malformed::Reason r) {
    switch (r) {
        case Malformed::Reason::no_boxed: return "no_boxed";
        case Malformed::Reason::wrong_count: return "wrong_count";
        case Malformed::Reason::unbalanced: return "unbalanced";
        case Malformed::Reason::not_integer: return "not_integer";
        case Malformed::Reason::duplicate: return "duplicate";
        case Malformed::Reason::out_of_range: return "out_of_range";
    }
    return "unknown";
}

ParseResult<MaskFillResponse> parse_mask_response(const std::string& raw, int expected,
                                                  bool allow_bare) {
    auto payload = boxed_payload(raw, allow_bare);
    if (std::holds_alternative<Malformed>(payload)) return std::get<Malformed>(payload);

    std::vector<std::string> parts = split_top_level(std::get<std::string>(payload), ';');
    for (auto& p : parts) p = trim(p);
    if (static_cast<int>(parts.size()) != expected) {
        return Malformed{Malformed::Reason::wrong_count, static_cast<int>(parts.size()), expected,
                         "expected " + std::to_string(expected) + " fills, got " +
                             std::to_string(parts.size())};
    }
    return MaskFillResponse{std::move(parts)};
}

ParseResult<ReorderResponse> parse_reorder_response(const std::string& raw, int n,
                                                    bool allow_bare) {
    auto payload = boxed_payload(raw, allow_bare);
    if (std::holds_alternative<Malformed>(payload)) return std::get<Malformed>(payload);

    std::vector<std::string> tokens = split_top_level(std::get<std::string>(payload), ',');
    std::vector<long> values;
    values.reserve(tokens.size());
    for (auto& tok : tokens) {
        std::string t = trim(tok);
        if (t.size() > 1 && t[0] == '+') t.erase(0, 1);  // from_chars rejects '+'
        long v = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
            return Malformed{Malformed::Reason::not_integer, 0, 0,
                             "token '" + t + "' is not an integer"};
        }
        values.push_back(v);
    }
    if (static_cast<int>(values.size()) != n) {
        return Malformed{Malformed::Reason::wrong_count, static_cast<int>(values.size()), n,
                         "expected " + std::to_string(n) + " tokens, got " +
                             std::to_string(values.size())};
    }
    // Accept 1-based answers: shift down when the tokens span exactly {1..n}.
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (*mn == 1 && *mx == n) {
        for (auto& v : values) --v;
    }
    std::vector<int> order;
    order.reserve(values.size());
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (long v : values) {
        if (v < 0 || v >= n) {
            return Malformed{Malformed::Reason::out_of_range, 0, 0,
                             "index " + std::to_string(v) + " outside [0," + std::to_string(n) +
                                 ")"};
        }
        if (seen[static_cast<std::size_t>(v)]) {
            return Malformed{Malformed::Reason::duplicate, 0, 0,
                             "index " + std::to_string(v) + " appears twice"};
        }
        seen[static_cast<std::size_t>(v)] = 1;
        order.push_back(static_cast<int>(v));
    }
    return ReorderResponse{std::move(order)};
}

std::string format_mask_response(const std::vector<std::string>& fills) {
    std::string out = "\\boxed{";
    for (std::size_t i = 0; i < fills.size(); ++i) {
        if (i > 0) out += "; ";
        out += fills[i];
    }
    out += "}";
    return out;
}

std::string format_reorder_response(const std::vector<int>& order) {
    std::string out = "\\boxed{";
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(order[i]);
    }
    out += "}";
    return out;
}

std::vector<int> select_eval_positions(int mask_count, int h, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(mask_count));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(std::min(h, mask_count)));
    std::sort(idx.begin(), idx.end());
    return idx;
}

RewardValue mask_reward(const std::vector<std::string>& fills,
                        const std::vector<std::string>& truths,
                        const std::vector<int>& positions, double similarity_floor) {
    if (fills.size() != truths.size()) {
        throw LengthMismatchError("mask_reward: " + std::to_string(fills.size()) + " fills vs " +
                                  std::to_string(truths.size()) + " truths");
    }
    RewardValue out;
    if (positions.empty()) return out;
    double sum = 0.0;
    for (int k : positions) {
        if (k < 0 || static_cast<std::size_t>(k) >= fills.size()) {
            throw LengthMismatchError("mask_reward: position " + std::to_string(k) +
                                      " outside fills");
        }
        auto verdict = mathtext::math_equivalent(fills[static_cast<std::size_t>(k)],
                                                 truths[static_cast<std::size_t>(k)]);
        double score = verdict.equivalent ? 1.0 : verdict.similarity;
        if (score < similarity_floor) score = 0.0;
        out.breakdown["pos_" + std::to_string(k)] = score;
        sum += score;
    }
    out.value = sum / static_cast<double>(positions.size());
    return out;
}

double position_distance(const std::vector<int>& pred, const std::vector<int>& true_order) {
    const std::size_t n = pred.size();
    if (true_order.size() != n || n == 0) {
        throw LengthMismatchError("position_distance: orders of length " + std::to_string(n) +
                                  " vs " + std::to_string(true_order.size()));
    }
    // Invert both sequences to step -> position maps, then count disagreements.
    auto invert = [n](const std::vector<int>& order, const char* which) {
        std::vector<int> pos(n, -1);
        for (std::size_t i = 0; i < n; ++i) {
            int v = order[i];
            if (v < 0 || static_cast<std::size_t>(v) >= n || pos[static_cast<std::size_t>(v)] != -1) {
                throw LengthMismatchError(std::string("position_distance: ") + which +
                                          " is not a permutation");
            }
            pos[static_cast<std::size_t>(v)] = static_cast<int>(i);
        }
        return pos;
    };
    std::vector<int> pos_pred = invert(pred, "pred");
    std::vector<int> pos_true = invert(true_order, "true_order");
    std::size_t misplaced = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (pos_pred[k] != pos_true[k]) ++misplaced;
    }
    return static_cast<double>(misplaced) / static_cast<double>(n);
}

RewardValue order_reward(const ReorderResponse& pred, const std::vector<int>& true_order) {
    double d = position_distance(pred.order, true_order);
    RewardValue out;
    out.value = 1.0 - d;
    out.breakdown["d_pos"] = d;
    return out;
}

RewardValue process_reward(ProcessTaskKind kind, const InstancePayload& instance,
                           const ResponsePayload& response, const MaskEvalOptions& opts) {
    if (std::holds_alternative<Malformed>(response)) {
        const auto& m = std::get<Malformed>(response);
        RewardValue out;
        out.value = 0.0;
        out.breakdown["malformed"] = 1.0;
        out.note = std::string("malformed: ") + reason_name(m.reason);
        return out;
    }
    if (kind == ProcessTaskKind::mask_fill) {
        if (!std::holds_alternative<MaskedInstance>(instance) ||
            !std::holds_alternative<MaskFillResponse>(response)) {
            throw KindMismatchError("process_reward: kind=mask_fill with non-mask payloads");
        }
        const auto& inst = std::get<MaskedInstance>(instance);
        const auto& resp = std::get<MaskFillResponse>(response);
        auto positions = select_eval_positions(inst.mask_count, opts.h, opts.seed);
        RewardValue out = mask_reward(resp.fills, inst.ground_truths, positions,
                                      opts.similarity_floor);
        out.note = "mask";
        return out;
    }
    if (!std::holds_alternative<ReorderInstance>(instance) ||
        !std::holds_alternative<ReorderResponse>(response)) {
        throw KindMismatchError("process_reward: kind=reorder with non-reorder payloads");
    }
    const auto& inst = std::get<ReorderInstance>(instance);
    const auto& resp = std::get<ReorderResponse>(response);
    RewardValue out = order_reward(resp, inst.true_order);
    out.note = "reorder";
    return out;
}

RewardValue final_reward(const std::string& y_star, const std::string& response_text) {
    RewardValue out;
    std::optional<std::string> boxed;
    try {
        boxed = mathtext::extract_boxed(response_text);
    } catch (const UnbalancedBracesError&) {
        out.note = "malformed: unbalanced";
        return out;
    }
    if (!boxed) {
        out.note = "malformed: no_boxed";
        return out;
    }
    auto verdict = mathtext::math_equivalent(y_star, *boxed);
    out.value = verdict.equivalent ? 1.0 : 0.0;
    out.breakdown["similarity"] = verdict.similarity;
    out.breakdown["equivalent"] = verdict.equivalent ? 1.0 : 0.0;
    return out;
}

}  // namespace mrrlvr::rewards
