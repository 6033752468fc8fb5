#include "mrrlvr/tasks.hpp"

#include <algorithm>

#include "mrrlvr/errors.hpp"

namespace mrrlvr::tasks {

namespace {

void check_vocab(const Vocab& v) {
    if (v.m < 2 || v.n_max < 2) throw BadArgsError("vocab needs m >= 2 and n_max >= 2");
}

std::string symbol_text(int symbol) { return std::to_string(symbol); }

}  // namespace

const char* task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::mask_fill: return "mask_fill";
        case TaskKind::reorder: return "reorder";
        case TaskKind::outcome: return "outcome";
    }
    return "?";
}

TaskInstance make_reorder_task(const Vocab& vocab, const std::string& query_id,
                               const std::vector<int>& true_order) {
    check_vocab(vocab);
    const int n = static_cast<int>(true_order.size());
    if (n < 2 || n > vocab.n_max) {
        throw BadArgsError("reorder length " + std::to_string(n) + " outside [2, n_max]");
    }
    std::vector<int> perm(static_cast<std::size_t>(n), -1);  // slot -> logical step
    for (int j = 0; j < n; ++j) {
        const int slot = true_order[static_cast<std::size_t>(j)];
        if (slot < 0 || slot >= n || perm[static_cast<std::size_t>(slot)] != -1) {
            throw BadArgsError("true_order is not a permutation");
        }
        perm[static_cast<std::size_t>(slot)] = j;
    }

    TaskInstance t;
    t.kind = TaskKind::reorder;
    t.query_id = query_id;
    t.vocab = vocab;
    t.true_order = true_order;
    t.response_len = n;
    for (int slot = 0; slot < n; ++slot) {
        t.prompt.push_back(vocab.position_token(perm[static_cast<std::size_t>(slot)]));
    }
    t.legal.assign(static_cast<std::size_t>(vocab.size()), 0);
    for (int slot = 0; slot < n; ++slot) {
        t.legal[static_cast<std::size_t>(vocab.position_token(slot))] = 1;
    }
    return t;
}

TaskInstance make_fill_task(const Vocab& vocab, const std::string& query_id, int a, int d) {
    check_vocab(vocab);
    if (a < 0 || a >= vocab.m || d < 0 || d >= vocab.m) {
        throw BadArgsError("fill operands must be content symbols");
    }
    TaskInstance t;
    t.kind = TaskKind::mask_fill;
    t.query_id = query_id;
    t.vocab = vocab;
    t.prompt = {a, d, vocab.mask_token()};
    t.response_len = 1;
    t.truth_symbol = (a + d) % vocab.m;
    t.legal.assign(static_cast<std::size_t>(vocab.size()), 0);
    for (int v = 0; v < vocab.m; ++v) t.legal[static_cast<std::size_t>(v)] = 1;
    return t;
}

TaskInstance make_outcome_task(const Vocab& vocab, const std::string& query_id, int a, int b) {
    check_vocab(vocab);
    if (a < 0 || a >= vocab.m || b < 0 || b >= vocab.m) {
        throw BadArgsError("outcome operands must be content symbols");
    }
    TaskInstance t;
    t.kind = TaskKind::outcome;
    t.query_id = query_id;
    t.vocab = vocab;
    t.prompt = {a, b};
    t.response_len = 2;
    t.truth_symbol = (a + b) % vocab.m;
    t.legal.assign(static_cast<std::size_t>(vocab.size()), 0);
    for (int v = 0; v < vocab.m; ++v) t.legal[static_cast<std::size_t>(v)] = 1;
    t.legal[static_cast<std::size_t>(vocab.box_token())] = 1;
    return t;
}

std::string render_response(const TaskInstance& task, const std::vector<int>& tokens) {
    const Vocab& vb = task.vocab;
    switch (task.kind) {
        case TaskKind::reorder: {
            std::string body;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (i > 0) body += ", ";
                body += std::to_string(vb.is_position(tokens[i]) ? vb.position_index(tokens[i])
                                                                 : tokens[i]);
            }
            return "\\boxed{" + body + "}";
        }
        case TaskKind::mask_fill: {
            std::string body;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (i > 0) body += "; ";
                body += symbol_text(tokens[i]);
            }
            return "\\boxed{" + body + "}";
        }
        case TaskKind::outcome: {
            // Free-form text; a box token wraps the following content token.
            std::string out;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (tokens[i] == vb.box_token()) {
                    if (i + 1 < tokens.size() && vb.is_content(tokens[i + 1])) {
                        out += "\\boxed{" + symbol_text(tokens[i + 1]) + "} ";
                        ++i;
                    } else {
                        out += "\\boxed{ ";  // dangling marker: unbalanced on purpose
                    }
                } else {
                    out += symbol_text(tokens[i]) + " ";
                }
            }
            return out;
        }
    }
    return "";
}

double score_response(const TaskInstance& task, const std::vector<int>& tokens) {
    const std::string text = render_response(task, tokens);
    switch (task.kind) {
        case TaskKind::reorder: {
            rewards::ReorderInstance inst;
            inst.instance_id = task.query_id;
            inst.problem_id = task.query_id;
            inst.true_order = task.true_order;
            inst.n = static_cast<int>(task.true_order.size());
            auto parsed = rewards::parse_reorder_response(text, inst.n);
            rewards::ResponsePayload payload =
                std::holds_alternative<rewards::Malformed>(parsed)
                    ? rewards::ResponsePayload(std::get<rewards::Malformed>(parsed))
                    : rewards::ResponsePayload(std::get<rewards::ReorderResponse>(parsed));
            return rewards::process_reward(rewards::ProcessTaskKind::reorder, inst, payload)
                .value;
        }
        case TaskKind::mask_fill: {
            rewards::MaskedInstance inst;
            inst.instance_id = task.query_id;
            inst.problem_id = task.query_id;
            inst.masked_text = "<formula_masked>";
            inst.ground_truths = {symbol_text(task.truth_symbol)};
            inst.mask_count = 1;
            auto parsed = rewards::parse_mask_response(text, inst.mask_count);
            rewards::ResponsePayload payload =
                std::holds_alternative<rewards::Malformed>(parsed)
                    ? rewards::ResponsePayload(std::get<rewards::Malformed>(parsed))
                    : rewards::ResponsePayload(std::get<rewards::MaskFillResponse>(parsed));
            return rewards::process_reward(rewards::ProcessTaskKind::mask_fill, inst, payload)
                .value;
        }
        case TaskKind::outcome:
            return rewards::final_reward(symbol_text(task.truth_symbol), text).value;
    }
    return 0.0;
}

}  // namespace mrrlvr::tasks
