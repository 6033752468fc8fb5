#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

// Process-level and outcome-level reward functions.
//
// Two process tasks: masked-formula filling (graded per-mask match) and step
// reordering (fraction of correctly placed steps). One outcome task: binary
// verification of the final boxed answer. Malformed responses always score 0.
namespace mrrlvr::rewards {

enum class ProcessTaskKind { mask_fill, reorder };

// A trajectory whose key formulas were replaced by mask tags.
struct MaskedInstance {
    std::string instance_id;  // join key used by the scoring CLI
    std::string problem_id;
    std::string masked_text;                 // flattened trajectory with tags
    std::vector<std::string> ground_truths;  // one per tag, in tag order
    int mask_count = 0;
};

// A trajectory split into steps and presented in shuffled order.
struct ReorderInstance {
    std::string instance_id;
    std::string problem_id;
    std::vector<std::string> shuffled_steps;  // carry "Step i: " prefixes
    // Presentation indices in reference logical order: true_order[j] is the
    // presented step that belongs at logical position j. Reading it back off
    // shuffled_steps reproduces the original step sequence.
    std::vector<int> true_order;
    int n = 0;
};

struct MaskFillResponse {
    std::vector<std::string> fills;  // one per mask tag, in tag order
};

struct ReorderResponse {
    std::vector<int> order;  // predicted logical order of presentation indices
};

struct Malformed {
    enum class Reason { no_boxed, wrong_count, unbalanced, not_integer, duplicate, out_of_range };
    Reason reason = Reason::no_boxed;
    int got = 0;       // wrong_count: how many parts arrived
    int expected = 0;  // wrong_count: how many were required
    std::string detail;
};

const char* reason_name(Malformed::Reason r);

template <typename T>
using ParseResult = std::variant<T, Malformed>;

struct RewardValue {
    double value = 0.0;
    std::map<std::string, double> breakdown;  // per-component scores
    std::string note;                         // e.g. malformed reason
};

// Response parsing against the boxed answer grammar ("\boxed{a; b; c}" for
// fills, "\boxed{2, 5, 0, 4, 1, 3}" for orders). The LAST boxed group wins.
// With allow_bare (used by the scoring CLI), a response containing no \boxed{
// marker is treated as a bare payload instead of Malformed{no_boxed}.
ParseResult<MaskFillResponse> parse_mask_response(const std::string& raw, int expected,
                                                  bool allow_bare = false);
ParseResult<ReorderResponse> parse_reorder_response(const std::string& raw, int n,
                                                    bool allow_bare = false);

// Renderers; formatting a valid response and re-parsing it round-trips.
std::string format_mask_response(const std::vector<std::string>& fills);
std::string format_reorder_response(const std::vector<int>& order);

// min(h, mask_count) distinct sorted indices in [0, mask_count), deterministic
// under seed.
std::vector<int> select_eval_positions(int mask_count, int h, std::uint64_t seed);

// r_mask = (1/h) * sum of per-position scores over `positions`, where a
// position scores 1.0 on math-equivalence and text_similarity otherwise
// (scores below similarity_floor clamp to 0; the default floor keeps the raw
// graded fallback). Breakdown carries per-position scores keyed "pos_<k>".
RewardValue mask_reward(const std::vector<std::string>& fills,
                        const std::vector<std::string>& truths,
                        const std::vector<int>& positions, double similarity_floor = 0.0);

// d_pos = fraction of steps whose position differs between the two orders.
// Both arguments are sequences of presentation indices in logical order.
double position_distance(const std::vector<int>& pred, const std::vector<int>& true_order);

// r_order = 1 - d_pos. Breakdown carries d_pos.
RewardValue order_reward(const ReorderResponse& pred, const std::vector<int>& true_order);

using InstancePayload = std::variant<MaskedInstance, ReorderInstance>;
using ResponsePayload = std::variant<MaskFillResponse, ReorderResponse, Malformed>;

struct MaskEvalOptions {
    int h = 7;                      // evaluated masks per instance (clamped)
    std::uint64_t seed = 0;         // position-selection seed
    double similarity_floor = 0.0;  // threshold for the graded fallback
};

// r_proc: dispatches to exactly one of mask_reward / order_reward by kind.
// Malformed responses score 0.0 with the reason in the breakdown note.
// Instance/response payloads of the wrong kind raise KindMismatchError.
RewardValue process_reward(ProcessTaskKind kind, const InstancePayload& instance,
                           const ResponsePayload& response, const MaskEvalOptions& opts = {});

// r_final: 1.0 iff the LAST boxed group of response_text is math-equivalent
// to y_star; 0.0 on mismatch, missing box, or unbalanced braces.
RewardValue final_reward(const std::string& y_star, const std::string& response_text);

}  // namespace mrrlvr::rewards
