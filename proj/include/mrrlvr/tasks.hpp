#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrrlvr/rewards.hpp"

// Desk-scale synthetic tasks. Each instance encodes a prompt over a tiny
// token vocabulary and is scored by rendering the sampled tokens into the
// textual answer grammar and running the real reward functions on the
// result — the toy policy thus faces the same parser strictness and reward
// semantics as a full-size model.
namespace mrrlvr::tasks {

// Token layout: [0, m) content symbols, [m, m+n_max) position tokens,
// then the mask token and the box marker.
struct Vocab {
    int m = 6;
    int n_max = 8;

    int size() const { return m + n_max + 2; }
    int mask_token() const { return m + n_max; }
    int box_token() const { return m + n_max + 1; }
    int position_token(int slot) const { return m + slot; }
    bool is_content(int v) const { return v >= 0 && v < m; }
    bool is_position(int v) const { return v >= m && v < m + n_max; }
    int position_index(int v) const { return v - m; }
};

enum class TaskKind { mask_fill, reorder, outcome };

const char* task_kind_name(TaskKind k);

struct TaskInstance {
    TaskKind kind = TaskKind::outcome;
    std::string query_id;
    Vocab vocab;
    std::vector<int> prompt;
    int response_len = 0;
    std::vector<std::uint8_t> legal;  // vocabulary mask applied at every step

    std::vector<int> true_order;  // reorder reference (presentation indices)
    int truth_symbol = -1;        // fill / outcome reference content symbol
};

// Reorder: the prompt presents a permutation (slot i holds a position token
// naming the logical step shown there); the policy must emit the positions
// in logical order. Scored through parse_reorder_response + process_reward.
TaskInstance make_reorder_task(const Vocab& vocab, const std::string& query_id,
                               const std::vector<int>& true_order);

// Masked fill: prompt [a, d, MASK]; one content token completes the
// template, with ground truth (a + d) mod m. Scored through
// parse_mask_response + process_reward with exact-match equivalence.
TaskInstance make_fill_task(const Vocab& vocab, const std::string& query_id, int a, int d);

// Outcome: prompt [a, b]; the policy emits free-form tokens (content or box
// marker) and earns reward only when its LAST boxed group decodes to
// (a + b) mod m. Scored through final_reward.
TaskInstance make_outcome_task(const Vocab& vocab, const std::string& query_id, int a, int b);

// Renders sampled tokens into the textual answer the reward parsers expect.
std::string render_response(const TaskInstance& task, const std::vector<int>& tokens);

// Real reward of a sampled response, in [0, 1].
double score_response(const TaskInstance& task, const std::vector<int>& tokens);

}  // namespace mrrlvr::tasks
