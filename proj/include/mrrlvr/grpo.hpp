#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrrlvr/policy.hpp"
#include "mrrlvr/rng.hpp"
#include "mrrlvr/tasks.hpp"

// Group Relative Policy Optimization: group-standardized advantages, the
// clipped surrogate, the k3 KL penalty against a reference policy, and exact
// gradients for the toy policies.
namespace mrrlvr::grpo {

struct GrpoConfig {
    double clip_eps = 0.2;
    double kl_coef = 0.001;
    int group_size = 16;
    double learning_rate = 1e-2;  // toy-scale default; --paper-scale uses 1e-6
    double std_floor = 1e-6;
    // KL aggregation: false averages per token with the same (1/G)(1/|o|)
    // weights as the surrogate; true sums tokens within each sequence first.
    bool kl_sequence_sum = false;
    // 0 keeps the reference policy fixed; in (0,1) the reference tracks the
    // policy as an exponential moving average after each step.
    double ref_ema_decay = 0.0;

    void validate() const;
};

struct RolloutGroup {
    std::string query_id;
    std::vector<int> prompt;
    std::vector<std::uint8_t> legal;
    std::vector<std::vector<int>> sequences;
    std::vector<std::vector<double>> old_logprobs;
    std::vector<std::vector<double>> ref_logprobs;
    std::vector<double> rewards;

    int size() const { return static_cast<int>(sequences.size()); }
    void validate() const;  // GroupTooSmallError / LengthMismatchError
};

// Diagnostics from one objective/gradient evaluation.
struct GrpoStats {
    double objective = 0.0;
    double surrogate = 0.0;
    double kl = 0.0;
    double clip_fraction = 0.0;
    long ratio_clamps = 0;
};

// (r - mean) / max(population std, floor); all zeros when std < floor.
std::vector<double> normalize_rewards(const std::vector<double>& rewards, double std_floor);

// exp(logp_new - logp_old), clamped to [1e-8, 1e8]; bumps *clamp_count on clamp.
double token_ratio(double logp_new, double logp_old, long* clamp_count = nullptr);

// min(rho * adv, clip(rho, 1-eps, 1+eps) * adv).
double clipped_term(double rho, double adv, double eps);

// k3 estimator: r - log r - 1 with r = exp(logp_ref - logp_new); >= 0.
double kl_k3(double logp_ref, double logp_new);

// J = (1/G) sum_i (1/|o_i|) sum_t min(rho*A, clip(rho)*A) - beta * KL.
double grpo_objective(const RolloutGroup& group, const policy::Policy& pi,
                      const GrpoConfig& config, GrpoStats* stats = nullptr);

// Exact gradient of grpo_objective w.r.t. pi's parameters. The clipped
// branch is treated as constant where the min selects it.
std::vector<double> grpo_gradient(const RolloutGroup& group, const policy::Policy& pi,
                                  const GrpoConfig& config, GrpoStats* stats = nullptr);

// Draws G responses autoregressively at temperature 1, recording logprobs at
// sample time and the task's real reward per response. ref_logprobs start
// equal to old_logprobs; overwrite them via fill_ref_logprobs when a
// distinct reference policy exists.
RolloutGroup sample_group(const policy::Policy& pi, const tasks::TaskInstance& task, int G,
                          Rng& rng);

void fill_ref_logprobs(RolloutGroup& group, const policy::Policy& ref);

struct StepMetrics {
    double mean_reward = 0.0;
    double objective = 0.0;
    double kl = 0.0;
    double clip_fraction = 0.0;
    long ratio_clamps = 0;
};

// One plain-gradient-ascent step over a batch of task instances (one rollout
// group per instance, averaged). Updates pi in place; when ref_ema_decay is
// in (0,1) the reference then drifts toward the updated policy.
StepMetrics train_step(policy::Policy& pi, policy::Policy& ref,
                       const std::vector<tasks::TaskInstance>& batch,
                       const GrpoConfig& config, Rng& rng);

}  // namespace mrrlvr::grpo
