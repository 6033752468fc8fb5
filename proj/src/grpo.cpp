#include "mrrlvr/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "mrrlvr/errors.hpp"

namespace mrrlvr::grpo {

namespace {

constexpr double kRatioLo = 1e-8;
constexpr double kRatioHi = 1e8;

// Shared token walk for objective and gradient. Calls visit(i, t, weight,
// rho, adv, surr_term, kl_value, r_ref) per token with weight = the
// aggregation coefficient of the surrogate sum.
template <typename Visit>
GrpoStats walk_tokens(const RolloutGroup& group,
                      const std::vector<std::vector<double>>& new_logprobs,
                      const GrpoConfig& config, Visit visit) {
    const int G = group.size();
    const auto advantages = normalize_rewards(group.rewards, config.std_floor);

    GrpoStats stats;
    long tokens = 0;
    long clipped = 0;
    double surrogate = 0.0;
    double kl_total = 0.0;
    for (int i = 0; i < G; ++i) {
        const auto& seq = group.sequences[static_cast<std::size_t>(i)];
        const double inv_len = 1.0 / static_cast<double>(seq.size());
        const double adv = advantages[static_cast<std::size_t>(i)];
        for (std::size_t t = 0; t < seq.size(); ++t) {
            const double lp_new = new_logprobs[static_cast<std::size_t>(i)][t];
            const double lp_old = group.old_logprobs[static_cast<std::size_t>(i)][t];
            const double lp_ref = group.ref_logprobs[static_cast<std::size_t>(i)][t];
            const double rho = token_ratio(lp_new, lp_old, &stats.ratio_clamps);
            const double unclipped = rho * adv;
            const double band = std::clamp(rho, 1.0 - config.clip_eps, 1.0 + config.clip_eps);
            const double term = std::min(unclipped, band * adv);
            const double surr_weight = (1.0 / G) * inv_len;
            surrogate += surr_weight * term;

            const double r_ref = std::exp(lp_ref - lp_new);
            const double kl = kl_k3(lp_ref, lp_new);
            const double kl_weight = config.kl_sequence_sum ? (1.0 / G) : surr_weight;
            kl_total += kl_weight * kl;

            ++tokens;
            if (unclipped > band * adv) ++clipped;

            visit(i, t, surr_weight, rho, adv, unclipped <= band * adv, kl_weight, r_ref);
        }
    }
    stats.surrogate = surrogate;
    stats.kl = kl_total;
    stats.objective = surrogate - config.kl_coef * kl_total;
    stats.clip_fraction = tokens > 0 ? static_cast<double>(clipped) / tokens : 0.0;
    return stats;
}

std::vector<std::vector<double>> score_sequences(const RolloutGroup& group,
                                                 const policy::Policy& pi) {
    std::vector<std::vector<double>> out;
    out.reserve(group.sequences.size());
    for (const auto& seq : group.sequences) {
        out.push_back(policy::response_logprobs(pi, group.prompt, group.legal, seq));
    }
    return out;
}

}  // namespace

void GrpoConfig::validate() const {
    if (clip_eps <= 0.0) throw BadArgsError("clip_eps must be positive");
    if (kl_coef < 0.0) throw BadArgsError("kl_coef must be non-negative");
    if (group_size < 2) throw BadArgsError("group_size must be at least 2");
    if (std_floor <= 0.0) throw BadArgsError("std_floor must be positive");
    if (ref_ema_decay < 0.0 || ref_ema_decay >= 1.0) {
        throw BadArgsError("ref_ema_decay must lie in [0, 1)");
    }
}

void RolloutGroup::validate() const {
    if (size() < 2) {
        throw GroupTooSmallError("rollout group has " + std::to_string(size()) +
                                 " sequences, need >= 2");
    }
    if (old_logprobs.size() != sequences.size() || ref_logprobs.size() != sequences.size() ||
        rewards.size() != sequences.size()) {
        throw LengthMismatchError("rollout group arrays disagree on group size");
    }
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        if (sequences[i].empty()) {
            throw LengthMismatchError("rollout sequence " + std::to_string(i) + " is empty");
        }
        if (old_logprobs[i].size() != sequences[i].size() ||
            ref_logprobs[i].size() != sequences[i].size()) {
            throw LengthMismatchError("logprob arrays do not match sequence lengths");
        }
    }
}

std::vector<double> normalize_rewards(const std::vector<double>& rewards, double std_floor) {
    const std::size_t n = rewards.size();
    if (n < 2) {
        throw GroupTooSmallError("advantage normalization needs at least 2 rewards");
    }
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(n);  // population variance
    const double std = std::sqrt(var);
    std::vector<double> out(n, 0.0);
    if (std < std_floor) return out;  // degenerate group: all advantages zero
    for (std::size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / std;
    return out;
}

double token_ratio(double logp_new, double logp_old, long* clamp_count) {
    const double rho = std::exp(logp_new - logp_old);
    if (rho < kRatioLo) {
        if (clamp_count != nullptr) ++*clamp_count;
        return kRatioLo;
    }
    if (rho > kRatioHi) {
        if (clamp_count != nullptr) ++*clamp_count;
        return kRatioHi;
    }
    return rho;
}

double clipped_term(double rho, double adv, double eps) {
    if (eps <= 0.0) throw BadArgsError("clip_eps must be positive");
    return std::min(rho * adv, std::clamp(rho, 1.0 - eps, 1.0 + eps) * adv);
}

double kl_k3(double logp_ref, double logp_new) {
    const double log_r = logp_ref - logp_new;
    // expm1 keeps r - log r - 1 accurate near r = 1.
    return std::expm1(log_r) - log_r;
}

double grpo_objective(const RolloutGroup& group, const policy::Policy& pi,
                      const GrpoConfig& config, GrpoStats* stats) {
    config.validate();
    group.validate();
    const auto new_logprobs = score_sequences(group, pi);
    GrpoStats s = walk_tokens(group, new_logprobs, config,
                              [](int, std::size_t, double, double, double, bool, double,
                                 double) {});
    if (stats != nullptr) *stats = s;
    return s.objective;
}

std::vector<double> grpo_gradient(const RolloutGroup& group, const policy::Policy& pi,
                                  const GrpoConfig& config, GrpoStats* stats) {
    config.validate();
    group.validate();
    const auto new_logprobs = score_sequences(group, pi);

    // Upstream weight per token on log pi_theta: the surrogate contributes
    // rho*adv through the unclipped branch only; the KL penalty contributes
    // -beta * w * d(kl)/d(logp_new) = -beta * w * (1 - r_ref) ... with the
    // sign flipped once more because the objective SUBTRACTS beta*KL.
    std::vector<std::vector<double>> weights(group.sequences.size());
    for (std::size_t i = 0; i < group.sequences.size(); ++i) {
        weights[i].assign(group.sequences[i].size(), 0.0);
    }
    GrpoStats s = walk_tokens(
        group, new_logprobs, config,
        [&](int i, std::size_t t, double surr_weight, double rho, double adv,
            bool unclipped_active, double kl_weight, double r_ref) {
            double g = 0.0;
            if (unclipped_active && rho > kRatioLo && rho < kRatioHi) {
                g += surr_weight * rho * adv;
            }
            // d(r - log r - 1)/d(logp_new) = 1 - r; objective adds -beta*kl.
            g -= config.kl_coef * kl_weight * (1.0 - r_ref);
            weights[static_cast<std::size_t>(i)][t] = g;
        });
    if (stats != nullptr) *stats = s;

    std::vector<double> grad(pi.params().size(), 0.0);
    for (std::size_t i = 0; i < group.sequences.size(); ++i) {
        policy::accumulate_response_grad(pi, group.prompt, group.legal,
                                         group.sequences[i], weights[i], grad);
    }
    return grad;
}

RolloutGroup sample_group(const policy::Policy& pi, const tasks::TaskInstance& task, int G,
                          Rng& rng) {
    if (G < 2) throw GroupTooSmallError("group size must be at least 2");
    RolloutGroup group;
    group.query_id = task.query_id;
    group.prompt = task.prompt;
    group.legal = task.legal;
    std::vector<double> z;
    for (int i = 0; i < G; ++i) {
        std::vector<int> seq;
        std::vector<double> lps;
        for (int t = 0; t < task.response_len; ++t) {
            pi.logits(group.prompt, seq, z);
            auto lp = policy::masked_log_softmax(z, group.legal);
            // Categorical draw over the legal support at temperature 1.
            const double u = rng.next_double();
            double acc = 0.0;
            int chosen = -1;
            for (std::size_t v = 0; v < lp.size(); ++v) {
                if (!group.legal[v]) continue;
                acc += std::exp(lp[v]);
                if (u < acc) {
                    chosen = static_cast<int>(v);
                    break;
                }
            }
            if (chosen < 0) {  // numerical tail: fall back to the last legal token
                for (std::size_t v = lp.size(); v-- > 0;) {
                    if (group.legal[v]) {
                        chosen = static_cast<int>(v);
                        break;
                    }
                }
            }
            lps.push_back(lp[static_cast<std::size_t>(chosen)]);
            seq.push_back(chosen);
        }
        group.rewards.push_back(tasks::score_response(task, seq));
        group.sequences.push_back(std::move(seq));
        group.old_logprobs.push_back(lps);
        group.ref_logprobs.push_back(std::move(lps));
    }
    return group;
}

void fill_ref_logprobs(RolloutGroup& group, const policy::Policy& ref) {
    group.ref_logprobs = score_sequences(group, ref);
}

StepMetrics train_step(policy::Policy& pi, policy::Policy& ref,
                       const std::vector<tasks::TaskInstance>& batch,
                       const GrpoConfig& config, Rng& rng) {
    config.validate();
    if (batch.empty()) throw BadArgsError("train_step needs a non-empty batch");

    StepMetrics metrics;
    std::vector<double> grad(pi.params().size(), 0.0);
    long sequences = 0;
    for (const auto& task : batch) {
        RolloutGroup group = sample_group(pi, task, config.group_size, rng);
        fill_ref_logprobs(group, ref);
        GrpoStats stats;
        auto g = grpo_gradient(group, pi, config, &stats);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
        metrics.objective += stats.objective;
        metrics.kl += stats.kl;
        metrics.clip_fraction += stats.clip_fraction;
        metrics.ratio_clamps += stats.ratio_clamps;
        for (double r : group.rewards) metrics.mean_reward += r;
        sequences += group.size();
    }
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    metrics.objective *= inv_batch;
    metrics.kl *= inv_batch;
    metrics.clip_fraction *= inv_batch;
    metrics.mean_reward /= static_cast<double>(sequences);

    auto& theta = pi.params();
    for (std::size_t k = 0; k < theta.size(); ++k) {
        theta[k] += config.learning_rate * inv_batch * grad[k];
    }
    if (config.ref_ema_decay > 0.0) {
        auto& ref_theta = ref.params();
        for (std::size_t k = 0; k < ref_theta.size(); ++k) {
            ref_theta[k] = config.ref_ema_decay * ref_theta[k] +
                           (1.0 - config.ref_ema_decay) * theta[k];
        }
    }
    return metrics;
}

}  // namespace mrrlvr::grpo
