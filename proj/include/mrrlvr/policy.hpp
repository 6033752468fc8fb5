#pragma once

#include <cstdint>
#include <memory>
#include <vector>

// Small tabular policies with exact analytic gradients. A policy maps
// (prompt tokens, generated prefix) to a logit per vocabulary entry; the free
// functions below compose the masked log-softmax so sampling, scoring, and
// backprop all share one code path.
namespace mrrlvr::policy {

class Policy {
  public:
    virtual ~Policy() = default;
    virtual int vocab_size() const = 0;
    virtual int max_steps() const = 0;
    virtual std::vector<double>& params() = 0;
    virtual const std::vector<double>& params() const = 0;

    // Fills `out` (resized to vocab_size) with logits for the next token
    // after `prefix` tokens have been generated.
    virtual void logits(const std::vector<int>& prompt, const std::vector<int>& prefix,
                        std::vector<double>& out) const = 0;

    // grad += d(sum_v weights[v] * logit_v)/d(theta); additive and
    // order-independent, so contributions can be accumulated in any order.
    virtual void accumulate_logits_grad(const std::vector<int>& prompt,
                                        const std::vector<int>& prefix,
                                        const std::vector<double>& weights,
                                        std::vector<double>& grad) const = 0;

    virtual std::unique_ptr<Policy> clone() const = 0;
};

// Tabular policy over a vocabulary of m content symbols, n_max position
// tokens, a mask token, and a box token. Logits are a sum of linear feature
// tables: per-step bias, prompt-unigram scores, a slot/step table that can
// represent permutation inversion, a previous-token bigram, and a
// prompt-pair table over the first two content tokens. Everything is linear
// in the parameters, so gradients are exact.
struct ToyPolicyConfig {
    int m = 6;
    int n_max = 8;
    int max_steps = 8;
};

class ToyPolicy final : public Policy {
  public:
    explicit ToyPolicy(const ToyPolicyConfig& config);

    int vocab_size() const override { return vocab_; }
    int max_steps() const override { return config_.max_steps; }
    std::vector<double>& params() override { return theta_; }
    const std::vector<double>& params() const override { return theta_; }
    void logits(const std::vector<int>& prompt, const std::vector<int>& prefix,
                std::vector<double>& out) const override;
    void accumulate_logits_grad(const std::vector<int>& prompt, const std::vector<int>& prefix,
                                const std::vector<double>& weights,
                                std::vector<double>& grad) const override;
    std::unique_ptr<Policy> clone() const override;

    const ToyPolicyConfig& config() const { return config_; }

  private:
    ToyPolicyConfig config_;
    int vocab_ = 0;
    // Flat parameter vector; table offsets into it.
    std::size_t bias_off_, unigram_off_, slot_off_, bigram_off_, pair_off_;
    std::vector<double> theta_;
};

// Degenerate policy whose parameters ARE its per-step logits; handy for
// hand-computed objective values and gradient oracles.
class FixedLogitsPolicy final : public Policy {
  public:
    FixedLogitsPolicy(int vocab, int steps);

    int vocab_size() const override { return vocab_; }
    int max_steps() const override { return steps_; }
    std::vector<double>& params() override { return theta_; }
    const std::vector<double>& params() const override { return theta_; }
    void logits(const std::vector<int>& prompt, const std::vector<int>& prefix,
                std::vector<double>& out) const override;
    void accumulate_logits_grad(const std::vector<int>& prompt, const std::vector<int>& prefix,
                                const std::vector<double>& weights,
                                std::vector<double>& grad) const override;
    std::unique_ptr<Policy> clone() const override;

  private:
    int vocab_, steps_;
    std::vector<double> theta_;
};

// Masked log-softmax: illegal entries come back as -infinity; the legal
// entries exponentiate to a distribution summing to 1.
std::vector<double> masked_log_softmax(const std::vector<double>& logits,
                                       const std::vector<std::uint8_t>& legal);

// Per-token log-probabilities of `response` under the policy (teacher
// forcing), with the same legal mask applied at every step.
std::vector<double> response_logprobs(const Policy& policy, const std::vector<int>& prompt,
                                      const std::vector<std::uint8_t>& legal,
                                      const std::vector<int>& response);

// grad += sum_t token_weights[t] * d(log pi(response[t] | ...))/d(theta).
// Chain rule through the masked softmax: the emitted token gets +w, every
// legal token gets -w * p(token).
void accumulate_response_grad(const Policy& policy, const std::vector<int>& prompt,
                              const std::vector<std::uint8_t>& legal,
                              const std::vector<int>& response,
                              const std::vector<double>& token_weights,
                              std::vector<double>& grad);

}  // namespace mrrlvr::policy
