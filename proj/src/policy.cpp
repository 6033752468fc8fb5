#include "mrrlvr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrrlvr/errors.hpp"

namespace mrrlvr::policy {

namespace {

void check_tokens(const std::vector<int>& tokens, int vocab, const char* what) {
    for (int t : tokens) {
        if (t < 0 || t >= vocab) {
            throw ScoreMismatchError(std::string(what) + " token " + std::to_string(t) +
                                     " outside vocabulary of size " + std::to_string(vocab));
        }
    }
}

}  // namespace

ToyPolicy::ToyPolicy(const ToyPolicyConfig& config) : config_(config) {
    if (config.m < 1 || config.n_max < 1 || config.max_steps < 1) {
        throw BadArgsError("toy policy dimensions must be positive");
    }
    vocab_ = config.m + config.n_max + 2;
    const std::size_t v = static_cast<std::size_t>(vocab_);
    const std::size_t t = static_cast<std::size_t>(config.max_steps);
    const std::size_t m = static_cast<std::size_t>(config.m);
    bias_off_ = 0;
    unigram_off_ = bias_off_ + t * v;
    slot_off_ = unigram_off_ + v * v;
    bigram_off_ = slot_off_ + v * t;
    pair_off_ = bigram_off_ + v * v;
    theta_.assign(pair_off_ + m * m * v, 0.0);
}

void ToyPolicy::logits(const std::vector<int>& prompt, const std::vector<int>& prefix,
                       std::vector<double>& out) const {
    const int V = vocab_;
    const int T = config_.max_steps;
    const int m = config_.m;
    const int t = static_cast<int>(prefix.size());
    if (t >= T) {
        throw ScoreMismatchError("generation step " + std::to_string(t) +
                                 " exceeds policy horizon " + std::to_string(T));
    }
    check_tokens(prompt, V, "prompt");
    check_tokens(prefix, V, "prefix");

    out.assign(static_cast<std::size_t>(V), 0.0);
    const int L = static_cast<int>(prompt.size());
    const bool pair_active = L >= 2 && prompt[0] < m && prompt[1] < m;
    const std::size_t pair_base =
        pair_active ? pair_off_ + (static_cast<std::size_t>(prompt[0]) * m + prompt[1]) * V : 0;
    const int prev = t > 0 ? prefix[static_cast<std::size_t>(t - 1)] : -1;

    for (int v = 0; v < V; ++v) {
        double z = theta_[bias_off_ + static_cast<std::size_t>(t) * V + v];
        for (int p : prompt) z += theta_[unigram_off_ + static_cast<std::size_t>(p) * V + v];
        const int slot = v - m;  // position tokens encode slots 0..n_max-1
        if (slot >= 0 && slot < config_.n_max && slot < L) {
            z += theta_[slot_off_ + static_cast<std::size_t>(prompt[slot]) * T + t];
        }
        if (prev >= 0) z += theta_[bigram_off_ + static_cast<std::size_t>(prev) * V + v];
        if (pair_active) z += theta_[pair_base + static_cast<std::size_t>(v)];
        out[static_cast<std::size_t>(v)] = z;
    }
}

void ToyPolicy::accumulate_logits_grad(const std::vector<int>& prompt,
                                       const std::vector<int>& prefix,
                                       const std::vector<double>& weights,
                                       std::vector<double>& grad) const {
    const int V = vocab_;
    const int T = config_.max_steps;
    const int m = config_.m;
    const int t = static_cast<int>(prefix.size());
    if (static_cast<int>(weights.size()) != V) {
        throw ScoreMismatchError("weight vector size does not match vocabulary");
    }
    if (grad.size() != theta_.size()) grad.resize(theta_.size(), 0.0);

    const int L = static_cast<int>(prompt.size());
    const bool pair_active = L >= 2 && prompt[0] < m && prompt[1] < m;
    const std::size_t pair_base =
        pair_active ? pair_off_ + (static_cast<std::size_t>(prompt[0]) * m + prompt[1]) * V : 0;
    const int prev = t > 0 ? prefix[static_cast<std::size_t>(t - 1)] : -1;

    for (int v = 0; v < V; ++v) {
        const double w = weights[static_cast<std::size_t>(v)];
        if (w == 0.0) continue;
        grad[bias_off_ + static_cast<std::size_t>(t) * V + v] += w;
        for (int p : prompt) grad[unigram_off_ + static_cast<std::size_t>(p) * V + v] += w;
        const int slot = v - m;
        if (slot >= 0 && slot < config_.n_max && slot < L) {
            grad[slot_off_ + static_cast<std::size_t>(prompt[slot]) * T + t] += w;
        }
        if (prev >= 0) grad[bigram_off_ + static_cast<std::size_t>(prev) * V + v] += w;
        if (pair_active) grad[pair_base + static_cast<std::size_t>(v)] += w;
    }
}

std::unique_ptr<Policy> ToyPolicy::clone() const { return std::make_unique<ToyPolicy>(*this); }

FixedLogitsPolicy::FixedLogitsPolicy(int vocab, int steps) : vocab_(vocab), steps_(steps) {
    if (vocab < 2 || steps < 1) throw BadArgsError("fixed policy needs vocab >= 2, steps >= 1");
    theta_.assign(static_cast<std::size_t>(vocab) * steps, 0.0);
}

void FixedLogitsPolicy::logits(const std::vector<int>&, const std::vector<int>& prefix,
                               std::vector<double>& out) const {
    const int t = static_cast<int>(prefix.size());
    if (t >= steps_) {
        throw ScoreMismatchError("generation step exceeds fixed policy horizon");
    }
    out.assign(theta_.begin() + static_cast<std::ptrdiff_t>(t) * vocab_,
               theta_.begin() + static_cast<std::ptrdiff_t>(t + 1) * vocab_);
}

void FixedLogitsPolicy::accumulate_logits_grad(const std::vector<int>&,
                                               const std::vector<int>& prefix,
                                               const std::vector<double>& weights,
                                               std::vector<double>& grad) const {
    const int t = static_cast<int>(prefix.size());
    if (static_cast<int>(weights.size()) != vocab_) {
        throw ScoreMismatchError("weight vector size does not match vocabulary");
    }
    if (grad.size() != theta_.size()) grad.resize(theta_.size(), 0.0);
    for (int v = 0; v < vocab_; ++v) {
        grad[static_cast<std::size_t>(t) * vocab_ + v] += weights[static_cast<std::size_t>(v)];
    }
}

std::unique_ptr<Policy> FixedLogitsPolicy::clone() const {
    return std::make_unique<FixedLogitsPolicy>(*this);
}

std::vector<double> masked_log_softmax(const std::vector<double>& logits,
                                       const std::vector<std::uint8_t>& legal) {
    if (legal.size() != logits.size()) {
        throw ScoreMismatchError("legal mask size does not match vocabulary");
    }
    const double ninf = -std::numeric_limits<double>::infinity();
    double hi = ninf;
    for (std::size_t v = 0; v < logits.size(); ++v) {
        if (legal[v] && logits[v] > hi) hi = logits[v];
    }
    if (hi == ninf) throw ScoreMismatchError("legal mask admits no tokens");
    double sum = 0.0;
    for (std::size_t v = 0; v < logits.size(); ++v) {
        if (legal[v]) sum += std::exp(logits[v] - hi);
    }
    const double log_z = hi + std::log(sum);
    std::vector<double> out(logits.size(), ninf);
    for (std::size_t v = 0; v < logits.size(); ++v) {
        if (legal[v]) out[v] = logits[v] - log_z;
    }
    return out;
}

std::vector<double> response_logprobs(const Policy& policy, const std::vector<int>& prompt,
                                      const std::vector<std::uint8_t>& legal,
                                      const std::vector<int>& response) {
    std::vector<double> out;
    out.reserve(response.size());
    std::vector<int> prefix;
    std::vector<double> z;
    for (int token : response) {
        policy.logits(prompt, prefix, z);
        auto lp = masked_log_softmax(z, legal);
        if (token < 0 || token >= static_cast<int>(lp.size()) || !legal[static_cast<std::size_t>(token)]) {
            throw ScoreMismatchError("response token " + std::to_string(token) +
                                     " is not legal under the task mask");
        }
        out.push_back(lp[static_cast<std::size_t>(token)]);
        prefix.push_back(token);
    }
    return out;
}

void accumulate_response_grad(const Policy& policy, const std::vector<int>& prompt,
                              const std::vector<std::uint8_t>& legal,
                              const std::vector<int>& response,
                              const std::vector<double>& token_weights,
                              std::vector<double>& grad) {
    if (token_weights.size() != response.size()) {
        throw ScoreMismatchError("per-token weights do not match response length");
    }
    std::vector<int> prefix;
    std::vector<double> z;
    std::vector<double> w(static_cast<std::size_t>(policy.vocab_size()), 0.0);
    for (std::size_t t = 0; t < response.size(); ++t) {
        const double g = token_weights[t];
        const int token = response[t];
        if (g != 0.0) {
            policy.logits(prompt, prefix, z);
            auto lp = masked_log_softmax(z, legal);
            std::fill(w.begin(), w.end(), 0.0);
            for (std::size_t v = 0; v < w.size(); ++v) {
                if (legal[v]) w[v] = -g * std::exp(lp[v]);
            }
            w[static_cast<std::size_t>(token)] += g;
            policy.accumulate_logits_grad(prompt, prefix, w, grad);
        }
        prefix.push_back(token);
    }
}

}  // namespace mrrlvr::policy
