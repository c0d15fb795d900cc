#pragma once

#include <vector>

#include <Eigen/Core>

#include "gad/param_vector.hpp"
#include "gad/rng.hpp"
#include "gad/types.hpp"

namespace gad {

// Temperatures at or below this sample greedily (argmax, ties to the
// lowest id) instead of dividing by a vanishing temperature.
constexpr double kGreedyTemperature = 1e-6;

// Single discretized Gaussian over categories {0, ..., K-1}, parameterized
// by (mu, log sigma) so the scale stays positive. Parameters live in a
// ParamVector so the toy pipeline shares the regular optimizer path.
class GaussianStudent {
public:
    GaussianStudent(double mu, double log_sigma, int support_size);

    double mu() const { return params_.values()[0]; }
    double log_sigma() const { return params_.values()[1]; }
    double sigma() const;
    int support_size() const { return support_size_; }

    ParamVector& params() { return params_; }
    const ParamVector& params() const { return params_; }

private:
    ParamVector params_;  // segment "student.mu_logsigma", length 2
    int support_size_;
};

Eigen::VectorXd gaussian_student_pmf(const GaussianStudent& student);

// Exact (d/dmu, d/dlog_sigma) of log pmf(k), normalization included.
Eigen::Vector2d gaussian_student_grad_logp(const GaussianStudent& student, int k);

int gaussian_student_sample(const GaussianStudent& student, Rng& rng);

// Order-m tabular softmax policy: one logits row per context of the last
// m generated-or-prompt tokens (begin padding fills short contexts). The
// row covers the full vocabulary including EOS. Logits start at zero,
// i.e. the uniform policy.
class AutoregressivePolicy {
public:
    AutoregressivePolicy(Vocab vocab, int order);

    const Vocab& vocab() const { return vocab_; }
    int order() const { return order_; }
    int context_count() const { return context_count_; }

    ParamVector& params() { return params_; }
    const ParamVector& params() const { return params_; }

    int initial_context(const Sequence& prompt) const;
    int advance_context(int ctx, TokenId next) const;

    Eigen::Ref<const Eigen::VectorXd> logits_row(int ctx) const;
    Eigen::Ref<Eigen::VectorXd> logits_row(int ctx);

    // softmax(logits / temperature); sums to one.
    Eigen::VectorXd token_distribution(int ctx, double temperature) const;

private:
    Vocab vocab_;
    int order_;
    int context_count_;
    ParamVector params_;  // segment "gen.logits", row-major context x token
};

// Frozen copy of a policy's parameters, used as the KL reference.
class PolicySnapshot {
public:
    explicit PolicySnapshot(const AutoregressivePolicy& policy) : policy_(policy) {}
    const AutoregressivePolicy& policy() const { return policy_; }

private:
    AutoregressivePolicy policy_;
};

// Autoregressive draw until EOS or max_len tokens. Truncated rollouts are
// returned without a terminal EOS.
Sequence policy_sample(const AutoregressivePolicy& policy, const Sequence& prompt,
                       double temperature, int max_len, Rng& rng);

// Sum over response positions of log softmax(logits/temperature)[token];
// a final EOS is part of the sum, truncation adds no stop term.
double policy_logprob(const AutoregressivePolicy& policy, const Sequence& prompt,
                      const Sequence& response, double temperature);

// Per-position log-probabilities, same convention as policy_logprob.
std::vector<double> policy_token_logprobs(const AutoregressivePolicy& policy,
                                          const Sequence& prompt, const Sequence& response,
                                          double temperature);

// Exact gradient of policy_logprob in the policy's parameter layout. Only
// the visited context rows are nonzero.
ParamVector policy_grad_logprob(const AutoregressivePolicy& policy, const Sequence& prompt,
                                const Sequence& response, double temperature);

// Adds sum_t weights[t] * d log q(token_t) / d params into grad. Policy
// gradients with per-token coefficients (surrogate clipping, KL penalties)
// reduce to this.
void policy_add_weighted_grad_logprob(const AutoregressivePolicy& policy, const Sequence& prompt,
                                      const Sequence& response, const std::vector<double>& weights,
                                      double temperature, ParamVector& grad);

struct CeResult {
    double loss = 0.0;
    ParamVector grad;
};

// Mean-per-token cross-entropy of the teacher response under the policy,
// with its exact gradient.
CeResult ce_loss_and_grad(const AutoregressivePolicy& policy, const Episode& episode,
                          double temperature = 1.0);

}  // namespace gad
