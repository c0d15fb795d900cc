#include "gad/policy.hpp"

#include <cmath>

#include "gad/error.hpp"

namespace gad {

namespace {

// log(sum(exp(x))) with the max factored out.
double log_sum_exp(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
    Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
    return e / e.sum();
}

int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& x) {
    int best = 0;
    for (int i = 1; i < x.size(); ++i) {
        if (x[i] > x[best]) best = i;
    }
    return best;
}

}  // namespace

GaussianStudent::GaussianStudent(double mu, double log_sigma, int support_size)
    : params_(ParamVector::zeros({{"student.mu_logsigma", 2}})), support_size_(support_size) {
    if (support_size_ < 2) throw ArgumentError("GaussianStudent: support size must be >= 2");
    params_.values()[0] = mu;
    params_.values()[1] = log_sigma;
}

double GaussianStudent::sigma() const { return std::exp(log_sigma()); }

Eigen::VectorXd gaussian_student_pmf(const GaussianStudent& student) {
    const double mu = student.mu();
    const double sigma = student.sigma();
    Eigen::VectorXd scores(student.support_size());
    for (int k = 0; k < student.support_size(); ++k) {
        const double z = (static_cast<double>(k) - mu) / sigma;
        scores[k] = -0.5 * z * z;
    }
    return softmax(scores);
}

Eigen::Vector2d gaussian_student_grad_logp(const GaussianStudent& student, int k) {
    if (k < 0 || k >= student.support_size()) {
        throw ArgumentError("gaussian_student_grad_logp: category " + std::to_string(k) +
                            " outside support");
    }
    const double mu = student.mu();
    const double sigma = student.sigma();
    const Eigen::VectorXd pmf = gaussian_student_pmf(student);

    // score(k) = -(k-mu)^2 / (2 sigma^2); grad log p(k) = d score(k) - E[d score].
    auto d_mu = [&](int j) { return (static_cast<double>(j) - mu) / (sigma * sigma); };
    auto d_ls = [&](int j) {
        const double diff = static_cast<double>(j) - mu;
        return diff * diff / (sigma * sigma);
    };
    double mean_d_mu = 0.0;
    double mean_d_ls = 0.0;
    for (int j = 0; j < student.support_size(); ++j) {
        mean_d_mu += pmf[j] * d_mu(j);
        mean_d_ls += pmf[j] * d_ls(j);
    }
    return {d_mu(k) - mean_d_mu, d_ls(k) - mean_d_ls};
}

int gaussian_student_sample(const GaussianStudent& student, Rng& rng) {
    return sample_categorical(gaussian_student_pmf(student), rng);
}

AutoregressivePolicy::AutoregressivePolicy(Vocab vocab, int order)
    : vocab_(vocab), order_(order) {
    if (vocab_.size < 2) throw ArgumentError("AutoregressivePolicy: vocabulary too small");
    if (order_ < 0) throw ArgumentError("AutoregressivePolicy: negative order");
    long long n_ctx = 1;
    for (int i = 0; i < order_; ++i) {
        n_ctx *= vocab_.size + 1;
        if (n_ctx > (1LL << 26)) {
            throw CapacityError("AutoregressivePolicy: context table too large");
        }
    }
    context_count_ = static_cast<int>(n_ctx);
    params_ = ParamVector::zeros(
        {{"gen.logits", static_cast<Eigen::Index>(n_ctx) * vocab_.size}});
}

int AutoregressivePolicy::initial_context(const Sequence& prompt) const {
    const int base = vocab_.size + 1;
    int ctx = 0;
    int pow = 1;
    for (int j = 0; j < order_; ++j) {
        ctx += vocab_.pad() * pow;
        pow *= base;
    }
    for (TokenId t : prompt) ctx = advance_context(ctx, t);
    return ctx;
}

int AutoregressivePolicy::advance_context(int ctx, TokenId next) const {
    if (order_ == 0) return 0;
    const int base = vocab_.size + 1;
    int keep = 1;
    for (int j = 0; j < order_ - 1; ++j) keep *= base;
    return static_cast<int>(next) + base * (ctx % keep);
}

Eigen::Ref<const Eigen::VectorXd> AutoregressivePolicy::logits_row(int ctx) const {
    return params_.values().segment(static_cast<Eigen::Index>(ctx) * vocab_.size, vocab_.size);
}

Eigen::Ref<Eigen::VectorXd> AutoregressivePolicy::logits_row(int ctx) {
    return params_.values().segment(static_cast<Eigen::Index>(ctx) * vocab_.size, vocab_.size);
}

Eigen::VectorXd AutoregressivePolicy::token_distribution(int ctx, double temperature) const {
    if (!(temperature > 0.0)) throw ArgumentError("token_distribution: temperature must be > 0");
    return softmax(logits_row(ctx) / temperature);
}

Sequence policy_sample(const AutoregressivePolicy& policy, const Sequence& prompt,
                       double temperature, int max_len, Rng& rng) {
    if (!(temperature > 0.0)) throw ArgumentError("policy_sample: temperature must be > 0");
    const bool greedy = temperature <= kGreedyTemperature;
    int ctx = policy.initial_context(prompt);
    std::vector<TokenId> tokens;
    for (int step = 0; step < max_len; ++step) {
        TokenId t;
        if (greedy) {
            t = static_cast<TokenId>(argmax_lowest(policy.logits_row(ctx)));
        } else {
            const Eigen::VectorXd p = policy.token_distribution(ctx, temperature);
            t = static_cast<TokenId>(sample_categorical(p, rng));
        }
        tokens.push_back(t);
        if (t == policy.vocab().eos()) break;
        ctx = policy.advance_context(ctx, t);
    }
    return Sequence(std::move(tokens), policy.vocab().eos());
}

std::vector<double> policy_token_logprobs(const AutoregressivePolicy& policy,
                                          const Sequence& prompt, const Sequence& response,
                                          double temperature) {
    if (!(temperature > 0.0)) throw ArgumentError("policy_token_logprobs: temperature must be > 0");
    std::vector<double> out;
    out.reserve(response.size());
    int ctx = policy.initial_context(prompt);
    for (std::size_t i = 0; i < response.size(); ++i) {
        const Eigen::VectorXd scaled = policy.logits_row(ctx) / temperature;
        out.push_back(scaled[response[i]] - log_sum_exp(scaled));
        if (response[i] != policy.vocab().eos()) ctx = policy.advance_context(ctx, response[i]);
    }
    return out;
}

double policy_logprob(const AutoregressivePolicy& policy, const Sequence& prompt,
                      const Sequence& response, double temperature) {
    double total = 0.0;
    for (double lp : policy_token_logprobs(policy, prompt, response, temperature)) total += lp;
    return total;
}

void policy_add_weighted_grad_logprob(const AutoregressivePolicy& policy, const Sequence& prompt,
                                      const Sequence& response, const std::vector<double>& weights,
                                      double temperature, ParamVector& grad) {
    if (!(temperature > 0.0)) {
        throw ArgumentError("policy_add_weighted_grad_logprob: temperature must be > 0");
    }
    if (weights.size() != response.size()) {
        throw ArgumentError("policy_add_weighted_grad_logprob: " + std::to_string(weights.size()) +
                            " weights for " + std::to_string(response.size()) + " tokens");
    }
    if (!grad.same_layout(policy.params())) {
        throw ArgumentError("policy_add_weighted_grad_logprob: gradient layout mismatch");
    }
    const int v = policy.vocab().size;
    int ctx = policy.initial_context(prompt);
    for (std::size_t i = 0; i < response.size(); ++i) {
        const Eigen::VectorXd p = policy.token_distribution(ctx, temperature);
        auto row = grad.values().segment(static_cast<Eigen::Index>(ctx) * v, v);
        row -= (weights[i] / temperature) * p;
        row[response[i]] += weights[i] / temperature;
        if (response[i] != policy.vocab().eos()) ctx = policy.advance_context(ctx, response[i]);
    }
}

ParamVector policy_grad_logprob(const AutoregressivePolicy& policy, const Sequence& prompt,
                                const Sequence& response, double temperature) {
    ParamVector grad = policy.params().zeros_like();
    policy_add_weighted_grad_logprob(policy, prompt, response,
                                     std::vector<double>(response.size(), 1.0), temperature, grad);
    return grad;
}

CeResult ce_loss_and_grad(const AutoregressivePolicy& policy, const Episode& episode,
                          double temperature) {
    if (episode.teacher_response.empty()) {
        throw ArgumentError("ce_loss_and_grad: empty response");
    }
    const double n = static_cast<double>(episode.teacher_response.size());
    CeResult result;
    result.loss = -policy_logprob(policy, episode.prompt, episode.teacher_response, temperature) / n;
    result.grad = policy_grad_logprob(policy, episode.prompt, episode.teacher_response, temperature);
    result.grad.values() *= -1.0 / n;
    return result;
}

}  // namespace gad
