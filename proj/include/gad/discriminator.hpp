#pragma once

#include <vector>

#include <Eigen/Core>

#include "gad/param_vector.hpp"
#include "gad/rng.hpp"
#include "gad/types.hpp"

namespace gad {

// Fixed featurization of a (prompt, response) pair: hashed n-gram counts
// of [prompt, SEP, response], L1-normalized, plus one normalized response
// length feature. The hash is FNV-1a 64-bit over the little-endian 4-byte
// token ids (offset 0xcbf29ce484222325, prime 0x100000001b3), reduced
// modulo feature_dim, so feature indices are identical on every platform.
struct FeatureSpec {
    Vocab vocab;
    std::vector<int> ngram_orders = {1, 2};
    int feature_dim = 256;        // hashed block size; must be >= vocab size
    double length_scale = 1.0;    // multiplies len(response) / max_response_len
    int max_response_len = 1536;

    int input_dim() const { return feature_dim + 1; }
    void validate() const;
};

Eigen::VectorXd featurize(const FeatureSpec& spec, const Sequence& prompt,
                          const Sequence& response);

// One-hidden-layer tanh scorer emitting a scalar:
//   score(f) = w2 . tanh(W1 f + b1) + b2
// Weights are N(0, 1/sqrt(fan_in)) at init, biases zero. The hidden width
// is the discriminator's capacity knob.
class ScorerNet {
public:
    ScorerNet(int input_dim, int hidden_dim, Rng& init_rng);
    static ScorerNet zeros(int input_dim, int hidden_dim);

    int input_dim() const { return input_dim_; }
    int hidden_dim() const { return hidden_dim_; }

    ParamVector& params() { return params_; }
    const ParamVector& params() const { return params_; }

    double score_features(const Eigen::VectorXd& features) const;

    // d score / d params at the given input, in the net's layout.
    ParamVector score_grad(const Eigen::VectorXd& features) const;

private:
    ScorerNet(int input_dim, int hidden_dim);

    int input_dim_;
    int hidden_dim_;
    ParamVector params_;  // disc.w1 (H x In, row-major), disc.b1, disc.w2, disc.b2
};

// The scorer D([x, y]): featurization plus the trainable net.
class Discriminator {
public:
    Discriminator(FeatureSpec features, int hidden_dim, Rng& init_rng);

    const FeatureSpec& features() const { return feature_spec_; }
    ScorerNet& net() { return net_; }
    const ScorerNet& net() const { return net_; }

    ParamVector& params() { return net_.params(); }
    const ParamVector& params() const { return net_.params(); }

private:
    FeatureSpec feature_spec_;
    ScorerNet net_;
};

double score(const Discriminator& disc, const Sequence& prompt, const Sequence& response);

// A scored rollout group: one teacher response against N student responses
// for the same prompt.
struct ScoredPair {
    Sequence prompt;
    Sequence teacher_response;
    std::vector<Sequence> student_responses;
    double teacher_score = 0.0;
    std::vector<double> student_scores;
};

// Loss values from raw scores; used for reporting and invariance checks.
double bt_loss_from_scores(double teacher_score, const std::vector<double>& student_scores);
double ce_loss_from_scores(double teacher_score, const std::vector<double>& student_scores);

struct DiscLossResult {
    double loss = 0.0;
    ParamVector grad;
};

// Group Bradley-Terry loss (1/N) sum_i -log sigmoid(D(y_t) - D(y_s_i)) and
// its exact parameter gradient; the shared teacher pathway appears in all
// N pairs.
DiscLossResult bt_loss_and_grad(const Discriminator& disc, const Sequence& prompt,
                                const Sequence& teacher_response,
                                const std::vector<Sequence>& student_responses);

// Binary cross-entropy alternative:
// (1/N) sum_i [-log sigmoid(D(y_t)) - log(1 - sigmoid(D(y_s_i)))].
DiscLossResult ce_loss_and_grad_disc(const Discriminator& disc, const Sequence& prompt,
                                     const Sequence& teacher_response,
                                     const std::vector<Sequence>& student_responses);

// Feature-space variants shared by the toy pipeline.
DiscLossResult bt_loss_and_grad_features(const ScorerNet& net, const Eigen::VectorXd& teacher_features,
                                         const std::vector<Eigen::VectorXd>& student_features);
DiscLossResult ce_loss_and_grad_features(const ScorerNet& net, const Eigen::VectorXd& teacher_features,
                                         const std::vector<Eigen::VectorXd>& student_features);

struct AccuracyPair {
    Sequence prompt;
    Sequence teacher_response;
    Sequence student_response;
};

// Fraction of pairs with D(y_t) > D(y_s); ties count one half.
double disc_accuracy(const Discriminator& disc, const std::vector<AccuracyPair>& pairs);

}  // namespace gad
