#include "gad/discriminator.hpp"

#include <cmath>
#include <cstdint>

#include "gad/error.hpp"

namespace gad {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a_tokens(const TokenId* begin, int count) {
    std::uint64_t h = kFnvOffset;
    for (int i = 0; i < count; ++i) {
        const auto word = static_cast<std::uint32_t>(begin[i]);
        for (int byte = 0; byte < 4; ++byte) {
            h ^= (word >> (8 * byte)) & 0xffu;
            h *= kFnvPrime;
        }
    }
    return h;
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// softplus(x) = log(1 + e^x) without overflow; -log sigmoid(z) = softplus(-z).
double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

void FeatureSpec::validate() const {
    if (ngram_orders.empty()) {
        throw ArgumentError("feature spec needs at least one n-gram order");
    }
    for (int n : ngram_orders) {
        if (n < 1) {
            throw ArgumentError("n-gram orders must be >= 1, got " + std::to_string(n));
        }
    }
    if (feature_dim < vocab.size) {
        throw ArgumentError("feature_dim " + std::to_string(feature_dim) +
                            " is below the vocab size " + std::to_string(vocab.size) +
                            "; unigrams would be forced to collide");
    }
    if (max_response_len < 1) {
        throw ArgumentError("max_response_len must be positive");
    }
    if (!std::isfinite(length_scale)) {
        throw ArgumentError("length_scale must be finite");
    }
}

Eigen::VectorXd featurize(const FeatureSpec& spec, const Sequence& prompt,
                          const Sequence& response) {
    spec.validate();
    const Sequence joint = concat_prompt_response(prompt, response, spec.vocab);
    const auto& tokens = joint.tokens();
    const int len = static_cast<int>(tokens.size());

    Eigen::VectorXd features = Eigen::VectorXd::Zero(spec.input_dim());
    for (int n : spec.ngram_orders) {
        for (int start = 0; start + n <= len; ++start) {
            const std::uint64_t h = fnv1a_tokens(tokens.data() + start, n);
            features[static_cast<int>(h % static_cast<std::uint64_t>(spec.feature_dim))] += 1.0;
        }
    }
    const double total = features.head(spec.feature_dim).sum();
    if (total > 0.0) {
        features.head(spec.feature_dim) /= total;
    }
    features[spec.feature_dim] = spec.length_scale * static_cast<double>(response.size()) /
                                 static_cast<double>(spec.max_response_len);
    return features;
}

ScorerNet::ScorerNet(int input_dim, int hidden_dim)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      params_(ParamVector::zeros({{"disc.w1", static_cast<std::size_t>(hidden_dim) * input_dim},
                                  {"disc.b1", static_cast<std::size_t>(hidden_dim)},
                                  {"disc.w2", static_cast<std::size_t>(hidden_dim)},
                                  {"disc.b2", 1}})) {
    if (input_dim < 1 || hidden_dim < 1) {
        throw ArgumentError("scorer dimensions must be positive");
    }
}

ScorerNet::ScorerNet(int input_dim, int hidden_dim, Rng& init_rng) : ScorerNet(input_dim, hidden_dim) {
    auto w1 = params_.segment("disc.w1");
    const double w1_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (Eigen::Index i = 0; i < w1.size(); ++i) {
        w1[i] = w1_scale * init_rng.next_gaussian();
    }
    auto w2 = params_.segment("disc.w2");
    const double w2_scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (Eigen::Index i = 0; i < w2.size(); ++i) {
        w2[i] = w2_scale * init_rng.next_gaussian();
    }
}

ScorerNet ScorerNet::zeros(int input_dim, int hidden_dim) {
    return ScorerNet(input_dim, hidden_dim);
}

double ScorerNet::score_features(const Eigen::VectorXd& features) const {
    if (features.size() != input_dim_) {
        throw ArgumentError("feature vector has size " + std::to_string(features.size()) +
                            ", scorer expects " + std::to_string(input_dim_));
    }
    const auto w1 = params_.segment("disc.w1");
    const auto b1 = params_.segment("disc.b1");
    const auto w2 = params_.segment("disc.w2");
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        weights(w1.data(), hidden_dim_, input_dim_);
    const Eigen::VectorXd hidden = ((weights * features) + b1).array().tanh();
    return w2.dot(hidden) + params_.segment("disc.b2")[0];
}

ParamVector ScorerNet::score_grad(const Eigen::VectorXd& features) const {
    if (features.size() != input_dim_) {
        throw ArgumentError("feature vector has size " + std::to_string(features.size()) +
                            ", scorer expects " + std::to_string(input_dim_));
    }
    const auto w1 = params_.segment("disc.w1");
    const auto b1 = params_.segment("disc.b1");
    const auto w2 = params_.segment("disc.w2");
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        weights(w1.data(), hidden_dim_, input_dim_);
    const Eigen::VectorXd hidden = ((weights * features) + b1).array().tanh();

    ParamVector grad = params_.zeros_like();
    // d score / d b1_j = w2_j (1 - h_j^2); w1 rows pick up that times the input.
    const Eigen::VectorXd back = w2.array() * (1.0 - hidden.array().square());
    grad.segment("disc.b1") = back;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw1(
        grad.segment("disc.w1").data(), hidden_dim_, input_dim_);
    gw1 = back * features.transpose();
    grad.segment("disc.w2") = hidden;
    grad.segment("disc.b2")[0] = 1.0;
    return grad;
}

Discriminator::Discriminator(FeatureSpec features, int hidden_dim, Rng& init_rng)
    : feature_spec_(std::move(features)), net_(feature_spec_.input_dim(), hidden_dim, init_rng) {
    feature_spec_.validate();
}

double score(const Discriminator& disc, const Sequence& prompt, const Sequence& response) {
    return disc.net().score_features(featurize(disc.features(), prompt, response));
}

double bt_loss_from_scores(double teacher_score, const std::vector<double>& student_scores) {
    if (student_scores.empty()) {
        throw ArgumentError("Bradley-Terry loss needs at least one student score");
    }
    double loss = 0.0;
    for (double s : student_scores) {
        loss += softplus(s - teacher_score);
    }
    return loss / static_cast<double>(student_scores.size());
}

double ce_loss_from_scores(double teacher_score, const std::vector<double>& student_scores) {
    if (student_scores.empty()) {
        throw ArgumentError("cross-entropy loss needs at least one student score");
    }
    double loss = 0.0;
    for (double s : student_scores) {
        loss += softplus(-teacher_score) + softplus(s);
    }
    return loss / static_cast<double>(student_scores.size());
}

namespace {

// Shared core: both losses reduce to per-score coefficients that multiply
// the scorer gradient at each input. The teacher gradient is evaluated once
// even though it enters every pair.
DiscLossResult scored_loss(const ScorerNet& net, const Eigen::VectorXd& teacher_features,
                           const std::vector<Eigen::VectorXd>& student_features, bool bradley_terry) {
    if (student_features.empty()) {
        throw ArgumentError("discriminator loss needs at least one student response");
    }
    const double n = static_cast<double>(student_features.size());
    const double s_t = net.score_features(teacher_features);

    DiscLossResult result;
    result.grad = net.params().zeros_like();
    double teacher_coeff = 0.0;
    for (const auto& f : student_features) {
        const double s_i = net.score_features(f);
        double student_coeff = 0.0;
        if (bradley_terry) {
            const double margin = s_t - s_i;
            result.loss += softplus(-margin);
            const double slope = 1.0 - sigmoid(margin);  // d softplus(-z) / d(-z) evaluated stably
            teacher_coeff -= slope;
            student_coeff = slope;
        } else {
            result.loss += softplus(-s_t) + softplus(s_i);
            teacher_coeff += sigmoid(s_t) - 1.0;
            student_coeff = sigmoid(s_i);
        }
        result.grad.values() += (student_coeff / n) * net.score_grad(f).values();
    }
    result.loss /= n;
    result.grad.values() += (teacher_coeff / n) * net.score_grad(teacher_features).values();
    return result;
}

DiscLossResult sequence_loss(const Discriminator& disc, const Sequence& prompt,
                             const Sequence& teacher_response,
                             const std::vector<Sequence>& student_responses, bool bradley_terry) {
    const Eigen::VectorXd teacher_features = featurize(disc.features(), prompt, teacher_response);
    std::vector<Eigen::VectorXd> student_features;
    student_features.reserve(student_responses.size());
    for (const auto& response : student_responses) {
        student_features.push_back(featurize(disc.features(), prompt, response));
    }
    return scored_loss(disc.net(), teacher_features, student_features, bradley_terry);
}

}  // namespace

DiscLossResult bt_loss_and_grad(const Discriminator& disc, const Sequence& prompt,
                                const Sequence& teacher_response,
                                const std::vector<Sequence>& student_responses) {
    return sequence_loss(disc, prompt, teacher_response, student_responses, /*bradley_terry=*/true);
}

DiscLossResult ce_loss_and_grad_disc(const Discriminator& disc, const Sequence& prompt,
                                     const Sequence& teacher_response,
                                     const std::vector<Sequence>& student_responses) {
    return sequence_loss(disc, prompt, teacher_response, student_responses, /*bradley_terry=*/false);
}

DiscLossResult bt_loss_and_grad_features(const ScorerNet& net, const Eigen::VectorXd& teacher_features,
                                         const std::vector<Eigen::VectorXd>& student_features) {
    return scored_loss(net, teacher_features, student_features, /*bradley_terry=*/true);
}

DiscLossResult ce_loss_and_grad_features(const ScorerNet& net, const Eigen::VectorXd& teacher_features,
                                         const std::vector<Eigen::VectorXd>& student_features) {
    return scored_loss(net, teacher_features, student_features, /*bradley_terry=*/false);
}

double disc_accuracy(const Discriminator& disc, const std::vector<AccuracyPair>& pairs) {
    if (pairs.empty()) {
        throw ArgumentError("accuracy needs at least one pair");
    }
    double correct = 0.0;
    for (const auto& pair : pairs) {
        const double s_t = score(disc, pair.prompt, pair.teacher_response);
        const double s_s = score(disc, pair.prompt, pair.student_response);
        if (s_t > s_s) {
            correct += 1.0;
        } else if (s_t == s_s) {
            correct += 0.5;
        }
    }
    return correct / static_cast<double>(pairs.size());
}

}  // namespace gad
