#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gad/rng.hpp"
#include "gad/types.hpp"

namespace gad {

struct MixtureComponent {
    double weight = 1.0;
    double mean = 0.0;
    double std = 1.0;
};

// Discrete Gaussian mixture over categories {0, ..., K-1}. Weights are
// normalized at construction.
class MixtureSpec {
public:
    explicit MixtureSpec(std::vector<MixtureComponent> components, int support_size = 10);

    const std::vector<MixtureComponent>& components() const { return components_; }
    int support_size() const { return support_size_; }
    std::string id() const;

private:
    std::vector<MixtureComponent> components_;
    int support_size_;
};

// Order-m Markov chain over token sequences, conditioned on a coarse
// prompt class. Each table row is a distribution over the full vocabulary
// (EOS included); the hazard schedule adds an extra per-step stop chance:
//   p(EOS at step t)   = h(t) + (1 - h(t)) * row[EOS]
//   p(token a at step t) = (1 - h(t)) * row[a]
// The schedule's last entry persists past its end; an empty schedule is 0.
class MarkovTeacherSpec {
public:
    MarkovTeacherSpec(Vocab vocab, int order, int num_classes,
                      std::vector<Eigen::MatrixXd> tables, std::vector<double> eos_hazard,
                      std::string id);

    const Vocab& vocab() const { return vocab_; }
    int order() const { return order_; }
    int num_classes() const { return num_classes_; }
    int context_count() const;
    const std::string& id() const { return id_; }

    // Class of a prompt: sum of its token ids modulo the class count.
    int prompt_class(const Sequence& prompt) const;

    double hazard(int step) const;

    // Context bookkeeping shared with sampling and scoring. The initial
    // context is all padding, folded over the prompt tokens.
    int initial_context(const Sequence& prompt) const;
    int advance_context(int ctx, TokenId next) const;

    // Per-step distribution over the full vocabulary with the hazard
    // already mixed in. Sums to one.
    Eigen::VectorXd step_distribution(int cls, int ctx, int step) const;

private:
    Vocab vocab_;
    int order_;
    int num_classes_;
    std::vector<Eigen::MatrixXd> tables_;  // per class: context_count x V
    std::vector<double> eos_hazard_;
    std::string id_;
};

// Seeded random teacher: table rows are softmax(sharpness * N(0,1) draws).
// With eos_in_table false the EOS column is zeroed and rows renormalized,
// leaving stopping entirely to the hazard schedule.
MarkovTeacherSpec make_random_markov_spec(Vocab vocab, int order, int num_classes,
                                          double sharpness, std::vector<double> eos_hazard,
                                          bool eos_in_table, Rng rng);

enum class TeacherAccess { kBlackBox, kOracle };

// Access-controlled reference to a teacher process. Black-box handles can
// only sample; probability queries raise an AccessError. Evaluation code
// holds oracle handles, trainers never do.
class TeacherHandle {
public:
    static TeacherHandle black_box(std::shared_ptr<const MixtureSpec> spec);
    static TeacherHandle black_box(std::shared_ptr<const MarkovTeacherSpec> spec);
    static TeacherHandle oracle(std::shared_ptr<const MixtureSpec> spec);
    static TeacherHandle oracle(std::shared_ptr<const MarkovTeacherSpec> spec);

    TeacherAccess access() const { return access_; }
    bool is_mixture() const { return mixture_ != nullptr; }
    bool is_markov() const { return markov_ != nullptr; }
    const MixtureSpec& mixture() const;
    const MarkovTeacherSpec& markov() const;

    // Throws AccessError for black-box handles.
    void require_oracle(const char* op) const;

private:
    TeacherHandle(TeacherAccess access, std::shared_ptr<const MixtureSpec> mixture,
                  std::shared_ptr<const MarkovTeacherSpec> markov);

    TeacherAccess access_;
    std::shared_ptr<const MixtureSpec> mixture_;
    std::shared_ptr<const MarkovTeacherSpec> markov_;
};

// Mixture density evaluated at the integer support points and normalized.
Eigen::VectorXd toy_teacher_pmf(const MixtureSpec& spec);

// I.i.d. category draws from the mixture pmf. Sampling needs no oracle.
std::vector<int> toy_teacher_sample(const TeacherHandle& handle, Rng& rng, int count);

// Autoregressive response draw, stopping at EOS or after max_len tokens.
Sequence seq_teacher_sample(const TeacherHandle& handle, const Sequence& prompt, Rng& rng,
                            int max_len = SeqLimits{}.max_response_len);

// Exact log-probability of a response, including the stop event when the
// response ends with EOS. Oracle handles only.
double seq_teacher_logprob(const TeacherHandle& handle, const Sequence& prompt,
                           const Sequence& response);

// One episode per prompt, in order, with per-prompt forked rng streams.
Dataset build_dataset(const TeacherHandle& handle, const std::vector<Sequence>& prompts,
                      Rng& rng, int max_len = SeqLimits{}.max_response_len);

}  // namespace gad
