#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "gad/metrics.hpp"
#include "gad/policy.hpp"
#include "gad/rng.hpp"
#include "gad/teacher.hpp"

namespace gad {

// Category-level distillation study: a single discretized Gaussian student
// against a mixture teacher, trained once by maximum likelihood on teacher
// samples (SeqKD) and once adversarially (REINFORCE + discriminator).
struct ToyConfig {
    int steps = 1500;             // adversarial training steps
    int batch_size = 64;
    double student_lr = 0.05;
    double disc_lr = 1e-3;        // co-training rate; the student must outpace the critic
    int disc_pretrain_steps = 300;  // discriminator-only steps against the frozen initial student
    double disc_pretrain_lr = 0.05;
    int disc_hidden = 16;
    double init_mu = 4.5;         // broad start centered on the support
    double init_log_sigma = std::log(6.0);
    int seqkd_samples = 20000;
    double seqkd_lr = 0.05;
    int seqkd_max_steps = 4000;
    double seqkd_grad_tol = 1e-6;

    void validate() const;
};

// The reference 3-mode fixture over categories {0..9}.
MixtureSpec default_toy_mixture();

struct ToyRunResult {
    Eigen::VectorXd teacher_pmf;
    Eigen::VectorXd seqkd_pmf;
    Eigen::VectorXd gad_pmf;
    std::vector<double> reward_trace;  // mean reward per adversarial step
    double seqkd_mu = 0.0;
    double seqkd_sigma = 0.0;
    double gad_mu = 0.0;
    double gad_sigma = 0.0;
    ModeMass seqkd_mode;  // radius-1 window
    ModeMass gad_mode;
    double seqkd_forward_kl = 0.0;  // KL(teacher || student)
    double seqkd_reverse_kl = 0.0;  // KL(student || teacher)
    double gad_forward_kl = 0.0;
    double gad_reverse_kl = 0.0;

    // Asserts the pmfs are proper distributions.
    void validate() const;
};

// Maximum-likelihood fit against sample_count teacher draws, by Adam on
// the sample cross-entropy until the gradient norm drops below
// seqkd_grad_tol or seqkd_max_steps is hit.
GaussianStudent run_toy_seqkd(const MixtureSpec& spec, int sample_count, const ToyConfig& cfg,
                              const Rng& rng);

// Full adversarial run, including an internal SeqKD run for the three-way
// comparison in the result.
ToyRunResult run_toy_gad(const MixtureSpec& spec, const ToyConfig& cfg, const Rng& rng,
                         GaussianStudent* gad_student_out = nullptr);

// Writes "category,teacher,seqkd,gad" rows for plotting.
void emit_toy_figure_data(const ToyRunResult& result, const std::filesystem::path& path);

}  // namespace gad
