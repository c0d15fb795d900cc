#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gad/discriminator.hpp"
#include "gad/param_vector.hpp"
#include "gad/policy.hpp"
#include "gad/rng.hpp"
#include "gad/teacher.hpp"
#include "gad/types.hpp"

namespace gad {

// Rollout fan-out width: the GAD_THREADS environment variable, clamped to
// at least 1. Parallel and serial execution produce identical results
// because every work item owns a forked rng stream and a dedicated slot.
int thread_count();

// Runs fn(0..n-1) across thread_count() threads over disjoint index
// ranges; the first exception, if any, is rethrown on the caller.
void parallel_for(int n, const std::function<void(int)>& fn);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Moment estimates for one parameter vector.
class AdamState {
public:
    AdamState(Eigen::Index size, AdamConfig cfg);

    const AdamConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return steps_; }

    Eigen::VectorXd& first_moment() { return m_; }
    const Eigen::VectorXd& first_moment() const { return m_; }
    Eigen::VectorXd& second_moment() { return v_; }
    const Eigen::VectorXd& second_moment() const { return v_; }
    void set_step_count(std::int64_t steps);

private:
    AdamConfig cfg_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    std::int64_t steps_ = 0;
};

// In-place bias-corrected Adam update. Rejects non-finite gradients.
void adam_step(ParamVector& params, const ParamVector& grad, AdamState& state);

enum class DiscLossKind { kBradleyTerry, kCrossEntropy };
enum class DiscMode { kOnPolicy, kFrozen };

struct TrainConfig {
    int group_size = 8;            // rollouts per prompt (GRPO group)
    double kl_weight = 1e-3;       // beta, penalty toward the warmup reference
    double clip = 0.2;             // PPO ratio clip epsilon
    int inner_epochs = 1;          // surrogate passes per rollout batch
    double temperature = 0.8;      // sampling and training temperature
    int batch_size = 16;
    double gen_lr = 1e-2;          // warmup / SeqKD generator steps
    double gad_gen_lr = 5e-3;      // RL-stage generator steps
    double disc_lr = 1e-2;
    int warmup_epochs = 1;
    int gad_epochs = 2;
    int seqkd_epochs = 3;
    int disc_pretrain_steps = 10;  // disc-only batches at the start of warmup
    int checkpoint_interval = 50;
    std::uint64_t seed = 0;
    DiscLossKind disc_loss = DiscLossKind::kBradleyTerry;
    DiscMode disc_mode = DiscMode::kOnPolicy;
    double adv_std_floor = 1e-6;   // groups with reward std below this get zero advantages
    int max_response_len = 24;

    void validate() const;
};

// One optimizer step's worth of diagnostics; a CSV row in the harness.
// Fields that a phase does not produce stay 0.
struct StepReport {
    std::int64_t step = 0;
    std::string phase;
    double gen_loss = 0.0;
    double mean_reward = 0.0;
    double mean_abs_advantage = 0.0;
    double disc_loss = 0.0;
    double disc_accuracy = 0.0;
    double mean_response_length = 0.0;
    double kl_to_ref = 0.0;
    double gen_grad_norm = 0.0;
    double disc_grad_norm = 0.0;
    std::int64_t rollout_count = 0;

    // Throws NumericError naming the first non-finite field.
    void check_finite() const;
};

using StepCallback = std::function<void(const StepReport&)>;

// Group-normalized advantages: (r - mean) / population std, or all zeros
// when the std falls below the floor.
std::vector<double> grpo_advantages(const std::vector<double>& rewards, double std_floor);

// One prompt's worth of on-policy data: N sampled responses with their
// discriminator rewards, normalized advantages, and the per-token
// log-probabilities under the sampling-time policy.
struct RolloutGroup {
    Episode episode;
    std::vector<Sequence> responses;
    std::vector<double> rewards;
    std::vector<double> advantages;
    std::vector<std::vector<double>> behavior_logprobs;
};

RolloutGroup sample_rollout_group(const AutoregressivePolicy& policy, const Discriminator& disc,
                                  const Episode& episode, const TrainConfig& cfg, const Rng& rng);

// Clipped-surrogate generator objective over a batch of groups, with the
// per-token KL penalty to the reference, as a minimization problem.
struct GenUpdate {
    double loss = 0.0;       // -(surrogate - kl_weight * kl)
    double surrogate = 0.0;  // mean over groups of (1/N) sum_i sum_t min(rho A, clip(rho) A)
    double kl = 0.0;         // mean per-response token-summed log q_cur - log q_ref
    ParamVector grad;        // d loss / d policy params
};

GenUpdate gad_generator_gradient(const AutoregressivePolicy& policy, const PolicySnapshot& ref,
                                 const std::vector<RolloutGroup>& groups, const TrainConfig& cfg);

// One pass over shuffled mini-batches of teacher responses under
// cross-entropy. Reports are numbered step_base, step_base+1, ...
std::vector<StepReport> seqkd_epoch(AutoregressivePolicy& policy, const Dataset& dataset,
                                    AdamState& adam, const TrainConfig& cfg, const Rng& rng,
                                    std::int64_t step_base, const StepCallback& on_step = {});

// Warmup stage: the first disc_pretrain_steps batches train only the
// discriminator against rollouts of the frozen initial generator; after
// that each batch takes one generator CE step and one discriminator step.
// Runs cfg.warmup_epochs passes.
std::vector<StepReport> warmup(AutoregressivePolicy& policy, Discriminator& disc,
                               const Dataset& dataset, const TrainConfig& cfg, const Rng& rng,
                               std::int64_t step_base, const StepCallback& on_step = {});

// One minimax step on a batch of prompts: sample groups, reward them with
// the discriminator, take a clipped-surrogate generator step, then (in
// on-policy mode) one discriminator step on the same groups.
StepReport gad_step(AutoregressivePolicy& policy, const PolicySnapshot& ref, Discriminator& disc,
                    const Dataset& dataset, const std::vector<int>& batch, AdamState& gen_adam,
                    AdamState& disc_adam, const TrainConfig& cfg, const Rng& rng,
                    std::int64_t step_index);

// REINFORCE with a batch-mean baseline for the single-category toy
// student, plus one paired Bradley-Terry step for its discriminator.
StepReport reinforce_step_toy(GaussianStudent& student, ScorerNet& toy_disc,
                              const TeacherHandle& teacher, AdamState& student_adam,
                              AdamState& disc_adam, int batch_size, const Rng& rng,
                              std::int64_t step_index);

// Off-policy ablation: one SeqKD epoch, then two epochs of discriminator
// fitting against the frozen student, then RL against the now-frozen
// discriminator. The returned copies of the discriminator parameters let
// callers verify the frozen contract.
struct OffPolicyResult {
    std::vector<StepReport> reports;
    Eigen::VectorXd disc_params_before_rl;
    Eigen::VectorXd disc_params_after_rl;
};

OffPolicyResult offpolicy_protocol(AutoregressivePolicy& policy, Discriminator& disc,
                                   const Dataset& dataset, const TrainConfig& cfg, const Rng& rng,
                                   const StepCallback& on_step = {});

}  // namespace gad
