#include "gad/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "gad/error.hpp"

namespace gad {

int thread_count() {
    const char* env = std::getenv("GAD_THREADS");
    if (env == nullptr || *env == '\0') {
        return 1;
    }
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || parsed < 1) {
        return 1;
    }
    return static_cast<int>(std::min(parsed, 256L));
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            // Contiguous slices keep each item on a fixed thread count
            // -independent slot; results cannot depend on scheduling.
            const int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
            const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
            for (int i = lo; i < hi; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

AdamState::AdamState(Eigen::Index size, AdamConfig cfg)
    : cfg_(cfg), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {
    if (size < 1) {
        throw ArgumentError("optimizer state needs at least one parameter");
    }
    if (!(cfg.lr >= 0.0) || !(cfg.eps > 0.0) || !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
        !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
        throw ArgumentError("invalid Adam hyperparameters");
    }
}

void AdamState::set_step_count(std::int64_t steps) {
    if (steps < 0) {
        throw ArgumentError("Adam step count cannot be negative");
    }
    steps_ = steps;
}

void adam_step(ParamVector& params, const ParamVector& grad, AdamState& state) {
    if (!params.same_layout(grad)) {
        throw ArgumentError("adam_step: gradient layout does not match parameters");
    }
    if (params.size() != state.first_moment().size()) {
        throw ArgumentError("adam_step: optimizer state sized " +
                            std::to_string(state.first_moment().size()) + " for " +
                            std::to_string(params.size()) + " parameters");
    }
    if (!grad.values().allFinite()) {
        throw NumericError("adam_step: non-finite gradient");
    }
    const AdamConfig& c = state.config();
    state.set_step_count(state.step_count() + 1);
    auto& m = state.first_moment();
    auto& v = state.second_moment();
    m = c.beta1 * m + (1.0 - c.beta1) * grad.values();
    v = c.beta2 * v + (1.0 - c.beta2) * grad.values().cwiseAbs2();
    const double t = static_cast<double>(state.step_count());
    const double corr1 = 1.0 - std::pow(c.beta1, t);
    const double corr2 = 1.0 - std::pow(c.beta2, t);
    params.values().array() -= c.lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + c.eps);
    if (!params.values().allFinite()) {
        throw NumericError("adam_step: parameters became non-finite");
    }
}

void TrainConfig::validate() const {
    const auto fail = [](const std::string& what) {
        throw ConfigError(ConfigError::Kind::kInvariant, what);
    };
    if (group_size < 1) fail("group_size must be >= 1");
    if (!(kl_weight >= 0.0)) fail("kl_weight must be >= 0");
    if (!(clip > 0.0 && clip < 1.0)) fail("clip must lie in (0, 1)");
    if (inner_epochs < 1) fail("inner_epochs must be >= 1");
    if (!(temperature > 0.0)) fail("temperature must be > 0");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(gen_lr >= 0.0) || !(gad_gen_lr >= 0.0) || !(disc_lr >= 0.0)) {
        fail("learning rates must be >= 0");
    }
    if (warmup_epochs < 0 || gad_epochs < 0 || seqkd_epochs < 0) {
        fail("epoch counts must be >= 0");
    }
    if (disc_pretrain_steps < 0) fail("disc_pretrain_steps must be >= 0");
    if (checkpoint_interval < 1) fail("checkpoint_interval must be >= 1");
    if (!(adv_std_floor >= 0.0)) fail("adv_std_floor must be >= 0");
    if (max_response_len < 1) fail("max_response_len must be >= 1");
}

void StepReport::check_finite() const {
    const std::pair<const char*, double> fields[] = {
        {"gen_loss", gen_loss},
        {"mean_reward", mean_reward},
        {"mean_abs_advantage", mean_abs_advantage},
        {"disc_loss", disc_loss},
        {"disc_accuracy", disc_accuracy},
        {"mean_response_length", mean_response_length},
        {"kl_to_ref", kl_to_ref},
        {"gen_grad_norm", gen_grad_norm},
        {"disc_grad_norm", disc_grad_norm},
    };
    for (const auto& [name, value] : fields) {
        if (!std::isfinite(value)) {
            throw NumericError("step " + std::to_string(step) + " (" + phase + "): " + name +
                               " is not finite");
        }
    }
}

std::vector<double> grpo_advantages(const std::vector<double>& rewards, double std_floor) {
    if (rewards.empty()) {
        throw ArgumentError("advantage normalization needs at least one reward");
    }
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) {
        mean += r;
    }
    mean /= n;
    double var = 0.0;
    for (double r : rewards) {
        var += (r - mean) * (r - mean);
    }
    const double std_dev = std::sqrt(var / n);
    if (std_dev < std_floor) {
        return std::vector<double>(rewards.size(), 0.0);
    }
    std::vector<double> advantages(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        advantages[i] = (rewards[i] - mean) / std_dev;
    }
    return advantages;
}

RolloutGroup sample_rollout_group(const AutoregressivePolicy& policy, const Discriminator& disc,
                                  const Episode& episode, const TrainConfig& cfg, const Rng& rng) {
    RolloutGroup group{episode, {}, {}, {}, {}};
    group.responses.reserve(cfg.group_size);
    group.rewards.reserve(cfg.group_size);
    group.behavior_logprobs.reserve(cfg.group_size);
    for (int i = 0; i < cfg.group_size; ++i) {
        Rng stream = rng_fork(rng, "rollout/" + std::to_string(i));
        Sequence response =
            policy_sample(policy, episode.prompt, cfg.temperature, cfg.max_response_len, stream);
        group.rewards.push_back(score(disc, episode.prompt, response));
        group.behavior_logprobs.push_back(
            policy_token_logprobs(policy, episode.prompt, response, cfg.temperature));
        group.responses.push_back(std::move(response));
    }
    group.advantages = grpo_advantages(group.rewards, cfg.adv_std_floor);
    return group;
}

GenUpdate gad_generator_gradient(const AutoregressivePolicy& policy, const PolicySnapshot& ref,
                                 const std::vector<RolloutGroup>& groups, const TrainConfig& cfg) {
    if (groups.empty()) {
        throw ArgumentError("generator update needs at least one rollout group");
    }
    GenUpdate out;
    out.grad = policy.params().zeros_like();
    const double group_scale = 1.0 / static_cast<double>(groups.size());
    for (const auto& group : groups) {
        const double n_inv = 1.0 / static_cast<double>(group.responses.size());
        for (std::size_t i = 0; i < group.responses.size(); ++i) {
            const Sequence& response = group.responses[i];
            const double adv = group.advantages[i];
            const std::vector<double> cur =
                policy_token_logprobs(policy, group.episode.prompt, response, cfg.temperature);
            const std::vector<double> ref_lp =
                policy_token_logprobs(ref.policy(), group.episode.prompt, response, cfg.temperature);
            const std::vector<double>& behavior = group.behavior_logprobs[i];

            // Per-token weight on d log q(token_t): the surviving min()
            // branch contributes adv * rho_t, a saturated clip contributes
            // nothing, and the KL penalty always contributes -kl_weight.
            std::vector<double> weights(response.size());
            for (std::size_t t = 0; t < response.size(); ++t) {
                const double rho = std::exp(cur[t] - behavior[t]);
                const double unclipped = rho * adv;
                const double clipped = std::clamp(rho, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
                out.surrogate += group_scale * n_inv * std::min(unclipped, clipped);
                weights[t] = (unclipped <= clipped) ? adv * rho : 0.0;
                const double kl_t = cur[t] - ref_lp[t];
                out.kl += group_scale * n_inv * kl_t;
                weights[t] -= cfg.kl_weight;
                // Objective is maximized; the minimized loss flips signs.
                weights[t] *= -group_scale * n_inv;
            }
            policy_add_weighted_grad_logprob(policy, group.episode.prompt, response, weights,
                                             cfg.temperature, out.grad);
        }
    }
    out.loss = -(out.surrogate - cfg.kl_weight * out.kl);
    return out;
}

namespace {

// Consecutive slices of a (shuffled) index order, last partial slice kept.
std::vector<std::vector<int>> slice_batches(const std::vector<int>& order, int batch_size) {
    std::vector<std::vector<int>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t stop = std::min(order.size(), start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + stop);
    }
    return batches;
}

double mean_response_length(const std::vector<Sequence>& responses) {
    double total = 0.0;
    for (const auto& r : responses) {
        total += static_cast<double>(r.size());
    }
    return responses.empty() ? 0.0 : total / static_cast<double>(responses.size());
}

void finish_report(StepReport& report, const StepCallback& on_step) {
    report.check_finite();
    if (on_step) {
        on_step(report);
    }
}

}  // namespace

std::vector<StepReport> seqkd_epoch(AutoregressivePolicy& policy, const Dataset& dataset,
                                    AdamState& adam, const TrainConfig& cfg, const Rng& rng,
                                    std::int64_t step_base, const StepCallback& on_step) {
    cfg.validate();
    Rng shuffle_rng = rng_fork(rng, "shuffle");
    const std::vector<std::vector<int>> batches =
        slice_batches(shuffled_indices(static_cast<int>(dataset.size()), shuffle_rng), cfg.batch_size);

    std::vector<StepReport> reports;
    reports.reserve(batches.size());
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const auto& batch = batches[b];
        ParamVector grad = policy.params().zeros_like();
        double loss = 0.0;
        double length = 0.0;
        for (int idx : batch) {
            const Episode& episode = dataset.episode(idx);
            CeResult ce = ce_loss_and_grad(policy, episode);
            loss += ce.loss;
            grad.values() += ce.grad.values();
            length += static_cast<double>(episode.teacher_response.size());
        }
        const double scale = 1.0 / static_cast<double>(batch.size());
        loss *= scale;
        grad.values() *= scale;
        adam_step(policy.params(), grad, adam);

        StepReport report;
        report.step = step_base + static_cast<std::int64_t>(b);
        report.phase = "seqkd";
        report.gen_loss = loss;
        report.mean_response_length = length * scale;
        report.gen_grad_norm = grad.values().norm();
        finish_report(report, on_step);
        reports.push_back(std::move(report));
    }
    return reports;
}

namespace {

// Shared by warmup and the off-policy protocol: one discriminator update
// on (teacher response, sampled student responses) groups, reporting the
// loss, pre-update pairwise accuracy, and gradient norm.
struct DiscBatchStats {
    double loss = 0.0;
    double accuracy = 0.0;
    double grad_norm = 0.0;
    double mean_length = 0.0;
};

DiscBatchStats disc_step_on_groups(Discriminator& disc, AdamState& disc_adam, const Dataset& dataset,
                                   const std::vector<int>& batch,
                                   const std::vector<std::vector<Sequence>>& responses,
                                   DiscLossKind kind) {
    DiscBatchStats stats;
    double pairs = 0.0;
    double lengths = 0.0;
    double count = 0.0;
    ParamVector grad = disc.params().zeros_like();
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const Episode& episode = dataset.episode(batch[j]);
        const double teacher_score = score(disc, episode.prompt, episode.teacher_response);
        for (const auto& response : responses[j]) {
            const double student_score = score(disc, episode.prompt, response);
            if (teacher_score > student_score) {
                stats.accuracy += 1.0;
            } else if (teacher_score == student_score) {
                stats.accuracy += 0.5;
            }
            pairs += 1.0;
            lengths += static_cast<double>(response.size());
            count += 1.0;
        }
        const DiscLossResult result =
            kind == DiscLossKind::kBradleyTerry
                ? bt_loss_and_grad(disc, episode.prompt, episode.teacher_response, responses[j])
                : ce_loss_and_grad_disc(disc, episode.prompt, episode.teacher_response, responses[j]);
        stats.loss += result.loss;
        grad.values() += result.grad.values();
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    stats.loss *= scale;
    grad.values() *= scale;
    stats.grad_norm = grad.values().norm();
    stats.accuracy /= pairs;
    stats.mean_length = lengths / count;
    adam_step(disc.params(), grad, disc_adam);
    return stats;
}

}  // namespace

std::vector<StepReport> warmup(AutoregressivePolicy& policy, Discriminator& disc,
                               const Dataset& dataset, const TrainConfig& cfg, const Rng& rng,
                               std::int64_t step_base, const StepCallback& on_step) {
    cfg.validate();
    AdamState gen_adam(policy.params().size(), AdamConfig{.lr = cfg.gen_lr});
    AdamState disc_adam(disc.params().size(), AdamConfig{.lr = cfg.disc_lr});

    std::vector<StepReport> reports;
    std::int64_t batch_counter = 0;
    for (int epoch = 0; epoch < cfg.warmup_epochs; ++epoch) {
        const Rng epoch_rng = rng_fork(rng, "epoch/" + std::to_string(epoch));
        Rng shuffle_rng = rng_fork(epoch_rng, "shuffle");
        const std::vector<std::vector<int>> batches = slice_batches(
            shuffled_indices(static_cast<int>(dataset.size()), shuffle_rng), cfg.batch_size);
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            const Rng batch_rng = rng_fork(epoch_rng, "batch/" + std::to_string(b));
            const bool pretrain = batch_counter < cfg.disc_pretrain_steps;

            StepReport report;
            report.step = step_base + batch_counter;
            report.phase = pretrain ? "warmup-disc" : "warmup";

            if (!pretrain) {
                ParamVector grad = policy.params().zeros_like();
                double loss = 0.0;
                for (int idx : batch) {
                    CeResult ce = ce_loss_and_grad(policy, dataset.episode(idx));
                    loss += ce.loss;
                    grad.values() += ce.grad.values();
                }
                const double scale = 1.0 / static_cast<double>(batch.size());
                loss *= scale;
                grad.values() *= scale;
                adam_step(policy.params(), grad, gen_adam);
                report.gen_loss = loss;
                report.gen_grad_norm = grad.values().norm();
            }

            // One response from the current generator per prompt.
            std::vector<std::vector<Sequence>> responses(batch.size());
            parallel_for(static_cast<int>(batch.size()), [&](int j) {
                Rng stream = rng_fork(batch_rng, "rollout/" + std::to_string(j));
                responses[j].push_back(policy_sample(policy, dataset.episode(batch[j]).prompt,
                                                     cfg.temperature, cfg.max_response_len, stream));
            });
            const DiscBatchStats stats =
                disc_step_on_groups(disc, disc_adam, dataset, batch, responses, cfg.disc_loss);
            report.disc_loss = stats.loss;
            report.disc_accuracy = stats.accuracy;
            report.disc_grad_norm = stats.grad_norm;
            report.mean_response_length = stats.mean_length;
            report.rollout_count = static_cast<std::int64_t>(batch.size());

            finish_report(report, on_step);
            reports.push_back(std::move(report));
            ++batch_counter;
        }
    }
    return reports;
}

StepReport gad_step(AutoregressivePolicy& policy, const PolicySnapshot& ref, Discriminator& disc,
                    const Dataset& dataset, const std::vector<int>& batch, AdamState& gen_adam,
                    AdamState& disc_adam, const TrainConfig& cfg, const Rng& rng,
                    std::int64_t step_index) {
    cfg.validate();
    if (batch.empty()) {
        throw ArgumentError("gad_step: empty batch");
    }

    std::vector<RolloutGroup> groups(batch.size());
    parallel_for(static_cast<int>(batch.size()), [&](int b) {
        groups[b] = sample_rollout_group(policy, disc, dataset.episode(batch[b]), cfg,
                                         rng_fork(rng, "group/" + std::to_string(b)));
    });

    StepReport report;
    report.step = step_index;
    report.phase = "gad";

    GenUpdate first_update;
    for (int inner = 0; inner < cfg.inner_epochs; ++inner) {
        GenUpdate update = gad_generator_gradient(policy, ref, groups, cfg);
        if (!std::isfinite(update.loss)) {
            throw NumericError("gad step " + std::to_string(step_index) +
                               ": generator loss is not finite (surrogate " +
                               std::to_string(update.surrogate) + ", kl " + std::to_string(update.kl) +
                               ")");
        }
        adam_step(policy.params(), update.grad, gen_adam);
        if (inner == 0) {
            first_update = std::move(update);
        }
    }
    report.gen_loss = first_update.loss;
    report.kl_to_ref = first_update.kl;
    report.gen_grad_norm = first_update.grad.values().norm();

    double reward_sum = 0.0;
    double abs_adv_sum = 0.0;
    double length_sum = 0.0;
    double pairs = 0.0;
    double accuracy = 0.0;
    double disc_loss = 0.0;
    for (const auto& group : groups) {
        const double teacher_score = score(disc, group.episode.prompt, group.episode.teacher_response);
        for (std::size_t i = 0; i < group.responses.size(); ++i) {
            reward_sum += group.rewards[i];
            abs_adv_sum += std::abs(group.advantages[i]);
            length_sum += static_cast<double>(group.responses[i].size());
            if (teacher_score > group.rewards[i]) {
                accuracy += 1.0;
            } else if (teacher_score == group.rewards[i]) {
                accuracy += 0.5;
            }
            pairs += 1.0;
        }
        disc_loss += cfg.disc_loss == DiscLossKind::kBradleyTerry
                         ? bt_loss_from_scores(teacher_score, group.rewards)
                         : ce_loss_from_scores(teacher_score, group.rewards);
    }
    report.mean_reward = reward_sum / pairs;
    report.mean_abs_advantage = abs_adv_sum / pairs;
    report.mean_response_length = length_sum / pairs;
    report.disc_accuracy = accuracy / pairs;
    report.disc_loss = disc_loss / static_cast<double>(groups.size());
    report.rollout_count = static_cast<std::int64_t>(pairs);

    if (cfg.disc_mode == DiscMode::kOnPolicy) {
        ParamVector grad = disc.params().zeros_like();
        for (const auto& group : groups) {
            const DiscLossResult result =
                cfg.disc_loss == DiscLossKind::kBradleyTerry
                    ? bt_loss_and_grad(disc, group.episode.prompt, group.episode.teacher_response,
                                       group.responses)
                    : ce_loss_and_grad_disc(disc, group.episode.prompt,
                                            group.episode.teacher_response, group.responses);
            grad.values() += result.grad.values();
        }
        grad.values() /= static_cast<double>(groups.size());
        adam_step(disc.params(), grad, disc_adam);
        report.disc_grad_norm = grad.values().norm();
    }

    report.check_finite();
    return report;
}

StepReport reinforce_step_toy(GaussianStudent& student, ScorerNet& toy_disc,
                              const TeacherHandle& teacher, AdamState& student_adam,
                              AdamState& disc_adam, int batch_size, const Rng& rng,
                              std::int64_t step_index) {
    if (batch_size < 1) {
        throw ArgumentError("reinforce_step_toy: batch_size must be >= 1");
    }
    const int support = student.support_size();
    if (toy_disc.input_dim() != support) {
        throw ArgumentError("toy discriminator input dim " + std::to_string(toy_disc.input_dim()) +
                            " does not match the student's support " + std::to_string(support));
    }
    const auto one_hot = [support](int k) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(support);
        f[k] = 1.0;
        return f;
    };

    Rng student_rng = rng_fork(rng, "student");
    Rng teacher_rng = rng_fork(rng, "teacher");
    std::vector<int> student_draws(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        student_draws[i] = gaussian_student_sample(student, student_rng);
    }
    const std::vector<int> teacher_draws = toy_teacher_sample(teacher, teacher_rng, batch_size);

    std::vector<double> rewards(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        rewards[i] = toy_disc.score_features(one_hot(student_draws[i]));
    }
    double baseline = 0.0;
    for (double r : rewards) {
        baseline += r;
    }
    baseline /= static_cast<double>(batch_size);

    // Maximize the mean centered reward: descend on its negation.
    ParamVector student_grad = student.params().zeros_like();
    double abs_adv = 0.0;
    for (int i = 0; i < batch_size; ++i) {
        const double centered = rewards[i] - baseline;
        abs_adv += std::abs(centered);
        student_grad.values() -=
            (centered / static_cast<double>(batch_size)) *
            gaussian_student_grad_logp(student, student_draws[i]);
    }
    adam_step(student.params(), student_grad, student_adam);

    // Paired Bradley-Terry discriminator step: i-th teacher draw against
    // i-th student draw.
    ParamVector disc_grad = toy_disc.params().zeros_like();
    double disc_loss = 0.0;
    double accuracy = 0.0;
    for (int i = 0; i < batch_size; ++i) {
        const Eigen::VectorXd teacher_features = one_hot(teacher_draws[i]);
        const double teacher_score = toy_disc.score_features(teacher_features);
        if (teacher_score > rewards[i]) {
            accuracy += 1.0;
        } else if (teacher_score == rewards[i]) {
            accuracy += 0.5;
        }
        const DiscLossResult result =
            bt_loss_and_grad_features(toy_disc, teacher_features, {one_hot(student_draws[i])});
        disc_loss += result.loss;
        disc_grad.values() += result.grad.values();
    }
    const double scale = 1.0 / static_cast<double>(batch_size);
    disc_loss *= scale;
    disc_grad.values() *= scale;
    adam_step(toy_disc.params(), disc_grad, disc_adam);

    StepReport report;
    report.step = step_index;
    report.phase = "toy-gad";
    report.gen_loss = -baseline;
    report.mean_reward = baseline;
    report.mean_abs_advantage = abs_adv * scale;
    report.disc_loss = disc_loss;
    report.disc_accuracy = accuracy * scale;
    report.mean_response_length = 1.0;
    report.gen_grad_norm = student_grad.values().norm();
    report.disc_grad_norm = disc_grad.values().norm();
    report.rollout_count = batch_size;
    report.check_finite();
    return report;
}

OffPolicyResult offpolicy_protocol(AutoregressivePolicy& policy, Discriminator& disc,
                                   const Dataset& dataset, const TrainConfig& cfg, const Rng& rng,
                                   const StepCallback& on_step) {
    cfg.validate();
    OffPolicyResult result;
    std::int64_t step = 0;

    // Stage 1: one SeqKD epoch on the student.
    {
        AdamState gen_adam(policy.params().size(), AdamConfig{.lr = cfg.gen_lr});
        auto reports = seqkd_epoch(policy, dataset, gen_adam, cfg, rng_fork(rng, "op-seqkd"), step,
                                   on_step);
        step += static_cast<std::int64_t>(reports.size());
        result.reports.insert(result.reports.end(), std::make_move_iterator(reports.begin()),
                              std::make_move_iterator(reports.end()));
    }

    // Stage 2: student frozen, discriminator fit for two epochs on its output.
    {
        AdamState disc_adam(disc.params().size(), AdamConfig{.lr = cfg.disc_lr});
        for (int epoch = 0; epoch < 2; ++epoch) {
            const Rng epoch_rng = rng_fork(rng, "op-disc/" + std::to_string(epoch));
            Rng shuffle_rng = rng_fork(epoch_rng, "shuffle");
            const std::vector<std::vector<int>> batches = slice_batches(
                shuffled_indices(static_cast<int>(dataset.size()), shuffle_rng), cfg.batch_size);
            for (std::size_t b = 0; b < batches.size(); ++b) {
                const auto& batch = batches[b];
                const Rng batch_rng = rng_fork(epoch_rng, "batch/" + std::to_string(b));
                std::vector<std::vector<Sequence>> responses(batch.size());
                parallel_for(static_cast<int>(batch.size()), [&](int j) {
                    Rng prompt_rng = rng_fork(batch_rng, "episode/" + std::to_string(j));
                    for (int i = 0; i < cfg.group_size; ++i) {
                        Rng stream = rng_fork(prompt_rng, "rollout/" + std::to_string(i));
                        responses[j].push_back(policy_sample(policy, dataset.episode(batch[j]).prompt,
                                                             cfg.temperature, cfg.max_response_len,
                                                             stream));
                    }
                });
                const DiscBatchStats stats =
                    disc_step_on_groups(disc, disc_adam, dataset, batch, responses, cfg.disc_loss);
                StepReport report;
                report.step = step;
                report.phase = "disc-fit";
                report.disc_loss = stats.loss;
                report.disc_accuracy = stats.accuracy;
                report.disc_grad_norm = stats.grad_norm;
                report.mean_response_length = stats.mean_length;
                report.rollout_count = static_cast<std::int64_t>(batch.size()) * cfg.group_size;
                finish_report(report, on_step);
                result.reports.push_back(std::move(report));
                ++step;
            }
        }
    }

    // Stage 3: RL against the frozen discriminator.
    result.disc_params_before_rl = disc.params().values();
    {
        TrainConfig rl_cfg = cfg;
        rl_cfg.disc_mode = DiscMode::kFrozen;
        const PolicySnapshot ref(policy);
        AdamState gen_adam(policy.params().size(), AdamConfig{.lr = cfg.gad_gen_lr});
        AdamState disc_adam(disc.params().size(), AdamConfig{.lr = cfg.disc_lr});  // never stepped
        for (int epoch = 0; epoch < cfg.gad_epochs; ++epoch) {
            const Rng epoch_rng = rng_fork(rng, "op-rl/" + std::to_string(epoch));
            Rng shuffle_rng = rng_fork(epoch_rng, "shuffle");
            const std::vector<std::vector<int>> batches = slice_batches(
                shuffled_indices(static_cast<int>(dataset.size()), shuffle_rng), cfg.batch_size);
            for (std::size_t b = 0; b < batches.size(); ++b) {
                StepReport report =
                    gad_step(policy, ref, disc, dataset, batches[b], gen_adam, disc_adam, rl_cfg,
                             rng_fork(epoch_rng, "batch/" + std::to_string(b)), step);
                if (on_step) {
                    on_step(report);
                }
                result.reports.push_back(std::move(report));
                ++step;
            }
        }
    }
    result.disc_params_after_rl = disc.params().values();
    return result;
}

}  // namespace gad
