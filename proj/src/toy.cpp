#include "gad/toy.hpp"

#include <memory>
#include <string>
#include <utility>

#include "gad/error.hpp"
#include "gad/io_util.hpp"
#include "gad/trainers.hpp"

namespace gad {

void ToyConfig::validate() const {
    const auto fail = [](const std::string& what) {
        throw ConfigError(ConfigError::Kind::kInvariant, what);
    };
    if (steps < 0) fail("toy steps must be >= 0");
    if (batch_size < 1) fail("toy batch_size must be >= 1");
    if (!(student_lr >= 0.0) || !(disc_lr >= 0.0) || !(seqkd_lr >= 0.0) ||
        !(disc_pretrain_lr >= 0.0)) {
        fail("toy learning rates must be >= 0");
    }
    if (disc_pretrain_steps < 0) fail("toy disc_pretrain_steps must be >= 0");
    if (disc_hidden < 1) fail("toy disc_hidden must be >= 1");
    if (seqkd_samples < 100) fail("toy seqkd_samples must be >= 100");
    if (seqkd_max_steps < 0) fail("toy seqkd_max_steps must be >= 0");
    if (!(seqkd_grad_tol > 0.0)) fail("toy seqkd_grad_tol must be > 0");
}

MixtureSpec default_toy_mixture() {
    return MixtureSpec({{0.40, 1.5, 0.35}, {0.35, 5.0, 0.35}, {0.25, 8.0, 0.35}}, 10);
}

void ToyRunResult::validate() const {
    for (const auto* pmf : {&teacher_pmf, &seqkd_pmf, &gad_pmf}) {
        if (pmf->size() == 0 || std::abs(pmf->sum() - 1.0) > 1e-9 || pmf->minCoeff() < 0.0) {
            throw NumericError("toy result holds a malformed probability vector");
        }
    }
}

GaussianStudent run_toy_seqkd(const MixtureSpec& spec, int sample_count, const ToyConfig& cfg,
                              const Rng& rng) {
    cfg.validate();
    if (sample_count < 100) {
        throw ArgumentError("maximum-likelihood fit needs at least 100 samples");
    }
    const auto handle = TeacherHandle::black_box(std::make_shared<const MixtureSpec>(spec));
    Rng sample_rng = rng_fork(rng, "samples");
    const std::vector<int> draws = toy_teacher_sample(handle, sample_rng, sample_count);

    // The sample cross-entropy only sees the empirical histogram.
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(spec.support_size());
    for (int k : draws) {
        hist[k] += 1.0;
    }
    hist /= static_cast<double>(sample_count);

    GaussianStudent student(cfg.init_mu, cfg.init_log_sigma, spec.support_size());
    AdamState adam(student.params().size(), AdamConfig{.lr = cfg.seqkd_lr});
    for (int step = 0; step < cfg.seqkd_max_steps; ++step) {
        ParamVector grad = student.params().zeros_like();
        for (int k = 0; k < spec.support_size(); ++k) {
            if (hist[k] > 0.0) {
                grad.values() -= hist[k] * gaussian_student_grad_logp(student, k);
            }
        }
        if (grad.values().norm() < cfg.seqkd_grad_tol) {
            break;
        }
        adam_step(student.params(), grad, adam);
    }
    return student;
}

ToyRunResult run_toy_gad(const MixtureSpec& spec, const ToyConfig& cfg, const Rng& rng,
                         GaussianStudent* gad_student_out) {
    cfg.validate();
    const auto handle = TeacherHandle::black_box(std::make_shared<const MixtureSpec>(spec));

    GaussianStudent student(cfg.init_mu, cfg.init_log_sigma, spec.support_size());
    Rng disc_rng = rng_fork(rng, "disc-init");
    ScorerNet disc(spec.support_size(), cfg.disc_hidden, disc_rng);
    AdamState student_adam(student.params().size(), AdamConfig{.lr = cfg.student_lr});
    AdamState disc_adam(disc.params().size(), AdamConfig{.lr = cfg.disc_lr});

    // Critic warmup against the frozen (broad) initial student. Afterwards the
    // scores approximate the teacher's log-density, so the REINFORCE phase
    // climbs toward a real mode instead of chasing initialization noise.
    const int support = spec.support_size();
    const auto one_hot = [support](int k) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(support);
        f[k] = 1.0;
        return f;
    };
    AdamState pretrain_adam(disc.params().size(), AdamConfig{.lr = cfg.disc_pretrain_lr});
    for (int step = 0; step < cfg.disc_pretrain_steps; ++step) {
        const Rng step_rng = rng_fork(rng, "pretrain/" + std::to_string(step));
        Rng student_rng = rng_fork(step_rng, "student");
        Rng teacher_rng = rng_fork(step_rng, "teacher");
        const std::vector<int> teacher_draws =
            toy_teacher_sample(handle, teacher_rng, cfg.batch_size);
        ParamVector grad = disc.params().zeros_like();
        for (int i = 0; i < cfg.batch_size; ++i) {
            const int drawn = gaussian_student_sample(student, student_rng);
            const DiscLossResult paired =
                bt_loss_and_grad_features(disc, one_hot(teacher_draws[i]), {one_hot(drawn)});
            grad.values() += paired.grad.values();
        }
        grad.values() /= static_cast<double>(cfg.batch_size);
        adam_step(disc.params(), grad, pretrain_adam);
    }

    ToyRunResult result;
    result.reward_trace.reserve(cfg.steps);
    for (int step = 0; step < cfg.steps; ++step) {
        try {
            const StepReport report =
                reinforce_step_toy(student, disc, handle, student_adam, disc_adam, cfg.batch_size,
                                   rng_fork(rng, "step/" + std::to_string(step)), step);
            result.reward_trace.push_back(report.mean_reward);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " [toy run diverged at step " +
                               std::to_string(step) + ", mu=" + format_double(student.mu()) +
                               ", log_sigma=" + format_double(student.log_sigma()) + "]");
        }
    }

    const GaussianStudent seqkd_student =
        run_toy_seqkd(spec, cfg.seqkd_samples, cfg, rng_fork(rng, "seqkd"));

    result.teacher_pmf = toy_teacher_pmf(spec);
    result.seqkd_pmf = gaussian_student_pmf(seqkd_student);
    result.gad_pmf = gaussian_student_pmf(student);
    result.seqkd_mu = seqkd_student.mu();
    result.seqkd_sigma = seqkd_student.sigma();
    result.gad_mu = student.mu();
    result.gad_sigma = student.sigma();
    result.seqkd_mode = mode_mass(result.seqkd_pmf, spec, 1);
    result.gad_mode = mode_mass(result.gad_pmf, spec, 1);
    result.seqkd_forward_kl = forward_kl(result.teacher_pmf, result.seqkd_pmf);
    result.seqkd_reverse_kl = reverse_kl(result.teacher_pmf, result.seqkd_pmf);
    result.gad_forward_kl = forward_kl(result.teacher_pmf, result.gad_pmf);
    result.gad_reverse_kl = reverse_kl(result.teacher_pmf, result.gad_pmf);
    result.validate();
    if (gad_student_out != nullptr) {
        *gad_student_out = student;
    }
    return result;
}

void emit_toy_figure_data(const ToyRunResult& result, const std::filesystem::path& path) {
    result.validate();
    std::string csv = "category,teacher,seqkd,gad\n";
    for (Eigen::Index k = 0; k < result.teacher_pmf.size(); ++k) {
        csv += std::to_string(k) + "," + format_double(result.teacher_pmf[k]) + "," +
               format_double(result.seqkd_pmf[k]) + "," + format_double(result.gad_pmf[k]) + "\n";
    }
    atomic_write_file(path, csv);
}

}  // namespace gad
