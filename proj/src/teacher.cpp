#include "gad/teacher.hpp"

#include <cmath>
#include <sstream>

#include "gad/error.hpp"

namespace gad {

namespace {
constexpr double kRowSumTol = 1e-12;
}

MixtureSpec::MixtureSpec(std::vector<MixtureComponent> components, int support_size)
    : components_(std::move(components)), support_size_(support_size) {
    if (components_.empty()) throw ArgumentError("MixtureSpec: needs at least one component");
    if (support_size_ < 2) throw ArgumentError("MixtureSpec: support size must be >= 2");
    double total = 0.0;
    for (const MixtureComponent& c : components_) {
        if (!(c.weight > 0.0)) throw ArgumentError("MixtureSpec: weights must be positive");
        if (!(c.std > 0.0)) throw ArgumentError("MixtureSpec: stds must be positive");
        total += c.weight;
    }
    for (MixtureComponent& c : components_) c.weight /= total;
}

std::string MixtureSpec::id() const {
    std::ostringstream out;
    out << "mixture(K=" << support_size_;
    for (const MixtureComponent& c : components_) {
        out << ";" << c.weight << ":" << c.mean << ":" << c.std;
    }
    out << ")";
    return out.str();
}

MarkovTeacherSpec::MarkovTeacherSpec(Vocab vocab, int order, int num_classes,
                                     std::vector<Eigen::MatrixXd> tables,
                                     std::vector<double> eos_hazard, std::string id)
    : vocab_(vocab),
      order_(order),
      num_classes_(num_classes),
      tables_(std::move(tables)),
      eos_hazard_(std::move(eos_hazard)),
      id_(std::move(id)) {
    if (vocab_.size < 2) throw ArgumentError("MarkovTeacherSpec: vocabulary too small");
    if (order_ < 1) throw ArgumentError("MarkovTeacherSpec: order must be >= 1");
    if (num_classes_ < 1) throw ArgumentError("MarkovTeacherSpec: needs at least one class");
    if (static_cast<int>(tables_.size()) != num_classes_) {
        throw ArgumentError("MarkovTeacherSpec: one table per class required");
    }
    const int n_ctx = context_count();
    for (const Eigen::MatrixXd& table : tables_) {
        if (table.rows() != n_ctx || table.cols() != vocab_.size) {
            throw ArgumentError("MarkovTeacherSpec: table shape mismatch");
        }
        if ((table.array() < 0.0).any()) {
            throw ArgumentError("MarkovTeacherSpec: negative probability");
        }
        for (int r = 0; r < table.rows(); ++r) {
            if (std::abs(table.row(r).sum() - 1.0) > kRowSumTol) {
                throw ArgumentError("MarkovTeacherSpec: row " + std::to_string(r) +
                                    " does not sum to 1");
            }
        }
    }
    for (double h : eos_hazard_) {
        if (h < 0.0 || h > 1.0) throw ArgumentError("MarkovTeacherSpec: hazard outside [0,1]");
    }
}

int MarkovTeacherSpec::context_count() const {
    int n = 1;
    for (int i = 0; i < order_; ++i) n *= vocab_.size + 1;
    return n;
}

int MarkovTeacherSpec::prompt_class(const Sequence& prompt) const {
    long long sum = 0;
    for (TokenId t : prompt) sum += t;
    return static_cast<int>(sum % num_classes_);
}

double MarkovTeacherSpec::hazard(int step) const {
    if (eos_hazard_.empty()) return 0.0;
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(step),
                                                eos_hazard_.size() - 1);
    return eos_hazard_[i];
}

int MarkovTeacherSpec::initial_context(const Sequence& prompt) const {
    // Low digit holds the most recent symbol; start from all padding.
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

int MarkovTeacherSpec::advance_context(int ctx, TokenId next) const {
    const int base = vocab_.size + 1;
    int keep = 1;
    for (int j = 0; j < order_ - 1; ++j) keep *= base;
    return static_cast<int>(next) + base * (ctx % keep);
}

Eigen::VectorXd MarkovTeacherSpec::step_distribution(int cls, int ctx, int step) const {
    const Eigen::MatrixXd& table = tables_[static_cast<std::size_t>(cls)];
    const double h = hazard(step);
    Eigen::VectorXd p = (1.0 - h) * table.row(ctx).transpose();
    p[vocab_.eos()] += h;
    return p;
}

MarkovTeacherSpec make_random_markov_spec(Vocab vocab, int order, int num_classes,
                                          double sharpness, std::vector<double> eos_hazard,
                                          bool eos_in_table, Rng rng) {
    if (vocab.size < 2) throw ArgumentError("make_random_markov_spec: vocabulary too small");
    int n_ctx = 1;
    for (int i = 0; i < order; ++i) n_ctx *= vocab.size + 1;

    std::vector<Eigen::MatrixXd> tables;
    for (int cls = 0; cls < num_classes; ++cls) {
        Rng cls_rng = rng_fork(rng, "class/" + std::to_string(cls));
        Eigen::MatrixXd table(n_ctx, vocab.size);
        for (int r = 0; r < n_ctx; ++r) {
            Eigen::VectorXd logits(vocab.size);
            for (int c = 0; c < vocab.size; ++c) {
                logits[c] = sharpness * cls_rng.next_gaussian();
            }
            Eigen::VectorXd row = (logits.array() - logits.maxCoeff()).exp();
            if (!eos_in_table) row[vocab.eos()] = 0.0;
            table.row(r) = row.transpose() / row.sum();
        }
        tables.push_back(std::move(table));
    }

    std::ostringstream id;
    id << "markov(V=" << vocab.size << ",m=" << order << ",C=" << num_classes
       << ",sharp=" << sharpness << ",eos_in_table=" << (eos_in_table ? 1 : 0)
       << ",seed=" << rng.seed() << ")";
    return MarkovTeacherSpec(vocab, order, num_classes, std::move(tables),
                             std::move(eos_hazard), id.str());
}

TeacherHandle::TeacherHandle(TeacherAccess access, std::shared_ptr<const MixtureSpec> mixture,
                             std::shared_ptr<const MarkovTeacherSpec> markov)
    : access_(access), mixture_(std::move(mixture)), markov_(std::move(markov)) {}

TeacherHandle TeacherHandle::black_box(std::shared_ptr<const MixtureSpec> spec) {
    return TeacherHandle(TeacherAccess::kBlackBox, std::move(spec), nullptr);
}
TeacherHandle TeacherHandle::black_box(std::shared_ptr<const MarkovTeacherSpec> spec) {
    return TeacherHandle(TeacherAccess::kBlackBox, nullptr, std::move(spec));
}
TeacherHandle TeacherHandle::oracle(std::shared_ptr<const MixtureSpec> spec) {
    return TeacherHandle(TeacherAccess::kOracle, std::move(spec), nullptr);
}
TeacherHandle TeacherHandle::oracle(std::shared_ptr<const MarkovTeacherSpec> spec) {
    return TeacherHandle(TeacherAccess::kOracle, nullptr, std::move(spec));
}

const MixtureSpec& TeacherHandle::mixture() const {
    if (!mixture_) throw ArgumentError("TeacherHandle: not a mixture teacher");
    return *mixture_;
}

const MarkovTeacherSpec& TeacherHandle::markov() const {
    if (!markov_) throw ArgumentError("TeacherHandle: not a sequence teacher");
    return *markov_;
}

void TeacherHandle::require_oracle(const char* op) const {
    if (access_ != TeacherAccess::kOracle) {
        throw AccessError(std::string(op) + ": probability query on a black-box handle");
    }
}

Eigen::VectorXd toy_teacher_pmf(const MixtureSpec& spec) {
    const int k_max = spec.support_size();
    Eigen::VectorXd pmf(k_max);
    for (int k = 0; k < k_max; ++k) {
        double density = 0.0;
        for (const MixtureComponent& c : spec.components()) {
            const double z = (static_cast<double>(k) - c.mean) / c.std;
            density += c.weight * std::exp(-0.5 * z * z) / c.std;
        }
        pmf[k] = density;
    }
    return pmf / pmf.sum();
}

std::vector<int> toy_teacher_sample(const TeacherHandle& handle, Rng& rng, int count) {
    const Eigen::VectorXd pmf = toy_teacher_pmf(handle.mixture());
    std::vector<int> samples(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) samples[static_cast<std::size_t>(i)] = sample_categorical(pmf, rng);
    return samples;
}

Sequence seq_teacher_sample(const TeacherHandle& handle, const Sequence& prompt, Rng& rng,
                            int max_len) {
    const MarkovTeacherSpec& spec = handle.markov();
    const int cls = spec.prompt_class(prompt);
    int ctx = spec.initial_context(prompt);
    std::vector<TokenId> tokens;
    for (int step = 0; step < max_len; ++step) {
        const Eigen::VectorXd p = spec.step_distribution(cls, ctx, step);
        const TokenId t = static_cast<TokenId>(sample_categorical(p, rng));
        tokens.push_back(t);
        if (t == spec.vocab().eos()) break;
        ctx = spec.advance_context(ctx, t);
    }
    return Sequence(std::move(tokens), spec.vocab().eos());
}

double seq_teacher_logprob(const TeacherHandle& handle, const Sequence& prompt,
                           const Sequence& response) {
    handle.require_oracle("seq_teacher_logprob");
    const MarkovTeacherSpec& spec = handle.markov();
    const int cls = spec.prompt_class(prompt);
    int ctx = spec.initial_context(prompt);
    double logprob = 0.0;
    for (std::size_t i = 0; i < response.size(); ++i) {
        const Eigen::VectorXd p = spec.step_distribution(cls, ctx, static_cast<int>(i));
        logprob += std::log(p[response[i]]);
        if (response[i] != spec.vocab().eos()) ctx = spec.advance_context(ctx, response[i]);
    }
    return logprob;
}

Dataset build_dataset(const TeacherHandle& handle, const std::vector<Sequence>& prompts,
                      Rng& rng, int max_len) {
    if (prompts.empty()) throw ArgumentError("build_dataset: no prompts");
    const MarkovTeacherSpec& spec = handle.markov();
    std::vector<Episode> episodes;
    episodes.reserve(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        Rng ep_rng = rng_fork(rng, "episode/" + std::to_string(i));
        Sequence response = seq_teacher_sample(handle, prompts[i], ep_rng, max_len);
        if (response.empty()) {
            // Possible only when max_len is 0; keep the invariant explicit.
            throw ArgumentError("build_dataset: empty teacher response");
        }
        episodes.emplace_back(prompts[i], std::move(response));
    }
    return Dataset(std::move(episodes), spec.vocab(), DatasetMeta{spec.id(), rng.seed()});
}

}  // namespace gad
