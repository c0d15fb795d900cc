#include "gad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gad/error.hpp"

namespace gad {

NgramProfile ngram_profile(const Sequence& seq, int n) {
    if (n < 1) {
        throw ArgumentError("n-gram order must be >= 1, got " + std::to_string(n));
    }
    NgramProfile profile;
    profile.order = n;
    const auto& tokens = seq.tokens();
    const int len = static_cast<int>(tokens.size());
    for (int start = 0; start + n <= len; ++start) {
        std::vector<TokenId> gram(tokens.begin() + start, tokens.begin() + start + n);
        profile.counts[std::move(gram)] += 1;
        profile.total += 1;
    }
    return profile;
}

namespace {

// Multiplicity-weighted overlap between two profiles.
int matched_count(const NgramProfile& a, const NgramProfile& b) {
    int matched = 0;
    for (const auto& [gram, count] : a.counts) {
        const auto it = b.counts.find(gram);
        if (it != b.counts.end()) {
            matched += std::min(count, it->second);
        }
    }
    return matched;
}

double f1_from_counts(long long matched, long long cand_total, long long ref_total) {
    if (cand_total == 0 || ref_total == 0) {
        return 0.0;
    }
    const double precision = static_cast<double>(matched) / static_cast<double>(cand_total);
    const double recall = static_cast<double>(matched) / static_cast<double>(ref_total);
    if (precision + recall == 0.0) {
        return 0.0;
    }
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double ngram_f1(const Sequence& candidate, const Sequence& reference, int n) {
    const NgramProfile cand = ngram_profile(candidate, n);
    const NgramProfile ref = ngram_profile(reference, n);
    return f1_from_counts(matched_count(cand, ref), cand.total, ref.total);
}

double corpus_ngram_f1(const std::vector<SequencePair>& pairs, int n) {
    if (pairs.empty()) {
        throw ArgumentError("corpus F1 needs at least one pair");
    }
    long long matched = 0;
    long long cand_total = 0;
    long long ref_total = 0;
    for (const auto& pair : pairs) {
        const NgramProfile cand = ngram_profile(pair.candidate, n);
        const NgramProfile ref = ngram_profile(pair.reference, n);
        matched += matched_count(cand, ref);
        cand_total += cand.total;
        ref_total += ref.total;
    }
    return f1_from_counts(matched, cand_total, ref_total);
}

double corpus_ngram_f1_macro(const std::vector<SequencePair>& pairs, int n) {
    if (pairs.empty()) {
        throw ArgumentError("corpus F1 needs at least one pair");
    }
    double sum = 0.0;
    for (const auto& pair : pairs) {
        sum += ngram_f1(pair.candidate, pair.reference, n);
    }
    return sum / static_cast<double>(pairs.size());
}

double forward_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) {
        throw ArgumentError("KL arguments have sizes " + std::to_string(p.size()) + " and " +
                            std::to_string(q.size()));
    }
    double kl = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (p[k] == 0.0) {
            continue;
        }
        if (q[k] == 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        kl += p[k] * std::log(p[k] / q[k]);
    }
    return kl;
}

double reverse_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return forward_kl(q, p);
}

double entropy(const Eigen::VectorXd& p) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) {
            h -= p[k] * std::log(p[k]);
        }
    }
    return h;
}

ModeMass mode_mass(const Eigen::VectorXd& student_pmf, const MixtureSpec& spec, int radius) {
    if (radius < 0) {
        throw ArgumentError("mode radius must be non-negative");
    }
    const int support = static_cast<int>(student_pmf.size());
    ModeMass best;
    best.mass = -1.0;
    for (std::size_t j = 0; j < spec.components().size(); ++j) {
        const int center =
            std::clamp(static_cast<int>(std::lround(spec.components()[j].mean)), 0, support - 1);
        double mass = 0.0;
        for (int k = std::max(0, center - radius); k <= std::min(support - 1, center + radius); ++k) {
            mass += student_pmf[k];
        }
        if (mass > best.mass) {
            best.mass = mass;
            best.mode_index = static_cast<int>(j);
        }
    }
    return best;
}

SummaryStats summary_stats(const std::vector<double>& values) {
    if (values.empty()) {
        throw ArgumentError("summary statistics need at least one value");
    }
    SummaryStats stats;
    stats.min = values.front();
    stats.max = values.front();
    double sum = 0.0;
    for (double v : values) {
        sum += v;
        stats.min = std::min(stats.min, v);
        stats.max = std::max(stats.max, v);
    }
    stats.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) {
        sq += (v - stats.mean) * (v - stats.mean);
    }
    stats.std_dev = std::sqrt(sq / static_cast<double>(values.size()));
    return stats;
}

SummaryStats length_stats(const std::vector<Sequence>& responses) {
    if (responses.empty()) {
        throw ArgumentError("length statistics need at least one response");
    }
    std::vector<double> lengths;
    lengths.reserve(responses.size());
    for (const auto& response : responses) {
        lengths.push_back(static_cast<double>(response.size()));
    }
    return summary_stats(lengths);
}

SummaryStats reward_stats(const std::vector<double>& rewards) {
    return summary_stats(rewards);
}

void EvalReport::set(const std::string& name, double value) {
    if (!std::isfinite(value)) {
        throw NumericError("metric '" + name + "' is not finite");
    }
    values[name] = value;
}

}  // namespace gad
