#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gad/teacher.hpp"
#include "gad/types.hpp"

namespace gad {

// Multiset of length-n token windows with their counts.
struct NgramProfile {
    int order = 1;
    std::map<std::vector<TokenId>, int> counts;
    int total = 0;
};

NgramProfile ngram_profile(const Sequence& seq, int n);

// Multiset-overlap F1 between two sequences at order n: matched windows are
// counted with multiplicity (min of the two counts). Sequences shorter than
// n carry no n-grams and score 0.
double ngram_f1(const Sequence& candidate, const Sequence& reference, int n);

struct SequencePair {
    Sequence candidate;
    Sequence reference;
};

// Corpus-level F1 with counts pooled across pairs before computing
// precision and recall (micro-average).
double corpus_ngram_f1(const std::vector<SequencePair>& pairs, int n);

// Mean of per-pair F1 values (macro-average); pairs too short for n count 0.
double corpus_ngram_f1_macro(const std::vector<SequencePair>& pairs, int n);

// KL(p || q) = sum_k p(k) log(p(k)/q(k)) with 0 log 0 = 0. Returns +infinity
// when p puts mass where q has none.
double forward_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// KL(q || p); the mode-seeking diagnostic direction.
double reverse_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// Shannon entropy in nats, 0 log 0 = 0.
double entropy(const Eigen::VectorXd& p);

struct ModeMass {
    int mode_index = 0;  // teacher component whose window captures the most mass
    double mass = 0.0;   // student probability within +/- radius of that mean
};

// How concentrated the student pmf is around a single teacher component.
// Component means are rounded to the nearest support point and clamped;
// ties go to the lowest component index.
ModeMass mode_mass(const Eigen::VectorXd& student_pmf, const MixtureSpec& spec, int radius);

struct SummaryStats {
    double mean = 0.0;
    double std_dev = 0.0;  // population convention
    double min = 0.0;
    double max = 0.0;
};

SummaryStats summary_stats(const std::vector<double>& values);
SummaryStats length_stats(const std::vector<Sequence>& responses);
SummaryStats reward_stats(const std::vector<double>& rewards);

// Named metric values plus enough metadata to trace where they came from.
struct EvalReport {
    std::string checkpoint_id;
    std::string dataset_id;
    std::uint64_t seed = 0;
    std::map<std::string, double> values;

    // Rejects NaN/inf so a broken run cannot masquerade as a result.
    void set(const std::string& name, double value);
};

}  // namespace gad
