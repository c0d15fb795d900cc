// Evaluation metrics: n-gram overlap F1 against a brute-force multiset
// oracle, KL divergences and entropy at hand-checkable points, mode
// concentration, and summary statistics.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "gad/error.hpp"
#include "gad/metrics.hpp"
#include "gad/rng.hpp"
#include "gad/teacher.hpp"
#include "gad/types.hpp"

namespace {

gad::Sequence seq(std::vector<gad::TokenId> tokens) { return gad::Sequence(std::move(tokens)); }

// Brute-force multiset-overlap F1, written directly from the definition.
double reference_f1(const std::vector<gad::TokenId>& cand, const std::vector<gad::TokenId>& ref,
                    int n) {
    auto windows = [n](const std::vector<gad::TokenId>& s) {
        std::map<std::vector<gad::TokenId>, int> counts;
        int total = 0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i) {
            std::vector<gad::TokenId> w(s.begin() + static_cast<std::ptrdiff_t>(i),
                                        s.begin() + static_cast<std::ptrdiff_t>(i + n));
            counts[w] += 1;
            total += 1;
        }
        return std::pair(counts, total);
    };
    const auto [cw, ct] = windows(cand);
    const auto [rw, rt] = windows(ref);
    if (ct == 0 || rt == 0) return 0.0;
    int matched = 0;
    for (const auto& [w, c] : cw) {
        auto it = rw.find(w);
        if (it != rw.end()) matched += std::min(c, it->second);
    }
    if (matched == 0) return 0.0;
    const double precision = matched / static_cast<double>(ct);
    const double recall = matched / static_cast<double>(rt);
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

TEST_CASE("ngram_profile counts windows with multiplicity") {
    const gad::NgramProfile p = gad::ngram_profile(seq({1, 2, 1, 2, 1}), 2);
    CHECK(p.order == 2);
    CHECK(p.total == 4);
    CHECK(p.counts.at({1, 2}) == 2);
    CHECK(p.counts.at({2, 1}) == 2);

    const gad::NgramProfile shorter = gad::ngram_profile(seq({1, 2}), 3);
    CHECK(shorter.total == 0);
    CHECK(shorter.counts.empty());
}

TEST_CASE("ngram_f1 hand values: [a,b,c] vs [a,b,d]") {
    const gad::Sequence cand = seq({0, 1, 2});
    const gad::Sequence ref = seq({0, 1, 3});
    // Unigrams: 2 of 3 match -> precision = recall = 2/3 -> F1 = 2/3.
    CHECK(gad::ngram_f1(cand, ref, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    // Bigrams: 1 of 2 matches -> F1 = 1/2.
    CHECK(gad::ngram_f1(cand, ref, 2) == doctest::Approx(0.5).epsilon(1e-12));
    // Trigrams: no overlap.
    CHECK(gad::ngram_f1(cand, ref, 3) == 0.0);
}

TEST_CASE("ngram_f1 edge cases") {
    CHECK(gad::ngram_f1(seq({0, 1}), seq({0, 1}), 1) == 1.0);
    CHECK(gad::ngram_f1(seq({0, 1}), seq({0, 1}), 2) == 1.0);
    // Too short for the order: zero, not an error.
    CHECK(gad::ngram_f1(seq({0}), seq({0, 1}), 2) == 0.0);
    CHECK(gad::ngram_f1(seq({}), seq({0, 1}), 1) == 0.0);
    // Multiplicity matters: [a,a] vs [a] matches one unigram of two.
    CHECK(gad::ngram_f1(seq({0, 0}), seq({0}), 1) ==
          doctest::Approx(reference_f1({0, 0}, {0}, 1)).epsilon(1e-12));
    CHECK_THROWS_AS(gad::ngram_f1(seq({0}), seq({0}), 0), gad::ArgumentError);
}

TEST_CASE("ngram_f1 is symmetric and matches brute force on random pairs") {
    gad::Rng rng(9001);
    for (int trial = 0; trial < 1000; ++trial) {
        auto draw = [&rng]() {
            std::vector<gad::TokenId> t(static_cast<std::size_t>(rng.next_index(9)));
            for (auto& x : t) x = static_cast<gad::TokenId>(rng.next_index(3));
            return t;
        };
        const std::vector<gad::TokenId> a = draw();
        const std::vector<gad::TokenId> b = draw();
        const int n = 1 + rng.next_index(3);
        const double got = gad::ngram_f1(gad::Sequence(a), gad::Sequence(b), n);
        CHECK(got == doctest::Approx(reference_f1(a, b, n)).epsilon(1e-12));
        CHECK(got == doctest::Approx(gad::ngram_f1(gad::Sequence(b), gad::Sequence(a), n))
                         .epsilon(1e-12));
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("corpus micro F1 pools counts; a single pair reduces to ngram_f1") {
    const std::vector<gad::SequencePair> one = {{seq({0, 1, 2}), seq({0, 1, 3})}};
    CHECK(gad::corpus_ngram_f1(one, 1) ==
          doctest::Approx(gad::ngram_f1(seq({0, 1, 2}), seq({0, 1, 3}), 1)).epsilon(1e-12));

    // Pooled counts: pair 1 has 3 unigram matches of 3, pair 2 has 0 of 1;
    // micro precision = recall = 3/4.
    const std::vector<gad::SequencePair> two = {{seq({0, 1, 0}), seq({0, 0, 1})},
                                                {seq({2}), seq({1})}};
    CHECK(gad::corpus_ngram_f1(two, 1) == doctest::Approx(0.75).epsilon(1e-12));

    // Macro average treats each pair equally: (1 + 0) / 2.
    CHECK(gad::corpus_ngram_f1_macro(two, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(gad::corpus_ngram_f1({}, 1), gad::ArgumentError);
    CHECK_THROWS_AS(gad::corpus_ngram_f1_macro({}, 1), gad::ArgumentError);
}

TEST_CASE("corpus micro F1 matches a pooled brute-force computation") {
    gad::Rng rng(555);
    std::vector<gad::SequencePair> pairs;
    int cand_total = 0;
    int ref_total = 0;
    int matched = 0;
    const int n = 2;
    for (int i = 0; i < 50; ++i) {
        auto draw = [&rng]() {
            std::vector<gad::TokenId> t(static_cast<std::size_t>(1 + rng.next_index(7)));
            for (auto& x : t) x = static_cast<gad::TokenId>(rng.next_index(3));
            return t;
        };
        const std::vector<gad::TokenId> c = draw();
        const std::vector<gad::TokenId> r = draw();
        pairs.push_back({gad::Sequence(c), gad::Sequence(r)});
        // Match within the pair; pool matched counts and totals across pairs.
        std::map<std::vector<gad::TokenId>, std::pair<int, int>> windows;
        for (std::size_t j = 0; j + n <= c.size(); ++j) {
            windows[{c[j], c[j + 1]}].first += 1;
            ++cand_total;
        }
        for (std::size_t j = 0; j + n <= r.size(); ++j) {
            windows[{r[j], r[j + 1]}].second += 1;
            ++ref_total;
        }
        for (const auto& [w, counts] : windows) matched += std::min(counts.first, counts.second);
    }
    const double precision = matched / static_cast<double>(cand_total);
    const double recall = matched / static_cast<double>(ref_total);
    const double expect = 2.0 * precision * recall / (precision + recall);
    CHECK(gad::corpus_ngram_f1(pairs, n) == doctest::Approx(expect).epsilon(1e-12));

    // Macro: plain mean of per-pair scores.
    double macro = 0.0;
    for (const auto& p : pairs) macro += gad::ngram_f1(p.candidate, p.reference, n);
    macro /= static_cast<double>(pairs.size());
    CHECK(gad::corpus_ngram_f1_macro(pairs, n) == doctest::Approx(macro).epsilon(1e-12));
}

TEST_CASE("forward KL hand values") {
    Eigen::VectorXd p(2), q(2);
    p << 1.0, 0.0;
    q << 0.5, 0.5;
    // KL([1,0] || [.5,.5]) = log 2; the 0 log 0 term drops.
    CHECK(gad::forward_kl(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(gad::forward_kl(q, q) == 0.0);

    // Mass where q has none: +infinity.
    Eigen::VectorXd r(2);
    r << 0.0, 1.0;
    CHECK(gad::forward_kl(p, r) == std::numeric_limits<double>::infinity());
}

TEST_CASE("reverse KL flips the arguments") {
    Eigen::VectorXd p(3), q(3);
    p << 0.2, 0.5, 0.3;
    q << 0.4, 0.4, 0.2;
    CHECK(gad::reverse_kl(p, q) == doctest::Approx(gad::forward_kl(q, p)).epsilon(1e-15));
    CHECK(gad::forward_kl(p, q) > 0.0);
    CHECK_THROWS_AS(gad::forward_kl(p, Eigen::VectorXd::Ones(2)), gad::ArgumentError);
}

TEST_CASE("KL is nonnegative on random distribution pairs") {
    gad::Rng rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd p(5), q(5);
        for (int k = 0; k < 5; ++k) {
            p[k] = 0.01 + rng.next_double();
            q[k] = 0.01 + rng.next_double();
        }
        p /= p.sum();
        q /= q.sum();
        CHECK(gad::forward_kl(p, q) >= 0.0);
        CHECK(gad::reverse_kl(p, q) >= 0.0);
    }
}

TEST_CASE("entropy hand values") {
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(4, 0.25);
    CHECK(gad::entropy(uniform) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    Eigen::VectorXd point(3);
    point << 0.0, 1.0, 0.0;
    CHECK(gad::entropy(point) == 0.0);
}

TEST_CASE("mode_mass on the uniform pmf: K=10, radius 1 captures 3 bins") {
    const gad::MixtureSpec spec({{0.5, 2.0, 0.5}, {0.5, 7.0, 0.5}}, 10);
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(10, 0.1);
    const gad::ModeMass mm = gad::mode_mass(uniform, spec, 1);
    CHECK(mm.mass == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(mm.mode_index == 0);  // tie between components goes to the lowest
}

TEST_CASE("mode_mass picks the component whose window holds the most mass") {
    const gad::MixtureSpec spec(
        {{0.40, 1.5, 0.35}, {0.35, 5.0, 0.35}, {0.25, 8.0, 0.35}}, 10);
    // A student concentrated at mu = 5 with narrow spread.
    Eigen::VectorXd student(10);
    for (int k = 0; k < 10; ++k) {
        const double z = (k - 5.0) / 0.3;
        student[k] = std::exp(-0.5 * z * z);
    }
    student /= student.sum();
    const gad::ModeMass mm = gad::mode_mass(student, spec, 1);
    CHECK(mm.mode_index == 1);
    CHECK(mm.mass > 0.99);
}

TEST_CASE("mode_mass clamps component means to the support edge") {
    // A mean beyond the grid rounds and clamps to the last support point.
    const gad::MixtureSpec spec({{1.0, 11.7, 0.5}}, 10);
    Eigen::VectorXd student = Eigen::VectorXd::Zero(10);
    student[9] = 0.6;
    student[8] = 0.4;
    const gad::ModeMass mm = gad::mode_mass(student, spec, 1);
    CHECK(mm.mode_index == 0);
    CHECK(mm.mass == doctest::Approx(1.0).epsilon(1e-12));  // window {8, 9}
}

TEST_CASE("summary stats hand values and errors") {
    const gad::SummaryStats constant = gad::summary_stats({2.0, 2.0, 2.0});
    CHECK(constant.mean == 2.0);
    CHECK(constant.std_dev == 0.0);
    CHECK(constant.min == 2.0);
    CHECK(constant.max == 2.0);

    // Population convention: std of {1, 3} is 1, not sqrt(2).
    const gad::SummaryStats pair = gad::summary_stats({1.0, 3.0});
    CHECK(pair.mean == 2.0);
    CHECK(pair.std_dev == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pair.min == 1.0);
    CHECK(pair.max == 3.0);

    CHECK_THROWS_AS(gad::summary_stats({}), gad::ArgumentError);
}

TEST_CASE("summary stats match a direct two-pass computation on random data") {
    gad::Rng rng(77);
    std::vector<double> values;
    for (int i = 0; i < 500; ++i) values.push_back(10.0 * rng.next_gaussian() - 3.0);
    const gad::SummaryStats s = gad::summary_stats(values);

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.std_dev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(s.min == *std::min_element(values.begin(), values.end()));
    CHECK(s.max == *std::max_element(values.begin(), values.end()));
}

TEST_CASE("length_stats and reward_stats delegate to summary_stats") {
    const gad::SummaryStats ls = gad::length_stats({seq({0, 1}), seq({2}), seq({0, 1, 2})});
    CHECK(ls.mean == 2.0);
    CHECK(ls.min == 1.0);
    CHECK(ls.max == 3.0);

    const gad::SummaryStats rs = gad::reward_stats({-1.0, 1.0});
    CHECK(rs.mean == 0.0);
    CHECK(rs.std_dev == 1.0);
}

TEST_CASE("eval report rejects non-finite metric values") {
    gad::EvalReport report;
    report.set("ok", 1.5);
    CHECK(report.values.at("ok") == 1.5);
    CHECK_THROWS_AS(report.set("bad", std::numeric_limits<double>::quiet_NaN()),
                    gad::NumericError);
    CHECK_THROWS_AS(report.set("bad", std::numeric_limits<double>::infinity()),
                    gad::NumericError);
    CHECK(report.values.count("bad") == 0);
}
