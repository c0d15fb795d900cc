// Discriminator: hashed n-gram featurization against an independent hash
// reimplementation, scorer forward/backward against hand values and finite
// differences, and the Bradley-Terry / cross-entropy losses at their known
// fixed points.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "gad/discriminator.hpp"
#include "gad/error.hpp"
#include "gad/rng.hpp"
#include "gad/types.hpp"

namespace {

gad::Sequence seq(std::vector<gad::TokenId> tokens) { return gad::Sequence(std::move(tokens)); }

// Independent FNV-1a-64 over little-endian 4-byte token ids.
std::uint64_t reference_fnv1a(const std::vector<gad::TokenId>& gram) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (gad::TokenId t : gram) {
        const auto u = static_cast<std::uint32_t>(t);
        for (int byte = 0; byte < 4; ++byte) {
            h ^= (u >> (8 * byte)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

// Brute-force featurization oracle: slide each n-gram window over
// [prompt, SEP, response], hash, count, L1-normalize, append the length
// feature.
Eigen::VectorXd reference_featurize(const gad::FeatureSpec& spec, const gad::Sequence& prompt,
                                    const gad::Sequence& response) {
    std::vector<gad::TokenId> joined;
    for (gad::TokenId t : prompt) joined.push_back(t);
    joined.push_back(spec.vocab.sep());
    for (gad::TokenId t : response) joined.push_back(t);

    Eigen::VectorXd f = Eigen::VectorXd::Zero(spec.input_dim());
    double total = 0.0;
    for (int n : spec.ngram_orders) {
        for (std::size_t i = 0; i + n <= joined.size(); ++i) {
            const std::vector<gad::TokenId> gram(joined.begin() + static_cast<std::ptrdiff_t>(i),
                                                 joined.begin() + static_cast<std::ptrdiff_t>(i + n));
            f[static_cast<Eigen::Index>(reference_fnv1a(gram) %
                                        static_cast<std::uint64_t>(spec.feature_dim))] += 1.0;
            total += 1.0;
        }
    }
    if (total > 0.0) f.head(spec.feature_dim) /= total;
    f[spec.feature_dim] =
        spec.length_scale * static_cast<double>(response.size()) / spec.max_response_len;
    return f;
}

gad::FeatureSpec small_spec() {
    gad::FeatureSpec spec;
    spec.vocab = gad::Vocab{5};
    spec.ngram_orders = {1, 2};
    spec.feature_dim = 32;
    spec.length_scale = 1.0;
    spec.max_response_len = 8;
    return spec;
}

// Finite-difference gradient of an arbitrary scalar function of the net.
template <typename Fn>
Eigen::VectorXd fd_net_grad(const gad::ScorerNet& net, Fn&& value_of, double h) {
    gad::ScorerNet probe = net;
    Eigen::VectorXd fd(net.params().size());
    for (Eigen::Index i = 0; i < net.params().size(); ++i) {
        probe.params().values()[i] = net.params().values()[i] + h;
        const double up = value_of(probe);
        probe.params().values()[i] = net.params().values()[i] - h;
        const double down = value_of(probe);
        probe.params().values()[i] = net.params().values()[i];
        fd[i] = (up - down) / (2.0 * h);
    }
    return fd;
}

}  // namespace

TEST_CASE("featurize matches a hand count on a tiny example") {
    gad::FeatureSpec spec = small_spec();
    spec.ngram_orders = {1};
    const gad::Sequence prompt = seq({1, 2});
    const gad::Sequence response({0, 4}, /*eos_id=*/4);

    // Joined stream: [1, 2, SEP=5, 0, 4] -> five unigrams, each count 1/5.
    const Eigen::VectorXd f = gad::featurize(spec, prompt, response);
    REQUIRE(f.size() == 33);
    double sum = 0.0;
    for (int i = 0; i < 32; ++i) sum += f[i];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (gad::TokenId t : {1, 2, 5, 0, 4}) {
        const auto idx = static_cast<Eigen::Index>(reference_fnv1a({t}) % 32);
        CHECK(f[idx] >= 0.2 - 1e-12);  // each unigram lands exactly once
    }
    CHECK(f[32] == doctest::Approx(2.0 / 8.0).epsilon(1e-12));  // len 2 of cap 8
}

TEST_CASE("featurize agrees with the brute-force oracle on random pairs") {
    const gad::FeatureSpec spec = small_spec();
    gad::Rng rng(2025);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<gad::TokenId> p(static_cast<std::size_t>(rng.next_index(4)));
        for (auto& t : p) t = static_cast<gad::TokenId>(rng.next_index(4));
        std::vector<gad::TokenId> r(1 + static_cast<std::size_t>(rng.next_index(6)));
        for (auto& t : r) t = static_cast<gad::TokenId>(rng.next_index(4));

        const gad::Sequence prompt(p);
        const gad::Sequence response(r);
        const Eigen::VectorXd got = gad::featurize(spec, prompt, response);
        const Eigen::VectorXd expect = reference_featurize(spec, prompt, response);
        CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("length feature scales with the response and the configured scale") {
    gad::FeatureSpec spec = small_spec();
    spec.length_scale = 2.5;
    const Eigen::VectorXd f = gad::featurize(spec, seq({0}), seq({1, 2, 3}));
    CHECK(f[32] == doctest::Approx(2.5 * 3.0 / 8.0).epsilon(1e-12));
}

TEST_CASE("feature spec validation rejects inconsistent settings") {
    gad::FeatureSpec spec = small_spec();
    CHECK_NOTHROW(spec.validate());
    spec.feature_dim = 3;  // smaller than the vocabulary
    CHECK_THROWS_AS(spec.validate(), gad::ArgumentError);
    spec = small_spec();
    spec.ngram_orders = {};
    CHECK_THROWS_AS(spec.validate(), gad::ArgumentError);
    spec = small_spec();
    spec.ngram_orders = {0};
    CHECK_THROWS_AS(spec.validate(), gad::ArgumentError);
    spec = small_spec();
    spec.max_response_len = 0;
    CHECK_THROWS_AS(spec.validate(), gad::ArgumentError);
}

TEST_CASE("zero scorer scores everything zero; b2 passes straight through") {
    gad::ScorerNet net = gad::ScorerNet::zeros(33, 4);
    Eigen::VectorXd f = Eigen::VectorXd::Constant(33, 0.7);
    CHECK(net.score_features(f) == 0.0);

    net.params().segment("disc.b2")[0] = 1.7;
    CHECK(net.score_features(f) == 1.7);
}

TEST_CASE("scorer matches a hand-computed single-hidden-unit value") {
    // One hidden unit: score = w2 * tanh(w1 . f + b1) + b2.
    gad::ScorerNet net = gad::ScorerNet::zeros(2, 1);
    net.params().segment("disc.w1") << 0.5, -1.0;
    net.params().segment("disc.b1")[0] = 0.25;
    net.params().segment("disc.w2")[0] = 2.0;
    net.params().segment("disc.b2")[0] = -0.5;
    Eigen::VectorXd f(2);
    f << 1.0, 0.5;
    const double pre = 0.5 * 1.0 - 1.0 * 0.5 + 0.25;
    CHECK(net.score_features(f) == doctest::Approx(2.0 * std::tanh(pre) - 0.5).epsilon(1e-15));
}

TEST_CASE("scorer parameter layout is w1, b1, w2, b2") {
    gad::Rng rng(3);
    const gad::ScorerNet net(7, 3, rng);
    CHECK(net.params().segment_info("disc.w1").length == 21);
    CHECK(net.params().segment_info("disc.b1").length == 3);
    CHECK(net.params().segment_info("disc.w2").length == 3);
    CHECK(net.params().segment_info("disc.b2").length == 1);
    CHECK(net.params().size() == 28);
    // Biases start at zero, weights are randomized.
    CHECK(net.params().segment("disc.b1").isZero());
    CHECK(net.params().segment("disc.b2").isZero());
    CHECK(net.params().segment("disc.w1").cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("score_grad matches finite differences") {
    gad::Rng rng(5);
    const gad::ScorerNet net(6, 4, rng);
    Eigen::VectorXd f(6);
    f << 0.3, -0.1, 0.0, 0.9, -0.7, 0.2;
    const gad::ParamVector grad = net.score_grad(f);
    const Eigen::VectorXd fd = fd_net_grad(
        net, [&](const gad::ScorerNet& n) { return n.score_features(f); }, 1e-6);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
        CHECK(grad.values()[i] == doctest::Approx(fd[i]).epsilon(1e-5));
    }
}

TEST_CASE("bradley-terry loss sits at ln 2 for equal scores and vanishes with margin") {
    CHECK(gad::bt_loss_from_scores(0.0, {0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(gad::bt_loss_from_scores(1.3, {1.3, 1.3, 1.3}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // A +20 margin drives the loss below 1e-8.
    CHECK(gad::bt_loss_from_scores(20.0, {0.0}) < 1e-8);
    // Shift invariance: only score differences matter.
    CHECK(gad::bt_loss_from_scores(1.0, {0.4, -0.2}) ==
          doctest::Approx(gad::bt_loss_from_scores(101.0, {100.4, 99.8})).epsilon(1e-9));
}

TEST_CASE("cross-entropy loss sits at 2 ln 2 for zero scores and is not shift invariant") {
    CHECK(gad::ce_loss_from_scores(0.0, {0.0}) ==
          doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    // Saturated correct classification on both sides.
    CHECK(gad::ce_loss_from_scores(20.0, {-20.0}) < 1e-8);
    CHECK(gad::ce_loss_from_scores(1.0, {-1.0}) !=
          doctest::Approx(gad::ce_loss_from_scores(2.0, {0.0})).epsilon(1e-6));
}

TEST_CASE("group losses average over the student side") {
    const double single_a = gad::bt_loss_from_scores(1.0, {0.0});
    const double single_b = gad::bt_loss_from_scores(1.0, {2.0});
    CHECK(gad::bt_loss_from_scores(1.0, {0.0, 2.0}) ==
          doctest::Approx(0.5 * (single_a + single_b)).epsilon(1e-12));

    const double ce_a = gad::ce_loss_from_scores(1.0, {0.0});
    const double ce_b = gad::ce_loss_from_scores(1.0, {2.0});
    CHECK(gad::ce_loss_from_scores(1.0, {0.0, 2.0}) ==
          doctest::Approx(0.5 * (ce_a + ce_b)).epsilon(1e-12));
}

TEST_CASE("bt_loss_and_grad matches its score-space value and finite differences") {
    gad::Rng rng(11);
    gad::FeatureSpec spec = small_spec();
    gad::Discriminator disc(spec, 4, rng);
    const gad::Sequence prompt = seq({1, 2});
    const gad::Sequence teacher({0, 3, 4}, 4);
    const std::vector<gad::Sequence> students = {seq({2, 2}), seq({3})};

    const gad::DiscLossResult res = gad::bt_loss_and_grad(disc, prompt, teacher, students);
    std::vector<double> student_scores;
    for (const auto& s : students) student_scores.push_back(gad::score(disc, prompt, s));
    CHECK(res.loss ==
          doctest::Approx(gad::bt_loss_from_scores(gad::score(disc, prompt, teacher),
                                                   student_scores)).epsilon(1e-12));

    const Eigen::VectorXd fd = fd_net_grad(
        disc.net(),
        [&](const gad::ScorerNet& n) {
            gad::Discriminator probe = disc;
            probe.net().params().values() = n.params().values();
            std::vector<double> ss;
            for (const auto& s : students) ss.push_back(gad::score(probe, prompt, s));
            return gad::bt_loss_from_scores(gad::score(probe, prompt, teacher), ss);
        },
        1e-6);
    for (Eigen::Index i = 0; i < res.grad.size(); ++i) {
        CHECK(res.grad.values()[i] == doctest::Approx(fd[i]).epsilon(1e-4));
    }
}

TEST_CASE("ce_loss_and_grad_disc matches its score-space value and finite differences") {
    gad::Rng rng(13);
    gad::Discriminator disc(small_spec(), 4, rng);
    const gad::Sequence prompt = seq({0});
    const gad::Sequence teacher({1, 4}, 4);
    const std::vector<gad::Sequence> students = {seq({2}), seq({3, 3})};

    const gad::DiscLossResult res = gad::ce_loss_and_grad_disc(disc, prompt, teacher, students);
    std::vector<double> student_scores;
    for (const auto& s : students) student_scores.push_back(gad::score(disc, prompt, s));
    CHECK(res.loss ==
          doctest::Approx(gad::ce_loss_from_scores(gad::score(disc, prompt, teacher),
                                                   student_scores)).epsilon(1e-12));

    const Eigen::VectorXd fd = fd_net_grad(
        disc.net(),
        [&](const gad::ScorerNet& n) {
            gad::Discriminator probe = disc;
            probe.net().params().values() = n.params().values();
            std::vector<double> ss;
            for (const auto& s : students) ss.push_back(gad::score(probe, prompt, s));
            return gad::ce_loss_from_scores(gad::score(probe, prompt, teacher), ss);
        },
        1e-6);
    for (Eigen::Index i = 0; i < res.grad.size(); ++i) {
        CHECK(res.grad.values()[i] == doctest::Approx(fd[i]).epsilon(1e-4));
    }
}

TEST_CASE("feature-space losses match finite differences") {
    gad::Rng rng(17);
    gad::ScorerNet net(5, 3, rng);
    Eigen::VectorXd tf(5);
    tf << 0.2, 0.1, 0.0, 0.4, 0.3;
    std::vector<Eigen::VectorXd> sf(2, Eigen::VectorXd(5));
    sf[0] << 0.5, 0.0, 0.1, 0.2, 0.2;
    sf[1] << 0.0, 0.9, 0.0, 0.1, 0.0;

    const gad::DiscLossResult bt = gad::bt_loss_and_grad_features(net, tf, sf);
    const Eigen::VectorXd bt_fd = fd_net_grad(
        net,
        [&](const gad::ScorerNet& n) {
            return gad::bt_loss_from_scores(n.score_features(tf),
                                            {n.score_features(sf[0]), n.score_features(sf[1])});
        },
        1e-6);
    for (Eigen::Index i = 0; i < bt.grad.size(); ++i) {
        CHECK(bt.grad.values()[i] == doctest::Approx(bt_fd[i]).epsilon(1e-4));
    }

    const gad::DiscLossResult ce = gad::ce_loss_and_grad_features(net, tf, sf);
    const Eigen::VectorXd ce_fd = fd_net_grad(
        net,
        [&](const gad::ScorerNet& n) {
            return gad::ce_loss_from_scores(n.score_features(tf),
                                            {n.score_features(sf[0]), n.score_features(sf[1])});
        },
        1e-6);
    for (Eigen::Index i = 0; i < ce.grad.size(); ++i) {
        CHECK(ce.grad.values()[i] == doctest::Approx(ce_fd[i]).epsilon(1e-4));
    }
}

TEST_CASE("group losses reject an empty student side") {
    gad::Rng rng(19);
    gad::Discriminator disc(small_spec(), 4, rng);
    CHECK_THROWS_AS(gad::bt_loss_and_grad(disc, seq({0}), seq({1}), {}), gad::ArgumentError);
    CHECK_THROWS_AS(gad::ce_loss_and_grad_disc(disc, seq({0}), seq({1}), {}), gad::ArgumentError);
}

TEST_CASE("disc_accuracy scores ties at one half") {
    // A zero net scores every pair 0, so every comparison is a tie.
    gad::FeatureSpec spec = small_spec();
    gad::Rng rng(23);
    gad::Discriminator disc(spec, 2, rng);
    disc.params().values().setZero();
    std::vector<gad::AccuracyPair> pairs;
    pairs.push_back({seq({0}), seq({1}), seq({2})});
    pairs.push_back({seq({1}), seq({2, 2}), seq({3})});
    CHECK(gad::disc_accuracy(disc, pairs) == 0.5);
}

TEST_CASE("a length-sensitive scorer separates long teachers from short students") {
    // Hand-built net reading only the length feature: score = 5 * f_len.
    gad::FeatureSpec spec = small_spec();
    gad::ScorerNet net = gad::ScorerNet::zeros(spec.input_dim(), 1);
    net.params().segment("disc.w1").setZero();
    net.params().segment("disc.w1")[spec.feature_dim] = 5.0;
    net.params().segment("disc.w2")[0] = 1.0;

    gad::Rng rng(29);
    gad::Discriminator disc(spec, 1, rng);
    disc.params().values() = net.params().values();

    std::vector<gad::AccuracyPair> pairs;
    pairs.push_back({seq({0}), seq({1, 2, 3, 0}), seq({2})});
    pairs.push_back({seq({1}), seq({0, 0, 0}), seq({1, 2})});
    CHECK(gad::disc_accuracy(disc, pairs) == 1.0);
}

TEST_CASE("disc_accuracy equals a brute-force comparison count") {
    gad::Rng rng(31);
    gad::Discriminator disc(small_spec(), 4, rng);
    std::vector<gad::AccuracyPair> pairs;
    gad::Rng gen(37);
    for (int i = 0; i < 40; ++i) {
        auto draw = [&](int min_len) {
            std::vector<gad::TokenId> t(static_cast<std::size_t>(min_len + gen.next_index(4)));
            for (auto& x : t) x = static_cast<gad::TokenId>(gen.next_index(4));
            return gad::Sequence(t);
        };
        pairs.push_back({draw(0), draw(1), draw(1)});
    }
    double expect = 0.0;
    for (const auto& p : pairs) {
        const double dt = gad::score(disc, p.prompt, p.teacher_response);
        const double ds = gad::score(disc, p.prompt, p.student_response);
        if (dt > ds) expect += 1.0;
        else if (dt == ds) expect += 0.5;
    }
    expect /= static_cast<double>(pairs.size());
    CHECK(gad::disc_accuracy(disc, pairs) == doctest::Approx(expect).epsilon(1e-15));
    CHECK_THROWS_AS(gad::disc_accuracy(disc, {}), gad::ArgumentError);
}

TEST_CASE("identical inputs produce identical features and scores") {
    gad::Rng rng(41);
    gad::Discriminator disc(small_spec(), 4, rng);
    const Eigen::VectorXd f1 = gad::featurize(disc.features(), seq({1, 2}), seq({3}));
    const Eigen::VectorXd f2 = gad::featurize(disc.features(), seq({1, 2}), seq({3}));
    CHECK(f1 == f2);
    CHECK(gad::score(disc, seq({1, 2}), seq({3})) == gad::score(disc, seq({1, 2}), seq({3})));
}
