#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace gad {

// Counter-based pseudo-random stream. A stream is fully described by
// (seed, counter): draw n produces splitmix64(seed + n * gamma), so two
// streams with equal state yield bit-identical draws on any platform.
// Independent streams are obtained with rng_fork, never by sharing.
class Rng {
public:
    static constexpr const char* kAlgorithmId = "splitmix64.fnv1a-fork.v1";

    Rng() : Rng(0) {}
    explicit Rng(std::uint64_t seed) : seed_(seed), counter_(0) {}
    Rng(std::uint64_t seed, std::uint64_t counter) : seed_(seed), counter_(counter) {}

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double next_double();

    // Standard normal via Box-Muller (one value per two draws).
    double next_gaussian();

    // Uniform integer in {0, ..., n-1}; n must be positive.
    int next_index(int n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

// Derives an independent child stream from (parent seed, label). Pure in
// its arguments: the parent's counter does not participate, so forks may
// be taken in any order.
Rng rng_fork(const Rng& rng, std::string_view label);

// Inverse-CDF draw from a probability vector. Entries must be >= 0; they
// are treated as already normalized.
int sample_categorical(const Eigen::VectorXd& pmf, Rng& rng);

// Fisher-Yates permutation of {0, ..., n-1}.
std::vector<int> shuffled_indices(int n, Rng& rng);

}  // namespace gad
