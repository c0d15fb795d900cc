#include "gad/rng.hpp"

#include <cmath>
#include <numbers>

#include "gad/error.hpp"

namespace gad {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t Rng::next_u64() {
    counter_ += 1;
    return mix64(seed_ + counter_ * kGamma);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::next_index(int n) {
    if (n <= 0) throw ArgumentError("Rng::next_index: n must be positive");
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<int>(x % bound);
}

Rng rng_fork(const Rng& rng, std::string_view label) {
    return Rng(mix64(rng.seed() ^ kGamma ^ fnv1a(label)));
}

int sample_categorical(const Eigen::VectorXd& pmf, Rng& rng) {
    if (pmf.size() == 0) throw ArgumentError("sample_categorical: empty pmf");
    if ((pmf.array() < 0.0).any()) {
        throw ArgumentError("sample_categorical: negative probability");
    }
    const double u = rng.next_double() * pmf.sum();
    double cum = 0.0;
    for (Eigen::Index k = 0; k < pmf.size(); ++k) {
        cum += pmf[k];
        if (u < cum) return static_cast<int>(k);
    }
    return static_cast<int>(pmf.size() - 1);
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = rng.next_index(i + 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

}  // namespace gad
