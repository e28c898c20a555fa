#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace speckle {

class RandomStream;

/// Root of a reproducible randomness tree. Every stochastic consumer asks
/// for its own labelled stream, so adding a consumer never perturbs others.
class SeedContext {
public:
    explicit SeedContext(std::uint64_t master_seed = 0) : master_(master_seed) {}

    std::uint64_t master_seed() const { return master_; }

    SeedContext derive(std::string_view label) const;
    SeedContext derive(std::uint64_t index) const;
    RandomStream stream(std::string_view label) const;

private:
    std::uint64_t master_;
};

/// mt19937_64 with hand-rolled distributions; the standard distribution
/// objects are implementation-defined and would break cross-platform
/// reproducibility of datasets.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // N(0, 1)
    std::uint64_t below(std::uint64_t n);  // unbiased integer in [0, n)

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                           first + static_cast<std::ptrdiff_t>(j));
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace speckle
