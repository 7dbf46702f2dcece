#pragma once

#include <cstdint>

namespace densemu {

// Counter-based generator: every variate is a pure function of
// (seed, a, b, c, d), so draws can be replayed, nested designs share
// their prefixes and parallel campaigns never race on generator state.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                       std::uint64_t d = 0) const;

    // uniform on [0, 1)
    double uniform(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                   std::uint64_t d = 0) const;

    // standard normal by inverse-CDF transform of a uniform
    double normal(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                  std::uint64_t d = 0) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

// Quantile function of the standard normal (Wichura's AS241 rational
// approximations, accurate to full double precision).
double normal_quantile(double p);

// Sequential stream over the counter generator, for shuffles and other
// places that consume an unknown number of draws.
class SequentialRng {
public:
    SequentialRng(std::uint64_t seed, std::uint64_t stream)
        : rng_(seed), stream_(stream) {}

    double uniform() { return rng_.uniform(stream_, counter_++); }

    // unbiased integer in [0, n)
    std::uint64_t below(std::uint64_t n);

private:
    CounterRng rng_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace densemu
