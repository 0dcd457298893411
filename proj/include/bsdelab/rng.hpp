#pragma once

#include <cstdint>

namespace bsdelab {

// Disjoint substream tags so independent consumers of the same seed never
// collide on a counter.
enum class Stream : std::uint64_t {
    EulerIncrement = 1,
    OracleIncrement = 2,
    Probe = 3,
};

// SplitMix64 finalizer (Steele/Lea/Flood mixing constants).
std::uint64_t mix64(std::uint64_t v);

// Stateless counter hash of (seed, stream, a, b, c). Output depends only on
// the key, never on evaluation order, which makes parallel generation
// reproducible across any thread count.
std::uint64_t counter_hash(std::uint64_t seed, Stream stream, std::uint64_t a,
                           std::uint64_t b, std::uint64_t c);

// Uniform draw strictly inside (0, 1) from the 53 high bits of the hash.
double counter_uniform(std::uint64_t seed, Stream stream, std::uint64_t a,
                       std::uint64_t b, std::uint64_t c);

// Inverse of the standard normal CDF. Acklam's rational approximation
// (relative error ~1.15e-9) refined by one Halley step through std::erfc;
// the coefficients are listed in the implementation file.
double inverse_normal_cdf(double p);

// Standard normal draw keyed by (seed, stream, a, b, c).
double counter_normal(std::uint64_t seed, Stream stream, std::uint64_t a,
                      std::uint64_t b, std::uint64_t c);

} // namespace bsdelab
