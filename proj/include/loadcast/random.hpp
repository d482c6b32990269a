#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace loadcast {

/// Seeded generator with platform-independent output.
///
/// The standard distributions are implementation-defined, so every draw goes
/// through explicit conversions of the raw 64-bit engine output.
class Rng {
public:
	explicit Rng(std::uint64_t seed) : engine_(seed) {}

	std::uint64_t next() { return engine_(); }

	/// Uniform on [0, 1) with 53 bits of resolution.
	double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	/// Standard normal via Box-Muller.
	double normal();

	/// Unbiased integer on [0, n).
	std::size_t below(std::size_t n);

	bool bernoulli(double p) { return uniform() < p; }

private:
	std::mt19937_64 engine_;
	double spare_ = 0.0;
	bool has_spare_ = false;
};

/// splitmix64 finalizer; a good bijective mixer for deriving child seeds.
std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

/// Seed derived from a textual identifier (FNV-1a, then mixed with the base).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

} // namespace loadcast
