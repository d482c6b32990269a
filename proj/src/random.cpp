#include "loadcast/random.hpp"

#include <cmath>
#include <numbers>

namespace loadcast {

double Rng::normal() {
	if (has_spare_) {
		has_spare_ = false;
		return spare_;
	}
	double u1 = 0.0;
	do {
		u1 = uniform();
	} while (u1 <= 0.0);
	const double u2 = uniform();
	const double radius = std::sqrt(-2.0 * std::log(u1));
	const double angle = 2.0 * std::numbers::pi * u2;
	spare_ = radius * std::sin(angle);
	has_spare_ = true;
	return radius * std::cos(angle);
}

std::size_t Rng::below(std::size_t n) {
	if (n <= 1) {
		return 0;
	}
	const std::uint64_t bound = static_cast<std::uint64_t>(n);
	const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
	std::uint64_t draw = 0;
	do {
		draw = engine_();
	} while (draw >= limit);
	return static_cast<std::size_t>(draw % bound);
}

std::uint64_t splitmix64(std::uint64_t x) {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
	return splitmix64(splitmix64(base) ^ (salt * 0xd6e8feb86659fd93ULL + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
	std::uint64_t hash = 0xcbf29ce484222325ULL;
	for (const char ch : tag) {
		hash ^= static_cast<unsigned char>(ch);
		hash *= 0x100000001b3ULL;
	}
	return derive_seed(base, hash);
}

} // namespace loadcast
