#include "loadcast/analysis.hpp"
#include "loadcast/error.hpp"
#include "loadcast/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace loadcast;
using namespace loadcast::analysis;

namespace {

std::vector<double> sine(std::size_t n, double period, double amplitude = 1.0) {
	std::vector<double> v(n);
	for (std::size_t t = 0; t < n; ++t) {
		v[t] = amplitude * std::sin(2 * std::numbers::pi * static_cast<double>(t) / period);
	}
	return v;
}

} // namespace

TEST(Periodogram, SinglePeriod) {
	const auto p = periodogram(sine(240, 24));
	const auto peaks = p.peaks(1);
	ASSERT_EQ(peaks.size(), 1u);
	EXPECT_NEAR(peaks[0].frequency, 1.0 / 24.0, 1e-12);
	EXPECT_NEAR(peaks[0].period_hours, 24.0, 1e-9);
	EXPECT_EQ(p.frequency.front(), 0.0);
	EXPECT_EQ(p.frequency.back(), 0.5);
}

TEST(Periodogram, DailyAndWeeklyTones) {
	const std::size_t n = 168 * 8;
	auto x = sine(n, 24, 2.0);
	const auto w = sine(n, 168, 1.0);
	for (std::size_t t = 0; t < n; ++t) {
		x[t] += w[t];
	}
	const auto peaks = periodogram(x).peaks(2);
	ASSERT_EQ(peaks.size(), 2u);
	EXPECT_NEAR(peaks[0].period_hours, 24.0, 1e-9);
	EXPECT_NEAR(peaks[1].period_hours, 168.0, 1e-9);
}

TEST(Periodogram, ConstantHasNoPower) {
	const auto p = periodogram(std::vector<double>(100, 3.5));
	for (const double v : p.power) {
		EXPECT_NEAR(v, 0.0, 1e-18);
	}
	EXPECT_THROW(periodogram(std::vector<double>{1.0}), DataError);
}

TEST(Periodogram, PowerSumsToSquaredDeviations) {
	Rng rng(12);
	for (const std::size_t n : {99u, 100u, 257u}) {
		std::vector<double> x(n);
		for (auto &v : x) {
			v = rng.normal() * 3 + 10;
		}
		const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
		double ss = 0;
		for (const double v : x) {
			ss += (v - mean) * (v - mean);
		}
		const auto p = periodogram(x);
		EXPECT_NEAR(std::accumulate(p.power.begin(), p.power.end(), 0.0), ss, 1e-8 * ss);
	}
}

TEST(Acf, UnitAtZeroAndPeriodic) {
	const auto r = acf(sine(24 * 50, 24), 48);
	ASSERT_TRUE(r.has_value());
	EXPECT_NEAR((*r)[0], 1.0, 1e-15);
	EXPECT_GT((*r)[24], 0.95);
	EXPECT_LT((*r)[12], -0.95);
	EXPECT_FALSE(acf(std::vector<double>(10, 1.0), 3).has_value());
}

TEST(Acf, WhiteNoiseWithinBand) {
	Rng rng(21);
	std::vector<double> x(5000);
	for (auto &v : x) {
		v = rng.normal();
	}
	const auto r = acf(x, 50);
	ASSERT_TRUE(r.has_value());
	const double band = 4.0 / std::sqrt(5000.0);
	for (std::size_t k = 1; k <= 50; ++k) {
		EXPECT_LT(std::fabs((*r)[k]), band) << k;
	}
}

TEST(Acf, MatchesDirectFormula) {
	Rng rng(22);
	std::vector<double> x(300);
	for (auto &v : x) {
		v = rng.uniform(0, 10);
	}
	const auto r = *acf(x, 20);
	const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 300.0;
	double c0 = 0;
	for (const double v : x) {
		c0 += (v - mean) * (v - mean);
	}
	for (std::size_t k = 0; k <= 20; ++k) {
		double ck = 0;
		for (std::size_t t = 0; t + k < x.size(); ++t) {
			ck += (x[t] - mean) * (x[t + k] - mean);
		}
		EXPECT_NEAR(r[k], ck / c0, 1e-12);
	}
}

TEST(PolyFit, QuadraticMinimum) {
	std::vector<double> t, y;
	for (double v = 0; v <= 35; v += 0.25) {
		t.push_back(v);
		y.push_back((v - 15) * (v - 15) + 700);
	}
	const auto fit = fit_poly(t, y, 2);
	ASSERT_EQ(fit.stationary_points.size(), 1u);
	EXPECT_TRUE(fit.stationary_points[0].minimum);
	EXPECT_NEAR(fit.stationary_points[0].x, 15.0, 0.01);
	EXPECT_NEAR(fit.evaluate(20), 725.0, 1e-6);
}

TEST(PolyFit, LinearCorrelationSign) {
	std::vector<double> x{1, 2, 3, 4, 5};
	std::vector<double> up{3, 5, 7, 9, 11}, down{9, 7, 5, 3, 1};
	EXPECT_NEAR(*fit_poly(x, up, 1).rho, 1.0, 1e-12);
	EXPECT_NEAR(*fit_poly(x, down, 1).rho, -1.0, 1e-12);
	EXPECT_NEAR(fit_poly(x, up, 1).coefficients[1], 2.0, 1e-12);
	EXPECT_THROW(fit_poly(std::vector<double>(5, 1.0), up, 1), DataError);
}

TEST(PolyFit, HigherDegreeNeverFitsWorse) {
	Rng rng(30);
	for (int trial = 0; trial < 20; ++trial) {
		std::vector<double> x(80), y(80);
		for (std::size_t k = 0; k < x.size(); ++k) {
			x[k] = rng.uniform(5, 35);
			y[k] = 1000 + 3 * x[k] + 0.5 * (x[k] - 20) * (x[k] - 20) + rng.normal() * 20;
		}
		const double r1 = fit_poly(x, y, 1).residual_ss;
		const double r2 = fit_poly(x, y, 2).residual_ss;
		const double r3 = fit_poly(x, y, 3).residual_ss;
		EXPECT_LE(r2, r1 * (1 + 1e-12));
		EXPECT_LE(r3, r2 * (1 + 1e-12));
	}
}

TEST(Bimodal, RecoversSeparatedModes) {
	Rng rng(40);
	std::vector<double> x;
	for (int k = 0; k < 4000; ++k) {
		x.push_back(k % 2 == 0 ? rng.normal() : 10 + rng.normal());
	}
	const auto fit = fit_bimodal(x);
	EXPECT_NEAR(fit.components[0].mean, 0.0, 0.1);
	EXPECT_NEAR(fit.components[1].mean, 10.0, 0.1);
	EXPECT_NEAR(fit.components[0].weight + fit.components[1].weight, 1.0, 1e-12);
	EXPECT_NEAR(fit.components[0].weight, 0.5, 0.03);
	for (std::size_t k = 1; k < fit.log_likelihood.size(); ++k) {
		EXPECT_GE(fit.log_likelihood[k], fit.log_likelihood[k - 1] - 1e-8);
	}
}

TEST(Bimodal, SingleGaussianStillFits) {
	Rng rng(41);
	std::vector<double> x(3000);
	for (auto &v : x) {
		v = 5 + 2 * rng.normal();
	}
	const auto fit = fit_bimodal(x);
	const double mixed = fit.components[0].weight * fit.components[0].mean + fit.components[1].weight * fit.components[1].mean;
	EXPECT_NEAR(mixed, 5.0, 0.15);
	EXPECT_NEAR(fit.components[0].weight + fit.components[1].weight, 1.0, 1e-12);
	for (std::size_t k = 1; k < fit.log_likelihood.size(); ++k) {
		EXPECT_GE(fit.log_likelihood[k], fit.log_likelihood[k - 1] - 1e-8);
	}
}

TEST(Monthly, OneRowPerCalendarMonth) {
	const auto start = make_hour(parse_date("2019-01-01"), 0);
	std::vector<HourStamp> times;
	std::vector<double> temp, demand;
	Rng rng(42);
	for (std::int64_t h = 0; h < 24 * 365; ++h) {
		times.push_back(start + h);
		const double t = rng.uniform(10, 30);
		temp.push_back(t);
		demand.push_back(500 + 20 * t);
	}
	const auto rows = fit_monthly_linear(times, temp, demand);
	ASSERT_EQ(rows.size(), 12u);
	std::size_t n = 0;
	for (const auto &r : rows) {
		n += r.n;
		EXPECT_NEAR(*r.slope, 20.0, 1e-9);
		EXPECT_NEAR(*r.rho, 1.0, 1e-12);
	}
	EXPECT_EQ(n, times.size());
}
