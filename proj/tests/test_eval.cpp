#include "loadcast/error.hpp"
#include "loadcast/eval.hpp"
#include "loadcast/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace loadcast;
using namespace loadcast::eval;

namespace {

struct Days {
	std::vector<HourStamp> times;
	std::vector<double> real;
	std::vector<double> predicted;
	std::vector<std::uint8_t> holiday;

	ResidualSeries series() const { return make_residuals(times, real, predicted, holiday); }
};

double profile(int h) {
	return 1000.0 + 300.0 * std::exp(-0.5 * std::pow((h - 20) / 2.0, 2)) -
	       200.0 * std::exp(-0.5 * std::pow((h - 5) / 1.5, 2));
}

Days daily_profiles(std::size_t days, int shift) {
	Days d;
	const auto start = make_hour(parse_date("2023-01-02"), 0);
	for (std::size_t k = 0; k < days * 24; ++k) {
		const int h = static_cast<int>(k % 24);
		d.times.push_back(start + static_cast<std::int64_t>(k));
		d.real.push_back(profile(h));
		d.predicted.push_back(profile(h + shift));
		d.holiday.push_back(0);
	}
	return d;
}

} // namespace

TEST(Extrema, IdenticalProfiles) {
	const auto r = extrema_timing(daily_profiles(5, 0).series());
	ASSERT_EQ(r.days.size(), 5u);
	for (const auto &d : r.days) {
		EXPECT_EQ(d.dt_max, 0);
		EXPECT_EQ(d.dt_min, 0);
	}
	EXPECT_EQ(r.max_exact_pct, 100.0);
	EXPECT_EQ(r.min_exact_pct, 100.0);
}

TEST(Extrema, EarlyPeakIsPositive) {
	// Predicted profile shifted so its peak lands at 19 while the real one is at 20.
	const auto r = extrema_timing(daily_profiles(2, 1).series());
	EXPECT_EQ(r.days[0].t_max_real, 20);
	EXPECT_EQ(r.days[0].t_max_pred, 19);
	EXPECT_EQ(r.days[0].dt_max, 1);
	EXPECT_EQ(r.max_exact_pct, 0.0);
	EXPECT_EQ(r.max_within1_pct, 100.0);
}

TEST(Extrema, TiesGoToEarliestHour) {
	const std::vector<double> flat(24, 5.0);
	EXPECT_EQ(argmax_earliest(flat), 0u);
	EXPECT_EQ(argmin_earliest(flat), 0u);
	Rng rng(3);
	for (int trial = 0; trial < 200; ++trial) {
		std::vector<double> v(24);
		for (auto &x : v) {
			x = static_cast<double>(rng.below(4));
		}
		std::size_t best = 0;
		for (std::size_t k = 1; k < v.size(); ++k) {
			if (v[k] > v[best]) {
				best = k;
			}
		}
		EXPECT_EQ(argmax_earliest(v), best);
	}
}

TEST(Extrema, PartialDaysAreDropped) {
	auto d = daily_profiles(3, 0);
	d.times.erase(d.times.begin(), d.times.begin() + 5);
	d.real.erase(d.real.begin(), d.real.begin() + 5);
	d.predicted.erase(d.predicted.begin(), d.predicted.begin() + 5);
	d.holiday.erase(d.holiday.begin(), d.holiday.begin() + 5);
	const auto r = extrema_timing(d.series());
	EXPECT_EQ(r.days.size(), 2u);
	EXPECT_EQ(r.dropped_days, 1u);
}

TEST(Extrema, ExactNeverExceedsWithinOne) {
	Rng rng(4);
	for (int trial = 0; trial < 50; ++trial) {
		auto d = daily_profiles(7, 0);
		for (auto &p : d.predicted) {
			p += rng.normal() * 60.0;
		}
		const auto r = extrema_timing(d.series());
		EXPECT_LE(r.max_exact_pct, r.max_within1_pct);
		EXPECT_LE(r.min_exact_pct, r.min_within1_pct);
	}
}

TEST(BoxStats, ZeroResiduals) {
	const auto s = box_stats(std::vector<double>(10, 0.0));
	EXPECT_EQ(s.median, 0.0);
	EXPECT_TRUE(s.outliers.empty());
}

TEST(BoxStats, Quartiles) {
	const auto s = box_stats({-3, -1, 0, 1, 3});
	EXPECT_EQ(s.median, 0.0);
	EXPECT_EQ(s.q1, -1.0);
	EXPECT_EQ(s.q3, 1.0);
	EXPECT_EQ(s.lower_whisker, -3.0);
	EXPECT_EQ(s.upper_whisker, 3.0);
}

TEST(BoxStats, ExtremeValueIsOutlier) {
	std::vector<double> v;
	for (int k = 0; k < 20; ++k) {
		v.push_back(k % 2 == 0 ? 1.0 : -1.0);
	}
	v.push_back(100.0);
	const auto s = box_stats(v);
	ASSERT_EQ(s.outliers.size(), 1u);
	EXPECT_EQ(s.outliers[0], 100.0);
	EXPECT_EQ(s.upper_whisker, 1.0);
}

TEST(GroupErrors, CoversEveryResidualOnce) {
	auto d = daily_profiles(21, 0);
	Rng rng(2);
	for (std::size_t k = 0; k < d.predicted.size(); ++k) {
		d.predicted[k] += rng.normal() * 10.0;
		d.holiday[k] = (k / 24) % 9 == 0 ? 1 : 0;
	}
	const auto series = d.series();
	for (const auto key : {GroupKey::weekday, GroupKey::hour}) {
		const auto g = group_errors(series, key);
		EXPECT_EQ(g.rows.size(), key == GroupKey::weekday ? 14u : 48u);
		std::size_t total = 0;
		for (const auto &row : g.rows) {
			total += row.stats.n;
		}
		EXPECT_EQ(total, series.size());
	}
}

TEST(Cost, ReferenceValues) {
	EXPECT_EQ(cost_of_error(284, 24, 54), 368064.0);
	EXPECT_EQ(cost_of_error(0, 24, 54), 0.0);
	EXPECT_EQ(cost_of_error(100, 1, 54), 5400.0);
	EXPECT_THROW(cost_of_error(-1, 1, 1), UsageError);
}

TEST(Cost, Bilinear) {
	Rng rng(7);
	for (int k = 0; k < 100; ++k) {
		const double a = rng.uniform(0, 500), b = rng.uniform(0, 500), p = rng.uniform(0, 100), q = rng.uniform(0, 100);
		EXPECT_NEAR(cost_of_error(a + b, 24, p), cost_of_error(a, 24, p) + cost_of_error(b, 24, p), 1e-6);
		EXPECT_NEAR(cost_of_error(a, 24, p + q), cost_of_error(a, 24, p) + cost_of_error(a, 24, q), 1e-6);
	}
}

TEST(Histogram, DensityIntegratesToOne) {
	Rng rng(9);
	std::vector<double> r(5000);
	for (auto &v : r) {
		v = rng.normal() * 30.0;
	}
	const auto h = residual_histogram(r, 7.5);
	double area = 0;
	std::size_t n = 0;
	for (std::size_t k = 0; k < h.density.size(); ++k) {
		area += h.density[k] * h.bin_width;
		n += h.counts[k];
	}
	EXPECT_NEAR(area, 1.0, 1e-9);
	EXPECT_EQ(n, r.size());
	EXPECT_EQ(std::fmod(h.origin, 7.5), 0.0);
	EXPECT_LT(std::fabs(h.mean), 3.0 * h.sd / std::sqrt(static_cast<double>(r.size())));
}

TEST(Histogram, EqualResidualsShareOneBin) {
	const auto h = residual_histogram(std::vector<double>(9, 4.0), 10.0);
	std::size_t occupied = 0;
	for (const auto c : h.counts) {
		occupied += c > 0 ? 1 : 0;
	}
	EXPECT_EQ(occupied, 1u);
	EXPECT_EQ(h.sd, 0.0);
	EXPECT_THROW(residual_histogram(std::vector<double>{}, 1.0), DataError);
}
