#include "loadcast/error.hpp"
#include "loadcast/preprocess.hpp"
#include "loadcast/random.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace loadcast;
using namespace loadcast::preprocess;

namespace {

OptionalSeries hourly_pattern(std::size_t days) {
	OptionalSeries s(days * 24);
	for (std::size_t i = 0; i < s.size(); ++i) {
		s[i] = 100.0 * static_cast<double>(i / 24) + static_cast<double>(i % 24);
	}
	return s;
}

} // namespace

TEST(Impute, ShortGapIsLinear) {
	const OptionalSeries s{10.0, std::nullopt, std::nullopt, 16.0};
	const auto r = impute_gaps(s);
	EXPECT_EQ(r.values, (std::vector<double>{10, 12, 14, 16}));
	EXPECT_EQ(r.short_filled, 2u);
	EXPECT_EQ(r.long_filled, 0u);
}

TEST(Impute, FourHourGapStillLinear) {
	const OptionalSeries s{0.0, std::nullopt, std::nullopt, std::nullopt, std::nullopt, 5.0};
	EXPECT_EQ(impute_gaps(s).values, (std::vector<double>{0, 1, 2, 3, 4, 5}));
}

TEST(Impute, LongGapUsesNeighbouringDays) {
	auto s = hourly_pattern(3);
	for (std::size_t h = 30; h < 36; ++h) {
		s[h] = std::nullopt;
	}
	const auto r = impute_gaps(s);
	EXPECT_EQ(r.long_filled, 6u);
	for (std::size_t h = 30; h < 36; ++h) {
		EXPECT_EQ(r.values[h], 0.5 * (*s[h - 24] + *s[h + 24]));
	}
}

TEST(Impute, GapBeyondDayIsUnresolved) {
	auto s = hourly_pattern(4);
	for (std::size_t h = 30; h < 56; ++h) {
		s[h] = std::nullopt;
	}
	const auto r = impute_gaps(s);
	ASSERT_EQ(r.unresolved.size(), 1u);
	EXPECT_EQ(r.unresolved[0].first, 30u);
	EXPECT_EQ(r.unresolved[0].length, 26u);
	EXPECT_TRUE(std::isnan(r.values[40]));
}

TEST(Impute, NoGapsIsIdentity) {
	const auto s = hourly_pattern(2);
	const auto r = impute_gaps(s);
	for (std::size_t i = 0; i < s.size(); ++i) {
		EXPECT_EQ(r.values[i], *s[i]);
	}
}

TEST(Impute, Idempotent) {
	Rng rng(3);
	auto s = hourly_pattern(6);
	for (std::size_t i = 30; i < s.size() - 30; ++i) {
		if (rng.bernoulli(0.1)) {
			s[i] = std::nullopt;
		}
	}
	const auto once = impute_gaps(s);
	OptionalSeries again(once.values.begin(), once.values.end());
	const auto twice = impute_gaps(again);
	EXPECT_EQ(once.values, twice.values);
}

TEST(Outliers, StandardNormalRate) {
	Rng rng(2024);
	std::vector<double> x(1000000);
	for (auto &v : x) {
		v = rng.normal();
	}
	const auto b = detect_outliers(x);
	const double pct = 100.0 * static_cast<double>(b.flagged) / static_cast<double>(x.size());
	EXPECT_NEAR(pct, 0.27, 0.05);
}

TEST(Outliers, ConstantSeriesHasNone) {
	const std::vector<double> x(100, 4.2);
	EXPECT_EQ(detect_outliers(x).flagged, 0u);
	EXPECT_EQ(detect_outliers(x, BoundsMode::daily).flagged, 0u);
}

TEST(Outliers, FlagCountMatchesBounds) {
	Rng rng(8);
	for (int trial = 0; trial < 20; ++trial) {
		std::vector<double> x(500);
		for (auto &v : x) {
			v = rng.normal() * (rng.bernoulli(0.02) ? 8.0 : 1.0);
		}
		double mean = 0;
		for (const double v : x) {
			mean += v;
		}
		mean /= static_cast<double>(x.size());
		double ss = 0;
		for (const double v : x) {
			ss += (v - mean) * (v - mean);
		}
		const double sd = std::sqrt(ss / static_cast<double>(x.size()));
		std::size_t outside = 0;
		for (const double v : x) {
			outside += (v < mean - 3 * sd || v > mean + 3 * sd) ? 1 : 0;
		}
		EXPECT_EQ(detect_outliers(x).flagged, outside);
	}
}

TEST(Outliers, RetainAndInterpolate) {
	const std::vector<double> x{1, 2, 50, 4, 5};
	const std::vector<std::uint8_t> none(5, 0);
	EXPECT_EQ(correct_outliers(x, none, CorrectionPolicy::interpolate), x);
	const std::vector<std::uint8_t> mask{0, 0, 1, 0, 0};
	EXPECT_EQ(correct_outliers(x, mask, CorrectionPolicy::retain), x);
	EXPECT_EQ(correct_outliers(x, mask, CorrectionPolicy::interpolate), (std::vector<double>{1, 2, 3, 4, 5}));
	EXPECT_EQ(below_only(x, std::vector<std::uint8_t>{1, 0, 1, 0, 0}, 1.5), (std::vector<std::uint8_t>{1, 0, 0, 0, 0}));
}

TEST(Wind, ReferenceDirections) {
	const auto east = decompose_wind(90, 10);
	EXPECT_NEAR(east.u, -10, 1e-12);
	EXPECT_NEAR(east.v, 0, 1e-12);
	const auto south = decompose_wind(180, 5);
	EXPECT_NEAR(south.u, 0, 1e-12);
	EXPECT_NEAR(south.v, 5, 1e-12);
	const auto calm = decompose_wind(237, 0);
	EXPECT_EQ(calm.u, 0.0);
	EXPECT_EQ(calm.v, 0.0);
}

TEST(Wind, MagnitudeAndDirectionRoundTrip) {
	Rng rng(6);
	for (int k = 0; k < 2000; ++k) {
		const double wd = rng.uniform(0, 360);
		const double ws = rng.uniform(0.1, 60);
		const auto w = decompose_wind(wd, ws);
		EXPECT_NEAR(std::hypot(w.u, w.v), ws, 1e-9 * ws);
		double back = wind_direction(w);
		double diff = std::fmod(std::fabs(back - wd), 360.0);
		diff = std::min(diff, 360.0 - diff);
		EXPECT_LT(diff, 1e-6);
	}
}

TEST(Describe, HandValues) {
	const std::vector<double> x{1, 2, 3, 4, 5};
	const auto d = describe(x);
	EXPECT_EQ(d.mean, 3.0);
	EXPECT_EQ(d.median, 3.0);
	EXPECT_NEAR(d.sd, std::sqrt(2.0), 1e-15);
	EXPECT_EQ(d.q1, 2.0);
	EXPECT_EQ(d.q3, 4.0);
	EXPECT_NEAR(d.skewness, 0.0, 1e-15);
	const auto c = describe(std::vector<double>(4, 2.0));
	EXPECT_EQ(c.sd, 0.0);
	EXPECT_FALSE(c.shape_defined);
	EXPECT_EQ(c.skewness, 0.0);
	EXPECT_THROW(describe(std::vector<double>{}), DataError);
}

TEST(Clean, SyntheticHasNoImputation) {
	const auto result = clean_table(test_support::synthetic_merged(30, 7));
	for (const auto &row : result.report.rows) {
		EXPECT_EQ(row.missing, 0u) << row.variable;
		EXPECT_EQ(row.imputed_short, 0u) << row.variable;
		EXPECT_EQ(row.imputed_long, 0u) << row.variable;
	}
	EXPECT_TRUE(result.table.has(col::u_wind));
	EXPECT_FALSE(result.table.has(col::wd));
	for (const auto &c : result.table.columns()) {
		EXPECT_EQ(c.missing_count(), 0u) << c.name;
	}
}

TEST(Clean, FillsGapsAndLiftsBlackouts) {
	auto raw = test_support::synthetic_merged(10, 2);
	auto &temp = raw.column(col::temp);
	for (std::size_t h = 50; h < 53; ++h) {
		temp.values[h] = std::nan("");
		temp.missing[h] = 1;
	}
	auto &demand = raw.column(col::demand);
	for (std::size_t h = 100; h < 106; ++h) {
		demand.values[h] = 5.0;
	}
	const auto result = clean_table(raw);
	EXPECT_EQ(result.report.row(col::temp).imputed_short, 3u);
	EXPECT_EQ(result.report.row(col::demand).corrected, 6u);
	const auto &d = result.table.column(col::demand).values;
	for (std::size_t h = 100; h < 106; ++h) {
		EXPECT_GT(d[h], 500.0);
	}
}

TEST(Clean, LongGapFails) {
	auto raw = test_support::synthetic_merged(5, 2);
	auto &hum = raw.column(col::hum);
	for (std::size_t h = 30; h < 60; ++h) {
		hum.values[h] = std::nan("");
		hum.missing[h] = 1;
	}
	EXPECT_THROW(clean_table(raw), UnresolvedGapError);
}
