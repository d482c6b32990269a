#include "loadcast/error.hpp"
#include "loadcast/features.hpp"
#include "loadcast/random.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace loadcast;
using namespace loadcast::features;

namespace {

FeatureFrame ramp_frame(std::size_t rows, std::size_t width) {
	FeatureFrame f;
	f.start = make_hour(parse_date("2021-03-01"), 0);
	f.rows = rows;
	for (std::size_t c = 0; c < width; ++c) {
		f.names.push_back("f" + std::to_string(c));
	}
	for (std::size_t r = 0; r < rows; ++r) {
		for (std::size_t c = 0; c < width; ++c) {
			f.values.push_back(static_cast<double>(r * (c + 1)));
		}
		f.demand.push_back(1000.0 + static_cast<double>(r));
		f.holiday.push_back(0);
	}
	return f;
}

} // namespace

TEST(Encoding, PhaseZero) {
	const auto e = encode_time(0.0);
	EXPECT_EQ(e.day_sin, 0.0);
	EXPECT_EQ(e.week_sin, 0.0);
	EXPECT_EQ(e.year_sin, 0.0);
	EXPECT_EQ(e.day_cos, 1.0);
	EXPECT_EQ(e.week_cos, 1.0);
	EXPECT_EQ(e.year_cos, 1.0);
}

TEST(Encoding, QuarterDay) {
	const auto e = encode_time(6.0);
	EXPECT_NEAR(e.day_sin, 1.0, 1e-15);
	EXPECT_NEAR(e.day_cos, 0.0, 1e-15);
}

TEST(Encoding, WeekPeriodicity) {
	const auto a = encode_time(0.0);
	const auto b = encode_time(168.0);
	EXPECT_NEAR(a.week_sin, b.week_sin, 1e-12);
	EXPECT_NEAR(a.week_cos, b.week_cos, 1e-12);
	EXPECT_NEAR(a.day_sin, b.day_sin, 1e-12);
}

TEST(Encoding, UnitCircleAndPeriods) {
	Rng rng(5);
	for (int k = 0; k < 10000; ++k) {
		const double t = rng.uniform(0.0, 70000.0);
		const auto e = encode_time(t);
		EXPECT_NEAR(e.day_sin * e.day_sin + e.day_cos * e.day_cos, 1.0, 1e-12);
		EXPECT_NEAR(e.week_sin * e.week_sin + e.week_cos * e.week_cos, 1.0, 1e-12);
		EXPECT_NEAR(e.year_sin * e.year_sin + e.year_cos * e.year_cos, 1.0, 1e-12);
		EXPECT_NEAR(encode_time(t + kDayPeriod).day_sin, e.day_sin, 1e-9);
		EXPECT_NEAR(encode_time(t + kWeekPeriod).week_cos, e.week_cos, 1e-9);
		EXPECT_NEAR(encode_time(t + kYearPeriod).year_sin, e.year_sin, 1e-9);
	}
}

TEST(Encoding, ContinuousAcrossMidnight) {
	EXPECT_LT(std::fabs(encode_time(23.999).day_sin - encode_time(24.0).day_sin), 1e-3);
	EXPECT_LT(std::fabs(encode_time(23.999).day_cos - encode_time(24.0).day_cos), 1e-3);
}

TEST(Workday, Flags) {
	ingest::CalendarTable cal;
	cal.set(parse_date("2024-12-25"), true);
	cal.set(parse_date("2024-12-24"), false);
	cal.set(parse_date("2024-12-22"), false);
	EXPECT_EQ(workday_flag(parse_date("2024-12-25"), cal), 0);
	EXPECT_EQ(workday_flag(parse_date("2024-12-24"), cal), 1); // Tuesday
	EXPECT_EQ(workday_flag(parse_date("2024-12-22"), cal), 0); // Sunday
	EXPECT_THROW(workday_flag(parse_date("2024-12-26"), cal), DataError);
}

TEST(FeatureNames, SetWidths) {
	EXPECT_EQ(feature_names(FeatureSet::full).size(), 18u);
	EXPECT_EQ(feature_names(FeatureSet::no_satellite).size(), 14u);
	EXPECT_EQ(parse_feature_set("paper-table2"), FeatureSet::no_satellite);
	EXPECT_THROW(parse_feature_set("all"), UsageError);
}

TEST(Normalization, MinMax) {
	FeatureFrame f = ramp_frame(3, 1);
	f.values = {2, 4, 6};
	const auto spec = fit_normalization(f, 0, 3);
	EXPECT_EQ(spec.apply(0, 2), 0.0);
	EXPECT_EQ(spec.apply(0, 4), 0.5);
	EXPECT_EQ(spec.apply(0, 6), 1.0);
	EXPECT_GT(spec.apply(0, 9), 1.0);
	Rng rng(1);
	for (int k = 0; k < 100; ++k) {
		const double x = rng.uniform(-10, 10);
		EXPECT_NEAR(spec.invert(0, spec.apply(0, x)), x, 1e-12);
		EXPECT_NEAR(spec.invert_target(spec.apply_target(1000 + x)), 1000 + x, 1e-12);
	}
}

TEST(Normalization, ConstantFeatureMapsToZero) {
	FeatureFrame f = ramp_frame(4, 2);
	for (std::size_t r = 0; r < 4; ++r) {
		f.values[r * 2] = 7.0;
	}
	const auto spec = fit_normalization(f, 0, 4);
	EXPECT_EQ(spec.constant_features, std::vector<std::string>{"f0"});
	EXPECT_EQ(spec.apply(0, 7.0), 0.0);
}

TEST(Split, CountsOf124Hours) {
	const auto p = plan_split(124, 24, Accounting::standard);
	EXPECT_EQ(p.samples, 100u);
	EXPECT_EQ(p.train, 80u);
	EXPECT_EQ(p.val, 10u);
	EXPECT_EQ(p.test, 10u);
}

TEST(Split, SevenYearTrimmedCounts) {
	EXPECT_EQ(static_cast<std::size_t>(parse_date("2024-12-31").time_since_epoch().count() -
	                                   parse_date("2018-01-01").time_since_epoch().count() + 1) *
	              24,
	          61368u);
	const auto p = plan_split(61368, 24, Accounting::trimmed);
	EXPECT_EQ(p.train, 49056u);
	EXPECT_EQ(p.val, 6132u);
	EXPECT_EQ(p.test, 6132u);
	EXPECT_EQ(parse_accounting("paper"), Accounting::trimmed);
	EXPECT_EQ(parse_accounting("default"), Accounting::standard);
}

TEST(Split, WindowsAndTargets) {
	const auto frame = ramp_frame(124, 2);
	const auto data = split_and_window(frame, 24);
	const auto &storage = data.storage();
	std::size_t expected_row = 24;
	for (const auto split : {Split::train, Split::val, Split::test}) {
		const auto view = data.subset(split);
		for (std::size_t k = 0; k < view.size(); ++k) {
			const std::size_t first = view.target_row(k) - 24;
			EXPECT_EQ(view.target_row(k), expected_row++);
			const auto in = view.inputs(k);
			ASSERT_EQ(in.size(), 48u);
			for (std::size_t t = 0; t < 24; ++t) {
				EXPECT_EQ(in[t * 2 + 1], storage.inputs[(first + t) * 2 + 1]);
			}
			EXPECT_EQ(view.target_time(k), frame.start + static_cast<std::int64_t>(first + 23) + 1);
			EXPECT_EQ(view.target_mw(k), frame.demand[view.target_row(k)]);
			EXPECT_EQ(view.last_raw_row(k)[0], frame.values[(first + 23) * 2]);
		}
	}
	EXPECT_EQ(expected_row, 124u);
}

TEST(Split, NormalizationSeesTrainingRowsOnly) {
	auto frame = ramp_frame(124, 1);
	const auto baseline = split_and_window(frame, 24).storage().normalization;
	for (std::size_t r = 104; r < 124; ++r) {
		frame.values[r] = 1e9;
		frame.demand[r] = -1e9;
	}
	const auto changed = split_and_window(frame, 24).storage().normalization;
	EXPECT_EQ(baseline.min, changed.min);
	EXPECT_EQ(baseline.max, changed.max);
	EXPECT_EQ(baseline.target_min, changed.target_min);
	EXPECT_EQ(baseline.target_max, changed.target_max);
	EXPECT_EQ(changed.max[0], 103.0);
}

TEST(Split, TooFewRows) {
	EXPECT_THROW(split_and_window(ramp_frame(24, 1), 24), DataError);
}

TEST(Dataset, RoundTrip) {
	test_support::TempDir dir("wdst");
	const auto data = test_support::synthetic_dataset(8, 3, FeatureSet::no_satellite);
	save_dataset(data, dir.path() / "d.wdst");
	const auto back = load_dataset(dir.path() / "d.wdst");
	EXPECT_EQ(back.storage().inputs, data.storage().inputs);
	EXPECT_EQ(back.storage().targets, data.storage().targets);
	EXPECT_EQ(back.storage().names, data.storage().names);
	EXPECT_EQ(back.storage().feature_set, FeatureSet::no_satellite);
	EXPECT_EQ(back.storage().plan.train, data.storage().plan.train);
	EXPECT_EQ(back.test().target_time(0), data.test().target_time(0));
}

TEST(Frame, RejectsMissingCells) {
	auto table = preprocess::clean_table(test_support::synthetic_merged(4, 1)).table;
	table.column(col::temp).missing[5] = 1;
	EXPECT_THROW(build_frame(table, FeatureSet::full), DataError);
}
