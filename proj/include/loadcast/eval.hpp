#pragma once

#include "loadcast/calendar.hpp"
#include "loadcast/features.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace loadcast::eval {

struct ResidualPoint {
	HourStamp time;
	double real = 0.0;
	double predicted = 0.0;
	double error = 0.0; ///< real - predicted, MW
	int weekday = 0;    ///< 0 = Monday
	int hour = 0;
	bool holiday = false;
};

using ResidualSeries = std::vector<ResidualPoint>;

ResidualSeries make_residuals(std::span<const HourStamp> times, std::span<const double> real,
                              std::span<const double> predicted, std::span<const std::uint8_t> holiday);

/// Residuals for every sample of a split given MW predictions in sample order.
ResidualSeries make_residuals(const features::WindowedDataset &data, std::span<const double> predicted);

std::string residuals_csv(const ResidualSeries &series);

/// Index of the largest (smallest) value; ties go to the earliest index.
std::size_t argmax_earliest(std::span<const double> values);
std::size_t argmin_earliest(std::span<const double> values);

struct DayExtrema {
	Date date;
	int t_max_real = 0;
	int t_max_pred = 0;
	int dt_max = 0; ///< t_max_real - t_max_pred
	int t_min_real = 0;
	int t_min_pred = 0;
	int dt_min = 0;
};

struct ExtremaTimingReport {
	std::vector<DayExtrema> days;
	std::size_t dropped_days = 0; ///< calendar days without all 24 hours
	double max_exact_pct = 0.0;
	double max_within1_pct = 0.0;
	double min_exact_pct = 0.0;
	double min_within1_pct = 0.0;

	std::string to_csv() const;
};

/// Compares daily peak and trough hours over midnight-to-midnight days.
ExtremaTimingReport extrema_timing(const ResidualSeries &series);

/// Tukey boxplot statistics with linearly interpolated quartiles.
struct BoxStats {
	std::size_t n = 0;
	double q1 = 0.0;
	double median = 0.0;
	double q3 = 0.0;
	double lower_whisker = 0.0; ///< smallest value >= q1 - 1.5 IQR
	double upper_whisker = 0.0; ///< largest value <= q3 + 1.5 IQR
	std::vector<double> outliers;
};

BoxStats box_stats(std::vector<double> values);

enum class GroupKey { weekday, hour };

struct GroupRow {
	int key = 0;
	bool holiday = false;
	BoxStats stats;
	double mean_demand = 0.0;
};

struct GroupedErrorSummary {
	GroupKey key = GroupKey::weekday;
	std::vector<GroupRow> rows; ///< every key value x {non-holiday, holiday}; empty groups have n = 0

	std::string to_csv() const;
};

GroupedErrorSummary group_errors(const ResidualSeries &series, GroupKey key);

/// deviation [MW] x duration [h] x price [USD/MWh]. Throws UsageError on negative input.
double cost_of_error(double deviation_mw, double duration_h, double price_per_mwh);

struct Histogram {
	double origin = 0.0; ///< left edge of the first bin
	double bin_width = 1.0;
	std::vector<std::size_t> counts;
	std::vector<double> density; ///< integrates to 1
	double mean = 0.0;
	double sd = 0.0; ///< sample standard deviation (0 for one value)

	std::string to_csv() const;
};

/// Bins are aligned to multiples of `bin_width`. Throws DataError when empty.
Histogram residual_histogram(std::span<const double> residuals, double bin_width);

std::vector<double> errors_of(const ResidualSeries &series);

} // namespace loadcast::eval
