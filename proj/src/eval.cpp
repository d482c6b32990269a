#include "loadcast/eval.hpp"

#include "loadcast/csv.hpp"
#include "loadcast/error.hpp"
#include "loadcast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fmt/format.h>
#include <map>

namespace loadcast::eval {

ResidualSeries make_residuals(std::span<const HourStamp> times, std::span<const double> real,
                              std::span<const double> predicted, std::span<const std::uint8_t> holiday) {
	if (times.size() != real.size() || real.size() != predicted.size() || holiday.size() != real.size()) {
		throw DataError("residual inputs differ in length");
	}
	ResidualSeries out(times.size());
	for (std::size_t k = 0; k < times.size(); ++k) {
		auto &p = out[k];
		p.time = times[k];
		p.real = real[k];
		p.predicted = predicted[k];
		p.error = real[k] - predicted[k];
		p.weekday = weekday_index(times[k]);
		p.hour = hour_of_day(times[k]);
		p.holiday = holiday[k] != 0;
	}
	return out;
}

ResidualSeries make_residuals(const features::WindowedDataset &data, std::span<const double> predicted) {
	if (predicted.size() != data.size()) {
		throw DataError(fmt::format("{} predictions for {} samples", predicted.size(), data.size()));
	}
	std::vector<HourStamp> times(data.size());
	std::vector<double> real(data.size());
	std::vector<std::uint8_t> holiday(data.size());
	for (std::size_t k = 0; k < data.size(); ++k) {
		times[k] = data.target_time(k);
		real[k] = data.target_mw(k);
		holiday[k] = data.target_holiday(k) ? 1 : 0;
	}
	return make_residuals(times, real, predicted, holiday);
}

std::string residuals_csv(const ResidualSeries &series) {
	csv::Writer out({"timestamp", "real", "predicted", "error", "weekday", "hour", "holiday"});
	for (const auto &p : series) {
		out.cell(format_timestamp(p.time));
		out.cell(p.real);
		out.cell(p.predicted);
		out.cell(p.error);
		out.cell(static_cast<std::size_t>(p.weekday));
		out.cell(static_cast<std::size_t>(p.hour));
		out.cell(static_cast<std::size_t>(p.holiday ? 1 : 0));
		out.end_row();
	}
	return out.str();
}

std::size_t argmax_earliest(std::span<const double> values) {
	if (values.empty()) {
		throw DataError("argmax of an empty profile");
	}
	std::size_t best = 0;
	for (std::size_t i = 1; i < values.size(); ++i) {
		if (values[i] > values[best]) {
			best = i;
		}
	}
	return best;
}

std::size_t argmin_earliest(std::span<const double> values) {
	if (values.empty()) {
		throw DataError("argmin of an empty profile");
	}
	std::size_t best = 0;
	for (std::size_t i = 1; i < values.size(); ++i) {
		if (values[i] < values[best]) {
			best = i;
		}
	}
	return best;
}

ExtremaTimingReport extrema_timing(const ResidualSeries &series) {
	struct Day {
		std::array<double, 24> real{};
		std::array<double, 24> pred{};
		std::array<bool, 24> seen{};
	};
	std::map<Date, Day> days;
	for (const auto &p : series) {
		auto &d = days[date_of(p.time)];
		const auto h = static_cast<std::size_t>(p.hour);
		d.real[h] = p.real;
		d.pred[h] = p.predicted;
		d.seen[h] = true;
	}
	ExtremaTimingReport report;
	std::size_t max_exact = 0;
	std::size_t max_near = 0;
	std::size_t min_exact = 0;
	std::size_t min_near = 0;
	for (const auto &[date, d] : days) {
		if (!std::all_of(d.seen.begin(), d.seen.end(), [](bool s) { return s; })) {
			++report.dropped_days;
			continue;
		}
		DayExtrema e;
		e.date = date;
		e.t_max_real = static_cast<int>(argmax_earliest(d.real));
		e.t_max_pred = static_cast<int>(argmax_earliest(d.pred));
		e.t_min_real = static_cast<int>(argmin_earliest(d.real));
		e.t_min_pred = static_cast<int>(argmin_earliest(d.pred));
		e.dt_max = e.t_max_real - e.t_max_pred;
		e.dt_min = e.t_min_real - e.t_min_pred;
		max_exact += e.dt_max == 0 ? 1 : 0;
		max_near += std::abs(e.dt_max) <= 1 ? 1 : 0;
		min_exact += e.dt_min == 0 ? 1 : 0;
		min_near += std::abs(e.dt_min) <= 1 ? 1 : 0;
		report.days.push_back(e);
	}
	if (!report.days.empty()) {
		const double n = static_cast<double>(report.days.size());
		report.max_exact_pct = 100.0 * static_cast<double>(max_exact) / n;
		report.max_within1_pct = 100.0 * static_cast<double>(max_near) / n;
		report.min_exact_pct = 100.0 * static_cast<double>(min_exact) / n;
		report.min_within1_pct = 100.0 * static_cast<double>(min_near) / n;
	}
	return report;
}

std::string ExtremaTimingReport::to_csv() const {
	csv::Writer out({"date", "t_max_real", "t_max_pred", "dt_max", "t_min_real", "t_min_pred", "dt_min"});
	for (const auto &d : days) {
		out.cell(format_date(d.date));
		out.cell(static_cast<double>(d.t_max_real));
		out.cell(static_cast<double>(d.t_max_pred));
		out.cell(static_cast<double>(d.dt_max));
		out.cell(static_cast<double>(d.t_min_real));
		out.cell(static_cast<double>(d.t_min_pred));
		out.cell(static_cast<double>(d.dt_min));
		out.end_row();
	}
	return out.str();
}

BoxStats box_stats(std::vector<double> values) {
	BoxStats s;
	s.n = values.size();
	if (values.empty()) {
		return s;
	}
	std::sort(values.begin(), values.end());
	s.q1 = preprocess::quantile_sorted(values, 0.25);
	s.median = preprocess::quantile_sorted(values, 0.5);
	s.q3 = preprocess::quantile_sorted(values, 0.75);
	const double iqr = s.q3 - s.q1;
	const double lo = s.q1 - 1.5 * iqr;
	const double hi = s.q3 + 1.5 * iqr;
	s.lower_whisker = s.q1;
	s.upper_whisker = s.q3;
	for (const double v : values) {
		if (v < lo || v > hi) {
			s.outliers.push_back(v);
			continue;
		}
		s.lower_whisker = std::min(s.lower_whisker, v);
		s.upper_whisker = std::max(s.upper_whisker, v);
	}
	return s;
}

GroupedErrorSummary group_errors(const ResidualSeries &series, GroupKey key) {
	if (series.empty()) {
		throw DataError("no residuals to group");
	}
	const int keys = key == GroupKey::weekday ? 7 : 24;
	std::vector<std::vector<double>> errors(static_cast<std::size_t>(keys * 2));
	std::vector<double> demand(errors.size(), 0.0);
	for (const auto &p : series) {
		const int k = key == GroupKey::weekday ? p.weekday : p.hour;
		const auto slot = static_cast<std::size_t>(k * 2 + (p.holiday ? 1 : 0));
		errors[slot].push_back(p.error);
		demand[slot] += p.real;
	}
	GroupedErrorSummary summary;
	summary.key = key;
	for (int k = 0; k < keys; ++k) {
		for (int h = 0; h < 2; ++h) {
			const auto slot = static_cast<std::size_t>(k * 2 + h);
			GroupRow row;
			row.key = k;
			row.holiday = h == 1;
			const auto n = errors[slot].size();
			row.mean_demand = n > 0 ? demand[slot] / static_cast<double>(n) : 0.0;
			row.stats = box_stats(std::move(errors[slot]));
			summary.rows.push_back(std::move(row));
		}
	}
	return summary;
}

std::string GroupedErrorSummary::to_csv() const {
	csv::Writer out({key == GroupKey::weekday ? "weekday" : "hour", "holiday", "n", "q1", "median", "q3",
	                 "lower_whisker", "upper_whisker", "outliers", "mean_demand"});
	for (const auto &row : rows) {
		out.cell(static_cast<std::size_t>(row.key));
		out.cell(static_cast<std::size_t>(row.holiday ? 1 : 0));
		out.cell(row.stats.n);
		if (row.stats.n == 0) {
			for (int i = 0; i < 5; ++i) {
				out.cell(std::optional<double>{});
			}
			out.cell(std::size_t{0});
			out.cell(std::optional<double>{});
		} else {
			out.cell(row.stats.q1);
			out.cell(row.stats.median);
			out.cell(row.stats.q3);
			out.cell(row.stats.lower_whisker);
			out.cell(row.stats.upper_whisker);
			out.cell(row.stats.outliers.size());
			out.cell(row.mean_demand);
		}
		out.end_row();
	}
	return out.str();
}

double cost_of_error(double deviation_mw, double duration_h, double price_per_mwh) {
	if (deviation_mw < 0.0 || duration_h < 0.0 || price_per_mwh < 0.0) {
		throw UsageError("cost of error needs non-negative deviation, duration and price");
	}
	return deviation_mw * duration_h * price_per_mwh;
}

Histogram residual_histogram(std::span<const double> residuals, double bin_width) {
	if (residuals.empty()) {
		throw DataError("histogram of an empty residual series");
	}
	if (!(bin_width > 0.0)) {
		throw UsageError("histogram bin width must be positive");
	}
	Histogram h;
	h.bin_width = bin_width;
	const auto [lo, hi] = std::minmax_element(residuals.begin(), residuals.end());
	const double first = std::floor(*lo / bin_width);
	const double last = std::floor(*hi / bin_width);
	h.origin = first * bin_width;
	h.counts.assign(static_cast<std::size_t>(last - first) + 1, 0);
	double sum = 0.0;
	for (const double r : residuals) {
		const auto bin = static_cast<std::size_t>(std::floor(r / bin_width) - first);
		++h.counts[std::min(bin, h.counts.size() - 1)];
		sum += r;
	}
	const double n = static_cast<double>(residuals.size());
	h.mean = sum / n;
	double ss = 0.0;
	for (const double r : residuals) {
		ss += (r - h.mean) * (r - h.mean);
	}
	h.sd = residuals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
	h.density.resize(h.counts.size());
	for (std::size_t i = 0; i < h.counts.size(); ++i) {
		h.density[i] = static_cast<double>(h.counts[i]) / (n * bin_width);
	}
	return h;
}

std::string Histogram::to_csv() const {
	csv::Writer out({"bin_left", "bin_right", "count", "density"});
	for (std::size_t i = 0; i < counts.size(); ++i) {
		out.cell(origin + static_cast<double>(i) * bin_width);
		out.cell(origin + static_cast<double>(i + 1) * bin_width);
		out.cell(counts[i]);
		out.cell(density[i]);
		out.end_row();
	}
	return out.str();
}

std::vector<double> errors_of(const ResidualSeries &series) {
	std::vector<double> out;
	out.reserve(series.size());
	for (const auto &p : series) {
		out.push_back(p.error);
	}
	return out;
}

} // namespace loadcast::eval
