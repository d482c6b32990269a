#include "loadcast/preprocess.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>
#include <numeric>

namespace loadcast::preprocess {

namespace {

constexpr std::size_t kShortGapMax = 4;
constexpr std::size_t kLongGapMax = 24;
constexpr std::size_t kDay = 24;

std::vector<GapSpan> find_gaps(const std::vector<std::uint8_t> &missing) {
	std::vector<GapSpan> gaps;
	std::size_t i = 0;
	while (i < missing.size()) {
		if (missing[i] == 0) {
			++i;
			continue;
		}
		std::size_t j = i;
		while (j < missing.size() && missing[j] != 0) {
			++j;
		}
		gaps.push_back(GapSpan{i, j - i});
		i = j;
	}
	return gaps;
}

void require_complete(std::span<const double> series, const char *what) {
	for (std::size_t i = 0; i < series.size(); ++i) {
		if (!std::isfinite(series[i])) {
			throw DataError(fmt::format("{}: value at index {} is missing or non-finite", what, i));
		}
	}
}

struct Moments {
	double mean = 0.0;
	double sd = 0.0;
};

Moments moments(std::span<const double> values) {
	Moments m;
	if (values.empty()) {
		return m;
	}
	const double n = static_cast<double>(values.size());
	m.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
	double ss = 0.0;
	for (const double v : values) {
		ss += (v - m.mean) * (v - m.mean);
	}
	m.sd = std::sqrt(ss / n);
	return m;
}

} // namespace

OptionalSeries optional_series(const Column &column) {
	OptionalSeries out(column.values.size());
	for (std::size_t i = 0; i < out.size(); ++i) {
		if (column.missing[i] == 0 && std::isfinite(column.values[i])) {
			out[i] = column.values[i];
		}
	}
	return out;
}

ImputeResult impute_gaps(const OptionalSeries &series, HourStamp origin) {
	const std::size_t n = series.size();
	ImputeResult result;
	result.values.assign(n, std::numeric_limits<double>::quiet_NaN());
	std::vector<std::uint8_t> missing(n, 0);
	for (std::size_t i = 0; i < n; ++i) {
		if (series[i]) {
			result.values[i] = *series[i];
		} else {
			missing[i] = 1;
		}
	}

	const auto gaps = find_gaps(missing);
	std::vector<HourStamp> unfillable;
	const auto stamp = [&](std::size_t i) { return origin + static_cast<std::int64_t>(i); };

	for (const auto &gap : gaps) {
		if (gap.length > kShortGapMax) {
			continue;
		}
		const bool has_before = gap.first > 0;
		const bool has_after = gap.first + gap.length < n;
		if (!has_before || !has_after) {
			for (std::size_t k = 0; k < gap.length; ++k) {
				unfillable.push_back(stamp(gap.first + k));
			}
			continue;
		}
		const double before = result.values[gap.first - 1];
		const double after = result.values[gap.first + gap.length];
		const double steps = static_cast<double>(gap.length + 1);
		for (std::size_t k = 0; k < gap.length; ++k) {
			const double frac = static_cast<double>(k + 1) / steps;
			result.values[gap.first + k] = before + frac * (after - before);
			missing[gap.first + k] = 0;
		}
		result.short_filled += gap.length;
	}

	for (const auto &gap : gaps) {
		if (gap.length <= kShortGapMax) {
			continue;
		}
		if (gap.length > kLongGapMax) {
			result.unresolved.push_back(gap);
			continue;
		}
		for (std::size_t k = 0; k < gap.length; ++k) {
			const std::size_t i = gap.first + k;
			const bool ok = i >= kDay && i + kDay < n && missing[i - kDay] == 0 && missing[i + kDay] == 0;
			if (!ok) {
				unfillable.push_back(stamp(i));
				continue;
			}
			result.values[i] = 0.5 * (result.values[i - kDay] + result.values[i + kDay]);
		}
		result.long_filled += gap.length;
	}

	if (!unfillable.empty()) {
		std::vector<std::string> shown;
		for (std::size_t k = 0; k < std::min<std::size_t>(unfillable.size(), 12); ++k) {
			shown.push_back(format_timestamp(unfillable[k]));
		}
		throw UnresolvedGapError(fmt::format("{} missing hour(s) lack the neighbours needed for imputation: {}{}",
		                                     unfillable.size(), fmt::join(shown, ", "),
		                                     unfillable.size() > shown.size() ? ", ..." : ""),
		                         std::move(unfillable));
	}
	return result;
}

OutlierBounds detect_outliers(std::span<const double> series, BoundsMode mode) {
	require_complete(series, "outlier detection");
	OutlierBounds out;
	const auto m = moments(series);
	out.mean = m.mean;
	out.sd = m.sd;
	out.lower = m.mean - 3.0 * m.sd;
	out.upper = m.mean + 3.0 * m.sd;
	out.mask.assign(series.size(), 0);

	if (mode == BoundsMode::global) {
		for (std::size_t i = 0; i < series.size(); ++i) {
			if (series[i] < out.lower || series[i] > out.upper) {
				out.mask[i] = 1;
			}
		}
	} else {
		for (std::size_t start = 0; start < series.size(); start += kDay) {
			const auto block = series.subspan(start, std::min(kDay, series.size() - start));
			const auto day = moments(block);
			const double lo = day.mean - 3.0 * day.sd;
			const double hi = day.mean + 3.0 * day.sd;
			for (std::size_t k = 0; k < block.size(); ++k) {
				if (block[k] < lo || block[k] > hi) {
					out.mask[start + k] = 1;
				}
			}
		}
	}
	out.flagged = static_cast<std::size_t>(std::count(out.mask.begin(), out.mask.end(), std::uint8_t{1}));
	return out;
}

std::vector<std::uint8_t> below_only(std::span<const double> series, std::span<const std::uint8_t> mask,
                                     double lower) {
	std::vector<std::uint8_t> out(mask.size(), 0);
	for (std::size_t i = 0; i < mask.size(); ++i) {
		out[i] = (mask[i] != 0 && series[i] < lower) ? 1 : 0;
	}
	return out;
}

std::vector<double> correct_outliers(std::span<const double> series, std::span<const std::uint8_t> mask,
                                     CorrectionPolicy policy, HourStamp origin) {
	if (mask.size() != series.size()) {
		throw Error("outlier mask is not aligned with the series");
	}
	std::vector<double> values(series.begin(), series.end());
	if (policy == CorrectionPolicy::retain) {
		return values;
	}
	OptionalSeries blanked(series.size());
	for (std::size_t i = 0; i < series.size(); ++i) {
		if (mask[i] == 0) {
			blanked[i] = series[i];
		}
	}
	auto imputed = impute_gaps(blanked, origin);
	if (!imputed.unresolved.empty()) {
		throw UnresolvedGapError(
		    fmt::format("outlier run of {} h at index {} is too long to interpolate",
		                imputed.unresolved.front().length, imputed.unresolved.front().first),
		    {origin + static_cast<std::int64_t>(imputed.unresolved.front().first)});
	}
	return std::move(imputed.values);
}

WindComponents decompose_wind(double wd_degrees, double ws) {
	const double theta = (wd_degrees >= 360.0 ? wd_degrees - 360.0 : wd_degrees) * std::numbers::pi / 180.0;
	return WindComponents{-ws * std::sin(theta), -ws * std::cos(theta)};
}

double wind_direction(WindComponents wind) {
	double deg = std::atan2(-wind.u, -wind.v) * 180.0 / std::numbers::pi;
	if (deg < 0.0) {
		deg += 360.0;
	}
	if (deg >= 360.0) {
		deg -= 360.0;
	}
	return deg;
}

double quantile_sorted(std::span<const double> sorted, double q) {
	if (sorted.empty()) {
		throw DataError("quantile of an empty sample");
	}
	const double pos = q * static_cast<double>(sorted.size() - 1);
	const auto lo = static_cast<std::size_t>(std::floor(pos));
	const auto hi = std::min(lo + 1, sorted.size() - 1);
	const double frac = pos - static_cast<double>(lo);
	return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Description describe(std::span<const double> series) {
	if (series.empty()) {
		throw DataError("cannot describe an empty series");
	}
	require_complete(series, "describe");
	Description d;
	d.n = series.size();
	const double n = static_cast<double>(d.n);
	d.mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
	double m2 = 0.0;
	double m3 = 0.0;
	double m4 = 0.0;
	for (const double v : series) {
		const double c = v - d.mean;
		m2 += c * c;
		m3 += c * c * c;
		m4 += c * c * c * c;
	}
	m2 /= n;
	m3 /= n;
	m4 /= n;
	d.sd = std::sqrt(m2);
	if (m2 > 0.0) {
		d.skewness = m3 / std::pow(m2, 1.5);
		d.kurtosis = m4 / (m2 * m2) - 3.0;
	} else {
		d.shape_defined = false;
	}
	std::vector<double> sorted(series.begin(), series.end());
	std::sort(sorted.begin(), sorted.end());
	d.min = sorted.front();
	d.max = sorted.back();
	d.median = quantile_sorted(sorted, 0.5);
	d.q1 = quantile_sorted(sorted, 0.25);
	d.q3 = quantile_sorted(sorted, 0.75);
	d.iqr = d.q3 - d.q1;
	return d;
}

const CleaningReportRow &CleaningReport::row(std::string_view variable) const {
	for (const auto &r : rows) {
		if (r.variable == variable) {
			return r;
		}
	}
	throw Error(fmt::format("cleaning report has no row for '{}'", variable));
}

std::string CleaningReport::to_csv() const {
	csv::Writer out({"variable", "mean", "sd", "median", "iqr", "skewness", "kurtosis", "lb", "ub", "outliers",
	                 "corrected", "missing", "imputed_short", "imputed_long"});
	for (const auto &r : rows) {
		out.cell(r.variable)
		    .cell(r.stats.mean)
		    .cell(r.stats.sd)
		    .cell(r.stats.median)
		    .cell(r.stats.iqr)
		    .cell(r.stats.skewness)
		    .cell(r.stats.kurtosis)
		    .cell(r.lower)
		    .cell(r.upper)
		    .cell(r.outliers)
		    .cell(r.corrected)
		    .cell(r.missing)
		    .cell(r.imputed_short)
		    .cell(r.imputed_long);
		out.end_row();
	}
	return out.str();
}

void CleaningReport::write_csv(const std::filesystem::path &path) const {
	io::write_text(path, to_csv());
}

CleanResult clean_table(const HourlyTable &raw, const CleaningOptions &options) {
	const auto origin = raw.start();
	CleanResult result{HourlyTable(origin, raw.rows()), {}};

	struct Stage {
		std::vector<double> values;
		CleaningReportRow row;
		std::vector<std::uint8_t> mask;
	};
	const auto stage = [&](std::string_view name) {
		const auto &column = raw.column(name);
		auto imputed = impute_gaps(optional_series(column), origin);
		if (!imputed.unresolved.empty()) {
			const auto &gap = imputed.unresolved.front();
			throw UnresolvedGapError(fmt::format("{}: gap of {} h starting {} exceeds 24 h", name, gap.length,
			                                     format_timestamp(origin + static_cast<std::int64_t>(gap.first))),
			                         {origin + static_cast<std::int64_t>(gap.first)});
		}
		Stage s;
		s.row.variable = std::string(name);
		s.row.missing = column.missing_count();
		s.row.imputed_short = imputed.short_filled;
		s.row.imputed_long = imputed.long_filled;
		s.values = std::move(imputed.values);
		s.row.stats = describe(s.values);
		auto bounds = detect_outliers(s.values, options.bounds);
		s.row.lower = bounds.lower;
		s.row.upper = bounds.upper;
		s.row.outliers = bounds.flagged;
		s.mask = std::move(bounds.mask);
		return s;
	};
	const auto emit = [&](std::string_view name, std::string_view unit, std::vector<double> values) {
		auto &c = result.table.add_column(name, unit);
		c.values = std::move(values);
		c.missing.assign(c.values.size(), 0);
	};

	auto demand = stage(col::demand);
	auto temp = stage(col::temp);
	auto hum = stage(col::hum);
	auto pnm = stage(col::pnm);
	auto wd = stage(col::wd);
	auto ws = stage(col::ws);
	auto irr1 = stage(col::irr1);
	auto irr2 = stage(col::irr2);
	auto irr3 = stage(col::irr3);
	auto pre = stage(col::pre);

	const auto lower_demand = below_only(demand.values, demand.mask, demand.row.lower);
	demand.row.corrected =
	    static_cast<std::size_t>(std::count(lower_demand.begin(), lower_demand.end(), std::uint8_t{1}));
	auto demand_clean = correct_outliers(demand.values, lower_demand, CorrectionPolicy::interpolate, origin);

	ws.row.corrected = ws.row.outliers;
	const auto ws_clean = correct_outliers(ws.values, ws.mask, CorrectionPolicy::interpolate, origin);

	// u/v come from observed directions only; interpolating degrees across 0/360 is meaningless.
	const auto &wd_raw = raw.column(col::wd);
	const auto &ws_raw = raw.column(col::ws);
	OptionalSeries u(raw.rows());
	OptionalSeries v(raw.rows());
	for (std::size_t i = 0; i < raw.rows(); ++i) {
		if (wd_raw.missing[i] == 0 && ws_raw.missing[i] == 0) {
			const auto w = decompose_wind(wd_raw.values[i], ws_clean[i]);
			u[i] = w.u;
			v[i] = w.v;
		}
	}
	auto u_filled = impute_gaps(u, origin);
	auto v_filled = impute_gaps(v, origin);

	emit(col::demand, "MW", std::move(demand_clean));
	emit(col::temp, "degC", std::move(temp.values));
	emit(col::hum, "%", std::move(hum.values));
	emit(col::pnm, "hPa", std::move(pnm.values));
	emit(col::u_wind, "km/h", std::move(u_filled.values));
	emit(col::v_wind, "km/h", std::move(v_filled.values));
	emit(col::irr1, "MJ/h", std::move(irr1.values));
	emit(col::irr2, "MJ/h", std::move(irr2.values));
	emit(col::irr3, "MJ/h", std::move(irr3.values));
	emit(col::pre, "mm/h", std::move(pre.values));
	for (const auto name : {col::holiday, col::population}) {
		const auto &src = raw.column(name);
		if (src.missing_count() != 0) {
			throw DataError(fmt::format("column '{}' has missing hours", name));
		}
		emit(name, src.unit, src.values);
	}

	for (auto *s : {&temp, &hum, &pnm, &wd, &ws, &irr1, &irr2, &irr3, &pre, &demand}) {
		result.report.rows.push_back(s->row);
	}
	return result;
}

} // namespace loadcast::preprocess
