#include "loadcast/features.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <json.hpp>
#include <numbers>

namespace loadcast::features {

namespace {

constexpr std::string_view kDatasetMagic = "WDST0001";
constexpr std::size_t kTrimmedTrailingHours = 24;

// Table column feeding each weather/statistical feature; empty for derived ones.
struct FeatureSource {
	std::string_view name;
	std::string_view column;
	bool in_table2;
};

constexpr FeatureSource kFeatures[] = {
    {"temp", col::temp, true},
    {"hum", col::hum, true},
    {"pnm", col::pnm, true},
    {"u_wind", col::u_wind, true},
    {"v_wind", col::v_wind, true},
    {"irr1", col::irr1, false},
    {"irr2", col::irr2, false},
    {"irr3", col::irr3, false},
    {"pre", col::pre, false},
    {"population", col::population, true},
    {"workday", "", true},
    {"day_sin", "", true},
    {"day_cos", "", true},
    {"week_sin", "", true},
    {"week_cos", "", true},
    {"year_sin", "", true},
    {"year_cos", "", true},
    {"demand_lag", col::demand, true},
};

double phase(double t, double period) {
	return 2.0 * std::numbers::pi * t / period;
}

} // namespace

TimeEncoding encode_time(double t) {
	TimeEncoding e;
	e.day_sin = std::sin(phase(t, kDayPeriod));
	e.day_cos = std::cos(phase(t, kDayPeriod));
	e.week_sin = std::sin(phase(t, kWeekPeriod));
	e.week_cos = std::cos(phase(t, kWeekPeriod));
	e.year_sin = std::sin(phase(t, kYearPeriod));
	e.year_cos = std::cos(phase(t, kYearPeriod));
	return e;
}

bool is_workday(int weekday, bool holiday) {
	return weekday <= 4 && !holiday;
}

int workday_flag(Date date, const ingest::CalendarTable &calendar) {
	return is_workday(weekday_index(date), calendar.is_holiday(date)) ? 1 : 0;
}

FeatureSet parse_feature_set(std::string_view text) {
	if (text == "full") {
		return FeatureSet::full;
	}
	if (text == "paper-table2") {
		return FeatureSet::no_satellite;
	}
	throw UsageError(fmt::format("unknown feature set '{}' (expected full or paper-table2)", text));
}

std::string_view to_string(FeatureSet set) {
	return set == FeatureSet::full ? "full" : "paper-table2";
}

std::vector<std::string> feature_names(FeatureSet set) {
	std::vector<std::string> names;
	for (const auto &f : kFeatures) {
		if (set == FeatureSet::full || f.in_table2) {
			names.emplace_back(f.name);
		}
	}
	return names;
}

FeatureFrame build_frame(const HourlyTable &clean, FeatureSet set) {
	FeatureFrame frame;
	frame.start = clean.start();
	frame.rows = clean.rows();
	frame.feature_set = set;
	frame.names = feature_names(set);
	const std::size_t width = frame.names.size();
	frame.values.assign(frame.rows * width, 0.0);

	const auto checked = [&](std::string_view name) -> const Column & {
		const auto &c = clean.column(name);
		if (c.missing_count() != 0) {
			throw DataError(fmt::format("column '{}' still has missing hours; run preprocess first", name));
		}
		return c;
	};
	frame.demand = checked(col::demand).values;
	const auto &holiday = checked(col::holiday).values;
	frame.holiday.resize(frame.rows);
	for (std::size_t r = 0; r < frame.rows; ++r) {
		frame.holiday[r] = holiday[r] != 0.0 ? 1 : 0;
	}

	std::size_t c = 0;
	for (const auto &f : kFeatures) {
		if (set != FeatureSet::full && !f.in_table2) {
			continue;
		}
		if (!f.column.empty()) {
			const auto &src = checked(f.column);
			for (std::size_t r = 0; r < frame.rows; ++r) {
				frame.values[r * width + c] = src.values[r];
			}
		} else if (f.name == "workday") {
			for (std::size_t r = 0; r < frame.rows; ++r) {
				const auto stamp = clean.timestamp(r);
				frame.values[r * width + c] = is_workday(weekday_index(stamp), frame.holiday[r] != 0) ? 1.0 : 0.0;
			}
		} else {
			for (std::size_t r = 0; r < frame.rows; ++r) {
				const auto e = encode_time(static_cast<double>(r));
				const double v = f.name == "day_sin"    ? e.day_sin
				                 : f.name == "day_cos"  ? e.day_cos
				                 : f.name == "week_sin" ? e.week_sin
				                 : f.name == "week_cos" ? e.week_cos
				                 : f.name == "year_sin" ? e.year_sin
				                                        : e.year_cos;
				frame.values[r * width + c] = v;
			}
		}
		++c;
	}
	return frame;
}

double NormalizationSpec::apply(std::size_t feature, double value) const {
	const double range = max[feature] - min[feature];
	return range > 0.0 ? (value - min[feature]) / range : 0.0;
}

double NormalizationSpec::invert(std::size_t feature, double scaled) const {
	return min[feature] + scaled * (max[feature] - min[feature]);
}

double NormalizationSpec::apply_target(double mw) const {
	const double range = target_max - target_min;
	return range > 0.0 ? (mw - target_min) / range : 0.0;
}

double NormalizationSpec::invert_target(double scaled) const {
	return target_min + scaled * (target_max - target_min);
}

NormalizationSpec fit_normalization(const FeatureFrame &frame, std::size_t row_begin, std::size_t row_end) {
	if (row_begin >= row_end || row_end > frame.rows) {
		throw DataError(fmt::format("normalization fit range [{}, {}) is empty or exceeds {} rows", row_begin,
		                            row_end, frame.rows));
	}
	NormalizationSpec spec;
	spec.names = frame.names;
	const std::size_t width = frame.width();
	spec.min.assign(width, 0.0);
	spec.max.assign(width, 0.0);
	for (std::size_t c = 0; c < width; ++c) {
		double lo = frame.values[row_begin * width + c];
		double hi = lo;
		for (std::size_t r = row_begin; r < row_end; ++r) {
			lo = std::min(lo, frame.values[r * width + c]);
			hi = std::max(hi, frame.values[r * width + c]);
		}
		spec.min[c] = lo;
		spec.max[c] = hi;
		if (!(hi > lo)) {
			spec.constant_features.push_back(frame.names[c]);
		}
	}
	const auto [lo, hi] = std::minmax_element(frame.demand.begin() + static_cast<std::ptrdiff_t>(row_begin),
	                                          frame.demand.begin() + static_cast<std::ptrdiff_t>(row_end));
	spec.target_min = *lo;
	spec.target_max = *hi;
	return spec;
}

std::vector<double> apply_normalization(const NormalizationSpec &spec, const FeatureFrame &frame) {
	const std::size_t width = frame.width();
	if (spec.min.size() != width) {
		throw DataError("normalization spec does not match the frame width");
	}
	std::vector<double> out(frame.values.size());
	for (std::size_t r = 0; r < frame.rows; ++r) {
		for (std::size_t c = 0; c < width; ++c) {
			out[r * width + c] = spec.apply(c, frame.values[r * width + c]);
		}
	}
	return out;
}

Accounting parse_accounting(std::string_view text) {
	if (text == "default" || text == "standard") {
		return Accounting::standard;
	}
	if (text == "paper") {
		return Accounting::trimmed;
	}
	throw UsageError(fmt::format("unknown accounting mode '{}' (expected default or paper)", text));
}

std::string_view to_string(Accounting accounting) {
	return accounting == Accounting::standard ? "default" : "paper";
}

std::string_view to_string(Split split) {
	switch (split) {
	case Split::train:
		return "train";
	case Split::val:
		return "val";
	case Split::test:
		return "test";
	}
	return "?";
}

SplitPlan plan_split(std::size_t rows, std::size_t window, Accounting accounting) {
	if (window == 0) {
		throw UsageError("window length must be positive");
	}
	if (rows < window + 1) {
		throw DataError(fmt::format("{} rows cannot hold one {}-hour window plus its target", rows, window));
	}
	SplitPlan plan;
	plan.window = window;
	plan.samples = rows - window;
	if (accounting == Accounting::trimmed) {
		if (plan.samples <= kTrimmedTrailingHours) {
			throw DataError(fmt::format("{} rows are too few for the trimmed accounting mode", rows));
		}
		plan.samples -= kTrimmedTrailingHours;
	}
	plan.val = plan.samples / 10;
	plan.test = plan.samples / 10;
	plan.train = plan.samples - plan.val - plan.test;
	return plan;
}

std::span<const double> WindowedDataset::inputs(std::size_t k) const {
	const std::size_t width = data_->width();
	return {data_->inputs.data() + (first_ + k) * width, data_->plan.window * width};
}

std::span<const double> WindowedDataset::last_raw_row(std::size_t k) const {
	const std::size_t width = data_->width();
	return {data_->raw.data() + (first_ + k + data_->plan.window - 1) * width, width};
}

WindowedDataset Dataset::subset(Split split) const {
	const auto &plan = data_->plan;
	switch (split) {
	case Split::train:
		return WindowedDataset(data_, 0, plan.train, split);
	case Split::val:
		return WindowedDataset(data_, plan.train, plan.val, split);
	case Split::test:
		return WindowedDataset(data_, plan.train + plan.val, plan.test, split);
	}
	throw Error("unknown split");
}

WindowedDataset Dataset::train() const {
	return subset(Split::train);
}
WindowedDataset Dataset::val() const {
	return subset(Split::val);
}
WindowedDataset Dataset::test() const {
	return subset(Split::test);
}

Dataset split_and_window(const FeatureFrame &frame, std::size_t window, Accounting accounting) {
	auto data = std::make_shared<DatasetStorage>();
	data->plan = plan_split(frame.rows, window, accounting);
	data->start = frame.start;
	data->rows = frame.rows;
	data->feature_set = frame.feature_set;
	data->accounting = accounting;
	data->names = frame.names;
	// Training windows and targets occupy rows [0, train + window).
	data->normalization = fit_normalization(frame, 0, data->plan.train + window);
	data->inputs = apply_normalization(data->normalization, frame);
	data->raw = frame.values;
	data->demand = frame.demand;
	data->targets.resize(frame.rows);
	for (std::size_t r = 0; r < frame.rows; ++r) {
		data->targets[r] = data->normalization.apply_target(frame.demand[r]);
	}
	data->holiday = frame.holiday;
	return Dataset(std::move(data));
}

void save_dataset(const Dataset &dataset, const std::filesystem::path &path) {
	const auto &d = dataset.storage();
	io::ByteWriter out;
	out.magic(kDatasetMagic);
	out.i64(d.start.hours);
	out.u64(d.rows);
	out.u64(d.width());
	out.u8(static_cast<std::uint8_t>(d.feature_set));
	out.u8(static_cast<std::uint8_t>(d.accounting));
	out.u64(d.plan.window);
	out.u64(d.plan.samples);
	out.u64(d.plan.train);
	out.u64(d.plan.val);
	out.u64(d.plan.test);
	for (const auto &name : d.names) {
		out.string(name);
	}
	out.f64s(d.normalization.min);
	out.f64s(d.normalization.max);
	out.f64(d.normalization.target_min);
	out.f64(d.normalization.target_max);
	out.f64s(d.raw);
	out.f64s(d.demand);
	out.bytes(d.holiday);
	out.save(path);

	nlohmann::ordered_json manifest;
	manifest["format"] = kDatasetMagic;
	manifest["rows"] = d.rows;
	manifest["first_hour"] = format_timestamp(d.start);
	manifest["feature_set"] = to_string(d.feature_set);
	manifest["accounting"] = to_string(d.accounting);
	manifest["window"] = d.plan.window;
	manifest["features"] = d.names;
	auto &norm = manifest["normalization"];
	for (std::size_t c = 0; c < d.width(); ++c) {
		norm["features"].push_back({{"name", d.names[c]}, {"min", d.normalization.min[c]}, {"max", d.normalization.max[c]}});
	}
	norm["target"] = {{"name", "demand"}, {"min", d.normalization.target_min}, {"max", d.normalization.target_max}};
	norm["constant_features"] = d.normalization.constant_features;
	const auto describe_split = [&](const WindowedDataset &view) {
		nlohmann::ordered_json s;
		s["samples"] = view.size();
		if (!view.empty()) {
			s["first_target"] = format_timestamp(view.target_time(0));
			s["last_target"] = format_timestamp(view.target_time(view.size() - 1));
		}
		return s;
	};
	manifest["splits"]["train"] = describe_split(dataset.train());
	manifest["splits"]["val"] = describe_split(dataset.val());
	manifest["splits"]["test"] = describe_split(dataset.test());
	auto manifest_path = path;
	manifest_path += ".json";
	io::write_text(manifest_path, manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path &path) {
	auto in = io::ByteReader::open(path);
	in.expect_magic(kDatasetMagic);
	auto data = std::make_shared<DatasetStorage>();
	data->start = HourStamp{in.i64()};
	data->rows = in.u64();
	const auto width = in.u64();
	if (width == 0 || width > 1024 || data->rows > (std::uint64_t{1} << 32)) {
		throw FormatError(fmt::format("'{}' declares an implausible shape", path.string()));
	}
	const auto set = in.u8();
	const auto accounting = in.u8();
	if (set > 1 || accounting > 1) {
		throw FormatError(fmt::format("'{}' has an unknown feature set or accounting code", path.string()));
	}
	data->feature_set = static_cast<FeatureSet>(set);
	data->accounting = static_cast<Accounting>(accounting);
	data->plan.window = in.u64();
	data->plan.samples = in.u64();
	data->plan.train = in.u64();
	data->plan.val = in.u64();
	data->plan.test = in.u64();
	for (std::uint64_t c = 0; c < width; ++c) {
		data->names.push_back(in.string());
	}
	auto &norm = data->normalization;
	norm.names = data->names;
	norm.min = in.f64s(width);
	norm.max = in.f64s(width);
	norm.target_min = in.f64();
	norm.target_max = in.f64();
	for (std::size_t c = 0; c < width; ++c) {
		if (!(norm.max[c] > norm.min[c])) {
			norm.constant_features.push_back(data->names[c]);
		}
	}
	data->raw = in.f64s(data->rows * width);
	data->demand = in.f64s(data->rows);
	data->holiday = in.bytes(data->rows);
	in.expect_end();
	if (data->plan.train + data->plan.val + data->plan.test != data->plan.samples ||
	    data->plan.samples + data->plan.window > data->rows) {
		throw FormatError(fmt::format("'{}' has an inconsistent split plan", path.string()));
	}

	data->inputs.resize(data->raw.size());
	for (std::size_t r = 0; r < data->rows; ++r) {
		for (std::size_t c = 0; c < width; ++c) {
			data->inputs[r * width + c] = norm.apply(c, data->raw[r * width + c]);
		}
	}
	data->targets.resize(data->rows);
	for (std::size_t r = 0; r < data->rows; ++r) {
		data->targets[r] = norm.apply_target(data->demand[r]);
	}
	return Dataset(std::move(data));
}

} // namespace loadcast::features
