#pragma once

#include "loadcast/calendar.hpp"
#include "loadcast/hourly_table.hpp"
#include "loadcast/ingest.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loadcast::features {

inline constexpr double kDayPeriod = 24.0;
inline constexpr double kWeekPeriod = 168.0;
inline constexpr double kYearPeriod = 8766.0; // 365.25 days

struct TimeEncoding {
	double day_sin = 0.0;
	double day_cos = 1.0;
	double week_sin = 0.0;
	double week_cos = 1.0;
	double year_sin = 0.0;
	double year_cos = 1.0;
};

/// Sine/cosine pairs for elapsed hours `t` at daily, weekly and yearly periods.
TimeEncoding encode_time(double t);

/// Monday-Friday and not a holiday.
bool is_workday(int weekday, bool holiday);

/// 1 for workdays, 0 otherwise. Throws DataError outside the calendar.
int workday_flag(Date date, const ingest::CalendarTable &calendar);

enum class FeatureSet {
	full,         ///< 18 inputs
	no_satellite, ///< 14 inputs: full minus irr1-irr3 and pre
};

FeatureSet parse_feature_set(std::string_view text);
std::string_view to_string(FeatureSet set);
std::vector<std::string> feature_names(FeatureSet set);

/// Raw (un-normalized) feature rows, one per hour, in feature_names() order.
struct FeatureFrame {
	HourStamp start;
	std::size_t rows = 0;
	FeatureSet feature_set = FeatureSet::full;
	std::vector<std::string> names;
	std::vector<double> values; ///< row-major, rows x width
	std::vector<double> demand; ///< MW, the forecast target
	std::vector<std::uint8_t> holiday;

	std::size_t width() const { return names.size(); }
	std::span<const double> row(std::size_t r) const { return {values.data() + r * width(), width()}; }
};

/// Builds features from a cleaned table (no missing cells allowed).
FeatureFrame build_frame(const HourlyTable &clean, FeatureSet set);

/// Min-max scaling per feature and for the target.
struct NormalizationSpec {
	std::vector<std::string> names;
	std::vector<double> min;
	std::vector<double> max;
	double target_min = 0.0;
	double target_max = 1.0;
	std::vector<std::string> constant_features; ///< mapped to 0

	double apply(std::size_t feature, double value) const;
	double invert(std::size_t feature, double scaled) const;
	double apply_target(double mw) const;
	double invert_target(double scaled) const;
};

/// Fits on rows [row_begin, row_end) of the frame only.
NormalizationSpec fit_normalization(const FeatureFrame &frame, std::size_t row_begin, std::size_t row_end);

/// Row-major normalized copy of the frame's values.
std::vector<double> apply_normalization(const NormalizationSpec &spec, const FeatureFrame &frame);

enum class Accounting {
	standard, ///< every hour with a full history is a sample: rows - window
	trimmed,  ///< additionally drops the last 24 hours: rows - window - 24
};

Accounting parse_accounting(std::string_view text);
std::string_view to_string(Accounting accounting);

/// Sample counts per split. Sample k covers rows k..k+window-1; its target is row k+window.
struct SplitPlan {
	std::size_t window = 24;
	std::size_t samples = 0;
	std::size_t train = 0;
	std::size_t val = 0;
	std::size_t test = 0;
};

/// Sequential 80/10/10: floor for validation and test, remainder to train.
SplitPlan plan_split(std::size_t rows, std::size_t window, Accounting accounting);

enum class Split { train, val, test };
std::string_view to_string(Split split);

struct DatasetStorage {
	HourStamp start;
	std::size_t rows = 0;
	FeatureSet feature_set = FeatureSet::full;
	Accounting accounting = Accounting::standard;
	std::vector<std::string> names;
	NormalizationSpec normalization;
	SplitPlan plan;
	std::vector<double> inputs;  ///< normalized, row-major rows x width
	std::vector<double> raw;     ///< un-normalized, row-major rows x width
	std::vector<double> targets; ///< normalized demand per row
	std::vector<double> demand;  ///< MW per row
	std::vector<std::uint8_t> holiday;

	std::size_t width() const { return names.size(); }
};

/// Read-only view over one split; windows are slices of the shared row matrix.
class WindowedDataset {
public:
	WindowedDataset() = default;
	WindowedDataset(std::shared_ptr<const DatasetStorage> data, std::size_t first, std::size_t count, Split split)
	    : data_(std::move(data)), first_(first), count_(count), split_(split) {}

	std::size_t size() const { return count_; }
	bool empty() const { return count_ == 0; }
	std::size_t window() const { return data_->plan.window; }
	std::size_t width() const { return data_->width(); }
	Split split() const { return split_; }

	/// window() x width() values, time-major.
	std::span<const double> inputs(std::size_t k) const;
	double target(std::size_t k) const { return data_->targets[target_row(k)]; }
	double target_mw(std::size_t k) const { return data_->demand[target_row(k)]; }
	HourStamp target_time(std::size_t k) const { return data_->start + static_cast<std::int64_t>(target_row(k)); }
	bool target_holiday(std::size_t k) const { return data_->holiday[target_row(k)] != 0; }
	std::size_t target_row(std::size_t k) const { return first_ + k + data_->plan.window; }
	/// Un-normalized features of the last window hour (the flat lag-1 row).
	std::span<const double> last_raw_row(std::size_t k) const;

	const NormalizationSpec &normalization() const { return data_->normalization; }
	const DatasetStorage &storage() const { return *data_; }

private:
	std::shared_ptr<const DatasetStorage> data_;
	std::size_t first_ = 0;
	std::size_t count_ = 0;
	Split split_ = Split::train;
};

class Dataset {
public:
	Dataset() = default;
	explicit Dataset(std::shared_ptr<const DatasetStorage> data) : data_(std::move(data)) {}

	WindowedDataset train() const;
	WindowedDataset val() const;
	WindowedDataset test() const;
	WindowedDataset subset(Split split) const;

	const DatasetStorage &storage() const { return *data_; }
	std::shared_ptr<const DatasetStorage> shared() const { return data_; }

private:
	std::shared_ptr<const DatasetStorage> data_;
};

/// Splits sequentially, fits normalization on training rows only, and exposes
/// the three window views. Throws DataError for fewer than window + 1 rows.
Dataset split_and_window(const FeatureFrame &frame, std::size_t window = 24,
                         Accounting accounting = Accounting::standard);

/// Magic "WDST0001" binary plus a JSON manifest at `path` + ".json".
void save_dataset(const Dataset &dataset, const std::filesystem::path &path);
Dataset load_dataset(const std::filesystem::path &path);

} // namespace loadcast::features
