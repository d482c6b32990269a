#pragma once

#include "loadcast/error.hpp"
#include "loadcast/hourly_table.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace loadcast::preprocess {

using OptionalSeries = std::vector<std::optional<double>>;

/// Missing cells of a table column as an optional series.
OptionalSeries optional_series(const Column &column);

struct GapSpan {
	std::size_t first = 0; ///< index of the first missing hour
	std::size_t length = 0;
};

struct ImputeResult {
	std::vector<double> values;       ///< NaN only inside unresolved (> 24 h) gaps
	std::size_t short_filled = 0;     ///< hours filled in 1-4 h gaps
	std::size_t long_filled = 0;      ///< hours filled in 5-24 h gaps
	std::vector<GapSpan> unresolved; ///< gaps longer than 24 h, left as NaN
};

/// A gap that the imputation rules cannot fill because a neighbour is absent.
class UnresolvedGapError : public DataError {
public:
	UnresolvedGapError(const std::string &message, std::vector<HourStamp> hours)
	    : DataError(message), hours_(std::move(hours)) {}
	const std::vector<HourStamp> &hours() const { return hours_; }

private:
	std::vector<HourStamp> hours_;
};

/// 1-4 h gaps: linear interpolation between the bounding observations.
/// 5-24 h gaps: mean of the same hour on the previous and following day.
/// Longer gaps are reported and left unfilled. `origin` only labels errors.
ImputeResult impute_gaps(const OptionalSeries &series, HourStamp origin = {});

enum class BoundsMode {
	global, ///< one mean and sd over the full series
	daily,  ///< mean and sd per 24-hour block
};

struct OutlierBounds {
	double mean = 0.0;
	double sd = 0.0;
	double lower = 0.0; ///< mean - 3 sd of the full series
	double upper = 0.0; ///< mean + 3 sd of the full series
	std::vector<std::uint8_t> mask;
	std::size_t flagged = 0;
};

/// Three-sigma flagging. In daily mode `mask` uses per-day bounds while the
/// reported lower/upper stay global.
OutlierBounds detect_outliers(std::span<const double> series, BoundsMode mode = BoundsMode::global);

/// Restricts a mask to values below `lower` (demand policy: lift blackouts, keep records).
std::vector<std::uint8_t> below_only(std::span<const double> series, std::span<const std::uint8_t> mask,
                                     double lower);

enum class CorrectionPolicy { retain, interpolate };

/// `interpolate` blanks flagged hours and refills them with the impute_gaps rules.
std::vector<double> correct_outliers(std::span<const double> series, std::span<const std::uint8_t> mask,
                                     CorrectionPolicy policy, HourStamp origin = {});

struct WindComponents {
	double u = 0.0; ///< zonal, km/h, positive eastward
	double v = 0.0; ///< meridional, km/h, positive northward
};

/// Meteorological convention: `wd` is where the wind blows from.
WindComponents decompose_wind(double wd_degrees, double ws);

/// Inverse of decompose_wind, in [0, 360).
double wind_direction(WindComponents wind);

struct Description {
	std::size_t n = 0;
	double mean = 0.0;
	double sd = 0.0; ///< population denominator
	double median = 0.0;
	double q1 = 0.0;
	double q3 = 0.0;
	double iqr = 0.0;
	double skewness = 0.0; ///< population estimator; 0 when sd == 0
	double kurtosis = 0.0; ///< excess, population estimator; 0 when sd == 0
	double min = 0.0;
	double max = 0.0;
	bool shape_defined = true; ///< false for constant series
};

/// Linear-interpolation quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

/// Throws DataError on an empty series.
Description describe(std::span<const double> series);

/// Summary statistics and cleaning counts for one variable.
struct CleaningReportRow {
	std::string variable;
	Description stats;
	double lower = 0.0;
	double upper = 0.0;
	std::size_t outliers = 0;
	std::size_t corrected = 0;
	std::size_t missing = 0;
	std::size_t imputed_short = 0;
	std::size_t imputed_long = 0;
};

struct CleaningReport {
	std::vector<CleaningReportRow> rows;

	const CleaningReportRow &row(std::string_view variable) const;
	void write_csv(const std::filesystem::path &path) const;
	std::string to_csv() const;
};

struct CleaningOptions {
	BoundsMode bounds = BoundsMode::global;
};

struct CleanResult {
	HourlyTable table; ///< dense; wd/ws replaced by u_wind/v_wind
	CleaningReport report;
};

/// Full cleaning pass over a merged table: imputation, three-sigma flagging,
/// WS correction, lower-demand correction, wind decomposition.
CleanResult clean_table(const HourlyTable &raw, const CleaningOptions &options = {});

} // namespace loadcast::preprocess
