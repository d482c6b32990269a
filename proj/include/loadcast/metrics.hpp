#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace loadcast::metrics {

/// Error metrics on the MW scale. A metric whose formula is undefined for the
/// given data (constant series, zero denominators) is left empty.
struct MetricsReport {
	std::size_t n = 0;
	double mse = 0.0;
	double mae = 0.0;
	double rmse = 0.0;
	std::optional<double> r2;
	std::optional<double> mape; ///< percent, zero targets excluded
	std::optional<double> wape; ///< percent
	std::optional<double> mase;
	std::size_t mape_excluded = 0; ///< zero-target hours left out of MAPE
};

/// Throws DataError when lengths differ or fewer than two points are given.
MetricsReport compute_all(std::span<const double> y, std::span<const double> yhat);

/// One results row: model, subset, MSE, MAE, RMSE, R2, MAPE, WAPE, MASE.
struct ResultRow {
	std::string model;
	std::string subset;
	MetricsReport report;
};

std::vector<std::string> results_header();
std::string results_csv(const std::vector<ResultRow> &rows);
void write_results_csv(const std::vector<ResultRow> &rows, const std::filesystem::path &path);

} // namespace loadcast::metrics
