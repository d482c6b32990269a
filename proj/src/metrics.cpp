#include "loadcast/metrics.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/csv.hpp"
#include "loadcast/error.hpp"

#include <cmath>
#include <fmt/format.h>

namespace loadcast::metrics {

MetricsReport compute_all(std::span<const double> y, std::span<const double> yhat) {
	if (y.size() != yhat.size()) {
		throw DataError(fmt::format("metric inputs differ in length ({} vs {})", y.size(), yhat.size()));
	}
	if (y.size() < 2) {
		throw DataError("metrics need at least two observations");
	}
	MetricsReport r;
	r.n = y.size();
	const auto n = static_cast<double>(r.n);

	double sq = 0.0;
	double abs = 0.0;
	double sum_y = 0.0;
	double pct = 0.0;
	for (std::size_t t = 0; t < r.n; ++t) {
		const double e = y[t] - yhat[t];
		sq += e * e;
		abs += std::abs(e);
		sum_y += y[t];
		if (y[t] == 0.0) {
			++r.mape_excluded;
		} else {
			pct += std::abs(e / y[t]);
		}
	}
	r.mse = sq / n;
	r.mae = abs / n;
	r.rmse = std::sqrt(r.mse);

	const double mean = sum_y / n;
	double ss_tot = 0.0;
	for (const double v : y) {
		ss_tot += (v - mean) * (v - mean);
	}
	if (ss_tot > 0.0) {
		r.r2 = 1.0 - sq / ss_tot;
	}
	if (r.mape_excluded < r.n) {
		r.mape = 100.0 * pct / static_cast<double>(r.n - r.mape_excluded);
	}
	if (sum_y != 0.0) {
		r.wape = 100.0 * abs / sum_y;
	}
	double naive = 0.0;
	for (std::size_t t = 1; t < r.n; ++t) {
		naive += std::abs(y[t] - y[t - 1]);
	}
	naive /= n - 1.0;
	if (naive > 0.0) {
		r.mase = r.mae / naive;
	}
	return r;
}

std::vector<std::string> results_header() {
	return {"model", "subset", "mse", "mae", "rmse", "r2", "mape", "wape", "mase"};
}

std::string results_csv(const std::vector<ResultRow> &rows) {
	csv::Writer out(results_header());
	for (const auto &row : rows) {
		out.cell(row.model);
		out.cell(row.subset);
		out.cell(row.report.mse);
		out.cell(row.report.mae);
		out.cell(row.report.rmse);
		out.cell(row.report.r2);
		out.cell(row.report.mape);
		out.cell(row.report.wape);
		out.cell(row.report.mase);
		out.end_row();
	}
	return out.str();
}

void write_results_csv(const std::vector<ResultRow> &rows, const std::filesystem::path &path) {
	io::write_text(path, results_csv(rows));
}

} // namespace loadcast::metrics
