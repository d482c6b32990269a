#pragma once

#include "loadcast/eval.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace loadcast::svg {

struct Series {
	std::string label;
	std::vector<double> x;
	std::vector<double> y;
};

struct ChartOptions {
	std::string title;
	std::string x_label;
	std::string y_label;
	int width = 900;
	int height = 420;
};

/// Self-contained SVG documents.
std::string line_chart(const std::vector<Series> &series, const ChartOptions &options);
std::string scatter_chart(const std::vector<Series> &series, const ChartOptions &options, bool identity_line = false);
std::string histogram_chart(const eval::Histogram &histogram, const ChartOptions &options);
std::string boxplot_chart(const eval::GroupedErrorSummary &summary, const ChartOptions &options);

void save(const std::filesystem::path &path, const std::string &document);

} // namespace loadcast::svg
