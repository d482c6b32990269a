#pragma once

#include "loadcast/features.hpp"
#include "loadcast/random.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace loadcast::baseline {

/// Row-major regression table.
struct FlatData {
	std::vector<std::string> names;
	std::size_t width = 0;
	std::vector<double> x;
	std::vector<double> y;

	std::size_t rows() const { return y.size(); }
	std::span<const double> row(std::size_t r) const { return {x.data() + r * width, width}; }
	std::vector<double> column(std::size_t c) const;
};

/// One flat row per sample: the un-normalized features of the hour before the
/// target (which include that hour's demand), with the target demand in MW.
FlatData flat_rows(const features::WindowedDataset &data);

struct ForestConfig {
	std::size_t trees = 200;
	std::size_t max_depth = 0; ///< 0 = unlimited
	std::size_t min_leaf = 1;
	double feature_fraction = 1.0 / 3.0;
	bool bootstrap = true;
	std::uint64_t seed = 0;
	std::size_t workers = 1;

	std::vector<std::string> violations() const;
};

struct TreeNode {
	int feature = -1; ///< -1 for leaves
	double threshold = 0.0;
	double value = 0.0; ///< mean target of the node's samples
	double impurity_decrease = 0.0;
	std::size_t samples = 0;
	std::uint32_t left = 0;
	std::uint32_t right = 0;

	bool leaf() const { return feature < 0; }
};

/// Goes left when row[feature] <= threshold.
struct RegressionTree {
	std::vector<TreeNode> nodes;

	double predict(std::span<const double> row) const;
	std::size_t depth() const;
};

struct ForestModel {
	std::vector<std::string> names;
	std::size_t width = 0;
	std::vector<RegressionTree> trees;
	std::vector<double> importance; ///< MDI, normalized to sum 1 unless no tree split
	bool importance_defined = false;
	std::uint64_t seed = 0;

	double predict(std::span<const double> row) const;
	std::vector<double> predict_all(const FlatData &data) const;
};

/// Fits a single tree on the given sample indices (repeats allowed) and adds its
/// per-feature impurity decrease to `importance`.
RegressionTree fit_tree(const FlatData &data, std::span<const std::size_t> samples, const ForestConfig &config,
                        Rng &rng, std::vector<double> &importance);

/// Trees train in parallel with per-tree derived seeds; results do not depend on `workers`.
ForestModel fit_forest(const FlatData &data, const ForestConfig &config);

/// Sample Pearson correlation; empty when either input is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> z);

struct ImportanceRow {
	std::string feature;
	double mdi = 0.0;
	std::optional<double> rho;
};

/// Per feature MDI and correlation with the target, sorted by MDI descending.
std::vector<ImportanceRow> importance_report(const ForestModel &model, const FlatData &data);
std::string importance_csv(const std::vector<ImportanceRow> &rows);

} // namespace loadcast::baseline
