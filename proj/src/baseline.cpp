#include "loadcast/baseline.hpp"

#include "loadcast/csv.hpp"
#include "loadcast/error.hpp"
#include "loadcast/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <numeric>
#include <thread>

namespace loadcast::baseline {

namespace {

struct Builder {
	const FlatData &data;
	const ForestConfig &config;
	Rng &rng;
	std::vector<double> &importance;
	RegressionTree tree;
	std::vector<std::size_t> features;
	std::vector<std::size_t> order;

	std::uint32_t grow(std::vector<std::size_t> idx, std::size_t depth) {
		const auto node_index = static_cast<std::uint32_t>(tree.nodes.size());
		tree.nodes.emplace_back();
		double mean = 0.0;
		for (const auto i : idx) {
			mean += data.y[i];
		}
		mean /= static_cast<double>(idx.size());
		double sse = 0.0;
		for (const auto i : idx) {
			sse += (data.y[i] - mean) * (data.y[i] - mean);
		}
		tree.nodes[node_index].value = mean;
		tree.nodes[node_index].samples = idx.size();

		const bool depth_capped = config.max_depth > 0 && depth >= config.max_depth;
		if (depth_capped || idx.size() < 2 * config.min_leaf || sse <= 0.0) {
			return node_index;
		}

		const std::size_t p = data.width;
		const auto mtry = std::clamp<std::size_t>(
		    static_cast<std::size_t>(std::ceil(config.feature_fraction * static_cast<double>(p))), 1, p);
		for (std::size_t k = 0; k < mtry; ++k) {
			std::swap(features[k], features[k + rng.below(p - k)]);
		}

		const double n = static_cast<double>(idx.size());
		double best_gain = 0.0;
		int best_feature = -1;
		double best_threshold = 0.0;
		order = idx;
		for (std::size_t k = 0; k < mtry; ++k) {
			const std::size_t f = features[k];
			const auto value = [&](std::size_t i) { return data.x[i * p + f]; };
			std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
				const double va = value(a);
				const double vb = value(b);
				return va < vb || (va == vb && a < b);
			});
			double left_sum = 0.0;
			double left_sq = 0.0;
			double total_sum = 0.0;
			double total_sq = 0.0;
			for (const auto i : order) {
				const double d = data.y[i] - mean;
				total_sum += d;
				total_sq += d * d;
			}
			for (std::size_t j = 1; j < order.size(); ++j) {
				const double d = data.y[order[j - 1]] - mean;
				left_sum += d;
				left_sq += d * d;
				if (j < config.min_leaf || order.size() - j < config.min_leaf) {
					continue;
				}
				const double lo = value(order[j - 1]);
				const double hi = value(order[j]);
				if (!(lo < hi)) {
					continue;
				}
				const double nl = static_cast<double>(j);
				const double nr = n - nl;
				const double right_sum = total_sum - left_sum;
				const double right_sq = total_sq - left_sq;
				const double sse_left = left_sq - left_sum * left_sum / nl;
				const double sse_right = right_sq - right_sum * right_sum / nr;
				const double gain = sse - sse_left - sse_right;
				if (gain > best_gain) {
					best_gain = gain;
					best_feature = static_cast<int>(f);
					best_threshold = lo + (hi - lo) / 2.0;
					if (!(best_threshold < hi)) {
						best_threshold = lo;
					}
				}
			}
		}
		if (best_feature < 0 || !(best_gain > 1e-12 * sse)) {
			return node_index;
		}

		std::vector<std::size_t> left;
		std::vector<std::size_t> right;
		for (const auto i : idx) {
			(data.x[i * p + static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(i);
		}
		idx.clear();
		idx.shrink_to_fit();
		importance[static_cast<std::size_t>(best_feature)] += best_gain;
		tree.nodes[node_index].feature = best_feature;
		tree.nodes[node_index].threshold = best_threshold;
		tree.nodes[node_index].impurity_decrease = best_gain;
		const auto l = grow(std::move(left), depth + 1);
		const auto r = grow(std::move(right), depth + 1);
		tree.nodes[node_index].left = l;
		tree.nodes[node_index].right = r;
		return node_index;
	}
};

std::size_t subtree_depth(const RegressionTree &tree, std::uint32_t node) {
	const auto &n = tree.nodes[node];
	if (n.leaf()) {
		return 0;
	}
	return 1 + std::max(subtree_depth(tree, n.left), subtree_depth(tree, n.right));
}

} // namespace

std::vector<double> FlatData::column(std::size_t c) const {
	std::vector<double> out(rows());
	for (std::size_t r = 0; r < rows(); ++r) {
		out[r] = x[r * width + c];
	}
	return out;
}

FlatData flat_rows(const features::WindowedDataset &data) {
	FlatData flat;
	flat.names = data.storage().names;
	flat.width = data.width();
	flat.x.reserve(data.size() * flat.width);
	flat.y.reserve(data.size());
	for (std::size_t k = 0; k < data.size(); ++k) {
		const auto row = data.last_raw_row(k);
		flat.x.insert(flat.x.end(), row.begin(), row.end());
		flat.y.push_back(data.target_mw(k));
	}
	return flat;
}

std::vector<std::string> ForestConfig::violations() const {
	std::vector<std::string> out;
	if (trees == 0) {
		out.emplace_back("forest needs at least one tree");
	}
	if (min_leaf == 0) {
		out.emplace_back("minimum leaf size must be at least 1");
	}
	if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
		out.push_back(fmt::format("feature fraction {} must lie in (0, 1]", feature_fraction));
	}
	return out;
}

double RegressionTree::predict(std::span<const double> row) const {
	std::uint32_t i = 0;
	while (!nodes[i].leaf()) {
		const auto &n = nodes[i];
		i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
	}
	return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
	return nodes.empty() ? 0 : subtree_depth(*this, 0);
}

double ForestModel::predict(std::span<const double> row) const {
	if (row.size() != width) {
		throw DataError(fmt::format("row has {} features, forest expects {}", row.size(), width));
	}
	double sum = 0.0;
	for (const auto &t : trees) {
		sum += t.predict(row);
	}
	return sum / static_cast<double>(trees.size());
}

std::vector<double> ForestModel::predict_all(const FlatData &data) const {
	std::vector<double> out(data.rows());
	for (std::size_t r = 0; r < data.rows(); ++r) {
		out[r] = predict(data.row(r));
	}
	return out;
}

RegressionTree fit_tree(const FlatData &data, std::span<const std::size_t> samples, const ForestConfig &config,
                        Rng &rng, std::vector<double> &importance) {
	if (samples.empty()) {
		throw DataError("tree needs at least one sample");
	}
	importance.resize(data.width, 0.0);
	Builder b{data, config, rng, importance, {}, {}, {}};
	b.features.resize(data.width);
	std::iota(b.features.begin(), b.features.end(), std::size_t{0});
	b.grow(std::vector<std::size_t>(samples.begin(), samples.end()), 0);
	return std::move(b.tree);
}

ForestModel fit_forest(const FlatData &data, const ForestConfig &config) {
	const auto problems = config.violations();
	if (!problems.empty()) {
		throw UsageError(fmt::format("invalid forest configuration: {}", fmt::join(problems, "; ")));
	}
	if (data.rows() < 2) {
		throw DataError("forest needs at least two rows");
	}
	if (data.x.size() != data.rows() * data.width) {
		throw DataError("flat data shape mismatch");
	}
	ForestModel model;
	model.names = data.names;
	model.width = data.width;
	model.seed = config.seed;
	model.trees.resize(config.trees);
	std::vector<std::vector<double>> per_tree(config.trees, std::vector<double>(data.width, 0.0));

	std::atomic<std::size_t> next{0};
	const auto work = [&] {
		std::vector<std::size_t> samples(data.rows());
		for (std::size_t t = next++; t < config.trees; t = next++) {
			Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(t)));
			if (config.bootstrap) {
				for (auto &s : samples) {
					s = static_cast<std::size_t>(rng.below(data.rows()));
				}
			} else {
				std::iota(samples.begin(), samples.end(), std::size_t{0});
			}
			model.trees[t] = fit_tree(data, samples, config, rng, per_tree[t]);
		}
	};
	const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, config.trees);
	std::vector<std::thread> pool;
	for (std::size_t w = 1; w < workers; ++w) {
		pool.emplace_back(work);
	}
	work();
	for (auto &th : pool) {
		th.join();
	}

	model.importance.assign(data.width, 0.0);
	for (const auto &imp : per_tree) {
		for (std::size_t f = 0; f < data.width; ++f) {
			model.importance[f] += imp[f];
		}
	}
	const double total = std::accumulate(model.importance.begin(), model.importance.end(), 0.0);
	model.importance_defined = total > 0.0;
	if (model.importance_defined) {
		for (auto &v : model.importance) {
			v /= total;
		}
	}
	return model;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> z) {
	if (x.size() != z.size() || x.size() < 2) {
		throw DataError("pearson needs two equally sized series of at least two values");
	}
	const double n = static_cast<double>(x.size());
	const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
	const double mz = std::accumulate(z.begin(), z.end(), 0.0) / n;
	double sxz = 0.0;
	double sxx = 0.0;
	double szz = 0.0;
	for (std::size_t i = 0; i < x.size(); ++i) {
		sxz += (x[i] - mx) * (z[i] - mz);
		sxx += (x[i] - mx) * (x[i] - mx);
		szz += (z[i] - mz) * (z[i] - mz);
	}
	if (sxx <= 0.0 || szz <= 0.0) {
		return std::nullopt;
	}
	return std::clamp(sxz / std::sqrt(sxx * szz), -1.0, 1.0);
}

std::vector<ImportanceRow> importance_report(const ForestModel &model, const FlatData &data) {
	std::vector<ImportanceRow> rows;
	for (std::size_t f = 0; f < model.width; ++f) {
		rows.push_back({model.names[f], model.importance[f], pearson(data.column(f), data.y)});
	}
	std::stable_sort(rows.begin(), rows.end(), [](const auto &a, const auto &b) { return a.mdi > b.mdi; });
	return rows;
}

std::string importance_csv(const std::vector<ImportanceRow> &rows) {
	csv::Writer out({"feature", "mdi", "pearson"});
	for (const auto &r : rows) {
		out.cell(r.feature);
		out.cell(r.mdi);
		out.cell(r.rho);
		out.end_row();
	}
	return out.str();
}

} // namespace loadcast::baseline
