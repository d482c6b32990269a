#include "loadcast/harness.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/csv.hpp"
#include "loadcast/error.hpp"
#include "loadcast/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <json.hpp>
#include <mutex>
#include <set>
#include <thread>

namespace loadcast::harness {

namespace {

using nlohmann::ordered_json;

constexpr std::string_view kResultFile = "result.json";

ordered_json optional_json(const std::optional<double> &v) {
	return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> optional_from(const ordered_json &j) {
	return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

ordered_json report_json(const metrics::MetricsReport &r) {
	return {{"n", r.n},
	        {"mse", r.mse},
	        {"mae", r.mae},
	        {"rmse", r.rmse},
	        {"r2", optional_json(r.r2)},
	        {"mape", optional_json(r.mape)},
	        {"wape", optional_json(r.wape)},
	        {"mase", optional_json(r.mase)},
	        {"mape_excluded", r.mape_excluded}};
}

metrics::MetricsReport report_from(const ordered_json &j) {
	metrics::MetricsReport r;
	r.n = j.at("n").get<std::size_t>();
	r.mse = j.at("mse").get<double>();
	r.mae = j.at("mae").get<double>();
	r.rmse = j.at("rmse").get<double>();
	r.r2 = optional_from(j.at("r2"));
	r.mape = optional_from(j.at("mape"));
	r.wape = optional_from(j.at("wape"));
	r.mase = optional_from(j.at("mase"));
	r.mape_excluded = j.at("mape_excluded").get<std::size_t>();
	return r;
}

std::string result_json(const CellResult &r) {
	ordered_json doc;
	doc["id"] = r.id;
	doc["seed"] = r.seed;
	doc["status"] = r.ok ? "ok" : "failed";
	doc["error"] = r.error;
	doc["best_epoch"] = r.best_epoch;
	doc["epochs"] = r.epochs;
	if (r.ok) {
		for (std::size_t s = 0; s < kReportSplits.size(); ++s) {
			doc["metrics"][std::string(features::to_string(kReportSplits[s]))] = report_json(r.reports[s]);
		}
	}
	return doc.dump(2) + "\n";
}

std::optional<CellResult> load_result(const std::filesystem::path &path, const Cell &cell) {
	if (!std::filesystem::exists(path)) {
		return std::nullopt;
	}
	try {
		const auto doc = ordered_json::parse(io::read_text(path));
		if (doc.at("status") != "ok" || doc.at("id") != cell.id || doc.at("seed") != cell.config.seed) {
			return std::nullopt;
		}
		CellResult r;
		r.id = cell.id;
		r.seed = cell.config.seed;
		r.ok = true;
		r.best_epoch = doc.at("best_epoch").get<std::size_t>();
		r.epochs = doc.at("epochs").get<std::size_t>();
		for (std::size_t s = 0; s < kReportSplits.size(); ++s) {
			r.reports[s] = report_from(doc.at("metrics").at(std::string(features::to_string(kReportSplits[s]))));
		}
		r.resumed = true;
		return r;
	} catch (const nlohmann::json::exception &) {
		return std::nullopt;
	}
}

CellResult run_cell(const Cell &cell, const features::Dataset &dataset, const RunOptions &options) {
	CellResult r;
	r.id = cell.id;
	r.seed = cell.config.seed;
	const auto dir = options.out_dir / "cells" / cell.id;
	const bool persist = !options.out_dir.empty();
	const auto started = std::chrono::steady_clock::now();
	try {
		auto fitted = train::fit(cell.config, dataset.train(), dataset.val());
		if (persist) {
			std::filesystem::create_directories(dir);
			fitted.trace.write_csv(dir / "trace.csv");
		}
		if (persist && options.save_checkpoints) {
			nn::save_checkpoint(fitted.network, dir / "checkpoint.bin",
			                    train::checkpoint_manifest(cell.config, dataset.storage()));
		}
		r.reports = evaluate_splits(fitted.network, dataset);
		r.best_epoch = fitted.trace.best_epoch + 1;
		r.epochs = fitted.trace.epochs.size();
		r.ok = true;
	} catch (const train::DivergenceError &e) {
		r.error = e.what();
		r.epochs = e.trace().epochs.size();
		if (persist) {
			std::filesystem::create_directories(dir);
			e.trace().write_csv(dir / "trace.csv");
		}
	} catch (const Error &e) {
		r.error = e.what();
	}
	r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
	if (persist) {
		std::filesystem::create_directories(dir);
		io::write_text(dir / kResultFile, result_json(r));
	}
	return r;
}

std::string cell_name(std::size_t index, const std::string &stem) {
	return fmt::format("{:02d}-{}", index + 1, stem);
}

const Cell &find_cell(const ExperimentPlan &plan, const std::string &id) {
	for (const auto &c : plan.cells) {
		if (c.id == id) {
			return c;
		}
	}
	throw Error(fmt::format("cell '{}' is not in plan '{}'", id, plan.name));
}

void write_metric_cells(csv::Writer &out, const metrics::MetricsReport &r) {
	out.cell(r.mse);
	out.cell(r.mae);
	out.cell(r.rmse);
	out.cell(r.r2);
	out.cell(r.mape);
	out.cell(r.wape);
	out.cell(r.mase);
}

void write_empty_metrics(csv::Writer &out) {
	for (int i = 0; i < 7; ++i) {
		out.cell(std::optional<double>{});
	}
}

} // namespace

void ExperimentPlan::validate() const {
	std::set<std::string> seen;
	for (const auto &c : cells) {
		if (!seen.insert(c.id).second) {
			throw UsageError(fmt::format("plan '{}' repeats cell id '{}'", name, c.id));
		}
		c.config.validate();
	}
}

std::string ExperimentPlan::to_csv() const {
	csv::Writer out({"cell", "architecture", "activation", "optimizer", "learning_rate", "batch", "dropout",
	                 "max_epochs", "seed"});
	for (const auto &c : cells) {
		out.cell(c.id);
		out.cell(c.config.architecture.str());
		out.cell(nn::to_string(c.config.activation));
		out.cell(train::to_string(c.config.optimizer));
		out.cell(c.config.learning_rate);
		out.cell(c.config.batch_size);
		out.cell(c.config.dropout);
		out.cell(c.config.max_epochs);
		out.cell(std::to_string(c.config.seed));
		out.end_row();
	}
	return out.str();
}

std::uint64_t cell_seed(std::uint64_t base_seed, const std::string &cell_id) {
	return derive_seed(base_seed, cell_id);
}

std::vector<nn::Architecture> study_architectures() {
	std::vector<nn::Architecture> out;
	for (const char *text : {"32x32", "64x64", "128x128", "32x32x32", "64x64x64", "128x128x128", "32x32x32x32",
	                         "64x64x64x64", "128x128x128x128", "64x128x128x64"}) {
		out.push_back(nn::Architecture::parse(text));
	}
	return out;
}

ExperimentPlan architecture_plan(const train::TrainConfig &base, std::uint64_t base_seed,
                                 const std::vector<nn::Architecture> &architectures) {
	ExperimentPlan plan;
	plan.name = "grid-arch";
	plan.base_seed = base_seed;
	for (std::size_t i = 0; i < architectures.size(); ++i) {
		Cell cell;
		cell.id = cell_name(i, architectures[i].str());
		cell.config = base;
		cell.config.architecture = architectures[i];
		cell.config.dropout = 0.2;
		cell.config.seed = cell_seed(base_seed, cell.id);
		plan.cells.push_back(std::move(cell));
	}
	return plan;
}

ExperimentPlan hyper_plan(const train::TrainConfig &base, std::uint64_t base_seed, const HyperGrid &grid) {
	ExperimentPlan plan;
	plan.name = "grid-hyper";
	plan.base_seed = base_seed;
	for (const auto activation : grid.activations) {
		for (const auto optimizer : grid.optimizers) {
			for (const auto batch : grid.batches) {
				Cell cell;
				cell.id = fmt::format("{}-{}-b{}", nn::to_string(activation), train::to_string(optimizer), batch);
				cell.config = base;
				cell.config.activation = activation;
				cell.config.optimizer = optimizer;
				cell.config.batch_size = batch;
				cell.config.seed = cell_seed(base_seed, cell.id);
				plan.cells.push_back(std::move(cell));
			}
		}
	}
	return plan;
}

ExperimentPlan seed_plan(const train::TrainConfig &base, std::uint64_t base_seed, std::size_t count) {
	ExperimentPlan plan;
	plan.name = "seed-study";
	plan.base_seed = base_seed;
	for (std::size_t i = 0; i < count; ++i) {
		Cell cell;
		cell.id = fmt::format("seed-{:03d}", i + 1);
		cell.config = base;
		cell.config.seed = cell_seed(base_seed, cell.id);
		plan.cells.push_back(std::move(cell));
	}
	return plan;
}

std::array<metrics::MetricsReport, 3> evaluate_splits(const nn::LstmNetwork &network,
                                                      const features::Dataset &dataset) {
	std::array<metrics::MetricsReport, 3> out;
	for (std::size_t s = 0; s < kReportSplits.size(); ++s) {
		const auto view = dataset.subset(kReportSplits[s]);
		const auto predicted = train::predict_mw(network, view);
		std::vector<double> real(view.size());
		for (std::size_t k = 0; k < view.size(); ++k) {
			real[k] = view.target_mw(k);
		}
		out[s] = metrics::compute_all(real, predicted);
	}
	return out;
}

std::size_t GridResult::failed() const {
	return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto &c) { return !c.ok; }));
}

std::vector<const CellResult *> GridResult::ranked_by_test_mse() const {
	std::vector<const CellResult *> out;
	for (const auto &c : cells) {
		if (c.ok) {
			out.push_back(&c);
		}
	}
	std::stable_sort(out.begin(), out.end(),
	                 [](const auto *a, const auto *b) { return a->reports[0].mse < b->reports[0].mse; });
	return out;
}

GridResult run_plan(const ExperimentPlan &plan, const features::Dataset &dataset, const RunOptions &options) {
	plan.validate();
	if (!options.out_dir.empty()) {
		std::filesystem::create_directories(options.out_dir / "cells");
		io::write_text(options.out_dir / "plan.csv", plan.to_csv());
	}
	GridResult result;
	result.cells.resize(plan.cells.size());
	std::mutex log_mutex;
	const auto log = [&](const std::string &line) {
		if (options.log) {
			const std::lock_guard lock(log_mutex);
			options.log(line);
		}
	};

	std::atomic<std::size_t> next{0};
	const auto work = [&] {
		for (std::size_t i = next++; i < plan.cells.size(); i = next++) {
			const auto &cell = plan.cells[i];
			if (options.resume && !options.out_dir.empty()) {
				if (auto done = load_result(options.out_dir / "cells" / cell.id / kResultFile, cell)) {
					result.cells[i] = std::move(*done);
					log(fmt::format("{}: already complete, skipped", cell.id));
					continue;
				}
			}
			result.cells[i] = run_cell(cell, dataset, options);
			const auto &r = result.cells[i];
			if (r.ok) {
				log(fmt::format("{}: test mse {:.4g}, best epoch {} of {}, {:.1f} s", cell.id, r.reports[0].mse,
				                r.best_epoch, r.epochs, r.wall_seconds));
			} else {
				log(fmt::format("{}: FAILED: {}", cell.id, r.error));
			}
		}
	};
	const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(plan.cells.size(), 1));
	std::vector<std::thread> pool;
	for (std::size_t w = 1; w < workers; ++w) {
		pool.emplace_back(work);
	}
	work();
	for (auto &t : pool) {
		t.join();
	}

	if (!options.out_dir.empty()) {
		io::write_text(options.out_dir / "results.csv", results_csv(plan, result));
		io::write_text(options.out_dir / "timings.csv", timings_csv(result));
	}
	return result;
}

std::string results_csv(const ExperimentPlan &plan, const GridResult &result) {
	auto header = std::vector<std::string>{"cell", "architecture", "activation", "optimizer", "batch", "seed",
	                                       "subset"};
	for (const char *m : {"mse", "mae", "rmse", "r2", "mape", "wape", "mase"}) {
		header.emplace_back(m);
	}
	header.emplace_back("best_epoch");
	header.emplace_back("status");
	csv::Writer out(header);
	for (const auto &r : result.cells) {
		const auto &cfg = find_cell(plan, r.id).config;
		const auto prefix = [&](std::string_view subset) {
			out.cell(r.id);
			out.cell(cfg.architecture.str());
			out.cell(nn::to_string(cfg.activation));
			out.cell(train::to_string(cfg.optimizer));
			out.cell(cfg.batch_size);
			out.cell(std::to_string(r.seed));
			out.cell(subset);
		};
		if (!r.ok) {
			prefix("-");
			write_empty_metrics(out);
			out.cell(std::optional<double>{});
			out.cell("failed");
			out.end_row();
			continue;
		}
		for (std::size_t s = 0; s < kReportSplits.size(); ++s) {
			prefix(features::to_string(kReportSplits[s]));
			write_metric_cells(out, r.reports[s]);
			out.cell(r.best_epoch);
			out.cell("ok");
			out.end_row();
		}
	}
	return out.str();
}

std::string timings_csv(const GridResult &result) {
	csv::Writer out({"cell", "wall_seconds", "epochs", "resumed", "error"});
	for (const auto &r : result.cells) {
		out.cell(r.id);
		out.cell(r.wall_seconds);
		out.cell(r.epochs);
		out.cell(r.resumed ? "yes" : "no");
		std::string error = r.error;
		std::replace(error.begin(), error.end(), ',', ';');
		std::replace(error.begin(), error.end(), '\n', ' ');
		out.cell(error);
		out.end_row();
	}
	return out.str();
}

std::string ranking_csv(const ExperimentPlan &plan, const GridResult &result) {
	csv::Writer out({"rank", "cell", "activation", "optimizer", "batch", "mse", "mae", "rmse", "r2", "mape", "wape",
	                 "mase"});
	std::size_t rank = 1;
	for (const auto *r : result.ranked_by_test_mse()) {
		const auto &cfg = find_cell(plan, r->id).config;
		out.cell(rank++);
		out.cell(r->id);
		out.cell(nn::to_string(cfg.activation));
		out.cell(train::to_string(cfg.optimizer));
		out.cell(cfg.batch_size);
		write_metric_cells(out, r->reports[0]);
		out.end_row();
	}
	return out.str();
}

std::string architectures_csv(const ExperimentPlan &plan, std::size_t train_samples, std::size_t input_width) {
	csv::Writer out({"cell", "architecture", "parameters", "overfit_ratio"});
	for (const auto &c : plan.cells) {
		out.cell(c.id);
		out.cell(c.config.architecture.str());
		out.cell(static_cast<std::size_t>(nn::count_parameters(c.config.architecture, input_width)));
		const double ratio = train::overfit_ratio(train_samples, c.config.architecture, input_width);
		out.cell(fmt::format("{:.1f}", ratio));
		out.end_row();
	}
	return out.str();
}

SeedAggregate aggregate_seeds(const GridResult &result) {
	SeedAggregate agg;
	std::vector<const metrics::MetricsReport *> done;
	for (const auto &r : result.cells) {
		if (!r.ok) {
			++agg.failed;
			continue;
		}
		done.push_back(&r.reports[0]);
		if (agg.best == nullptr) {
			agg.best = &r;
			continue;
		}
		const auto &cand = r.reports[0];
		const auto &best = agg.best->reports[0];
		const double cm = cand.mape.value_or(INFINITY);
		const double bm = best.mape.value_or(INFINITY);
		if (cm < bm || (cm == bm && cand.r2.value_or(-INFINITY) > best.r2.value_or(-INFINITY))) {
			agg.best = &r;
		}
	}
	agg.completed = done.size();
	if (done.empty()) {
		return agg;
	}
	const auto stats = [&](auto getter) -> std::pair<std::optional<double>, std::optional<double>> {
		std::vector<double> v;
		for (const auto *r : done) {
			if (const std::optional<double> x = getter(*r)) {
				v.push_back(*x);
			}
		}
		if (v.empty()) {
			return {std::nullopt, std::nullopt};
		}
		double mean = 0.0;
		for (const double x : v) {
			mean += x;
		}
		mean /= static_cast<double>(v.size());
		double ss = 0.0;
		for (const double x : v) {
			ss += (x - mean) * (x - mean);
		}
		const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
		return {mean, sd};
	};
	const auto fill = [&](auto getter, auto setter) {
		const auto [m, s] = stats(getter);
		setter(agg.mean, m);
		setter(agg.sd, s);
	};
	using R = metrics::MetricsReport;
	using O = std::optional<double>;
	fill([](const R &r) { return O(r.mse); }, [](R &r, O v) { r.mse = v.value_or(NAN); });
	fill([](const R &r) { return O(r.mae); }, [](R &r, O v) { r.mae = v.value_or(NAN); });
	fill([](const R &r) { return O(r.rmse); }, [](R &r, O v) { r.rmse = v.value_or(NAN); });
	fill([](const R &r) { return r.r2; }, [](R &r, O v) { r.r2 = v; });
	fill([](const R &r) { return r.mape; }, [](R &r, O v) { r.mape = v; });
	fill([](const R &r) { return r.wape; }, [](R &r, O v) { r.wape = v; });
	fill([](const R &r) { return r.mase; }, [](R &r, O v) { r.mase = v; });
	agg.mean.n = agg.sd.n = done.front()->n;
	return agg;
}

std::string seeds_csv(const GridResult &result) {
	csv::Writer out({"cell", "seed", "mse", "mae", "rmse", "r2", "mape", "wape", "mase", "best_epoch", "status"});
	for (const auto &r : result.cells) {
		out.cell(r.id);
		out.cell(std::to_string(r.seed));
		if (r.ok) {
			write_metric_cells(out, r.reports[0]);
			out.cell(r.best_epoch);
			out.cell("ok");
		} else {
			write_empty_metrics(out);
			out.cell(std::optional<double>{});
			out.cell("failed");
		}
		out.end_row();
	}
	return out.str();
}

std::string aggregate_csv(const SeedAggregate &aggregate) {
	csv::Writer out({"row", "cell", "mse", "mae", "rmse", "r2", "mape", "wape", "mase", "completed", "failed"});
	const auto row = [&](std::string_view name, std::string_view cell, const metrics::MetricsReport *r) {
		out.cell(name);
		out.cell(cell);
		if (r != nullptr) {
			write_metric_cells(out, *r);
		} else {
			write_empty_metrics(out);
		}
		out.cell(aggregate.completed);
		out.cell(aggregate.failed);
		out.end_row();
	};
	const bool any = aggregate.completed > 0;
	row("BEST", any ? aggregate.best->id : "-", any ? &aggregate.best->reports[0] : nullptr);
	row("MEAN", "-", any ? &aggregate.mean : nullptr);
	row("SD", "-", any ? &aggregate.sd : nullptr);
	return out.str();
}

} // namespace loadcast::harness
