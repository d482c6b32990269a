#include "cli.hpp"

#include "loadcast/analysis.hpp"
#include "loadcast/baseline.hpp"
#include "loadcast/binary_io.hpp"
#include "loadcast/csv.hpp"
#include "loadcast/error.hpp"
#include "loadcast/eval.hpp"
#include "loadcast/features.hpp"
#include "loadcast/harness.hpp"
#include "loadcast/hourly_table.hpp"
#include "loadcast/ingest.hpp"
#include "loadcast/metrics.hpp"
#include "loadcast/nn.hpp"
#include "loadcast/preprocess.hpp"
#include "loadcast/svg.hpp"
#include "loadcast/synthetic.hpp"
#include "loadcast/train.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace loadcast::cli {

namespace fs = std::filesystem;

namespace {

/// INI reader whose [sections] only group keys for readability: every key
/// resolves against the top-level options.
class SectionlessIni : public CLI::ConfigINI {
public:
	std::vector<CLI::ConfigItem> from_config(std::istream &input) const override {
		std::vector<CLI::ConfigItem> items = CLI::ConfigINI::from_config(input);
		std::vector<CLI::ConfigItem> flat;
		for (auto &item : items) {
			if (item.name == "++" || item.name == "--") {
				continue;
			}
			item.parents.clear();
			flat.push_back(std::move(item));
		}
		return flat;
	}
};

struct Settings {
	std::string workdir = ".";
	std::uint64_t seed = 1;
	std::string feature_set = "full";
	std::string accounting = "default";
	std::size_t workers = 1;
	std::size_t window = 24;

	std::string sources;
	std::string schema;
	std::string start;
	std::string end;
	std::size_t days = 180;
	std::uint64_t synthetic_seed = 7;

	std::string bounds = "global";

	std::string architecture = "32x32";
	std::string activation = "tanh";
	std::string optimizer = "adam";
	double learning_rate = 0.001;
	std::size_t batch_size = 60;
	std::size_t epochs = 80;
	std::size_t early_stop_patience = 10;
	std::size_t plateau_patience = 5;
	double plateau_factor = 0.5;
	double dropout = 0.2;
	bool dropout_last_layer = true;
	bool shuffle = false;

	std::string checkpoint;
	std::string predictions;
	double bin_width = 10.0;
	double price = 60.0;

	std::string architectures;
	std::string hyper_architecture = "64x128x128x64";
	std::string activations = "tanh,relu,softmax,sigmoid";
	std::string optimizers = "adam,sgd,rmsprop";
	std::string batches = "12,24,36,48,60,72";
	std::size_t seeds = 30;
	bool resume = true;
	bool save_checkpoints = true;

	std::size_t trees = 200;
	std::size_t max_depth = 0;
	std::size_t min_leaf = 1;
	double feature_fraction = 1.0 / 3.0;
	bool bootstrap = true;

	std::size_t acf_lags = 336;
	std::size_t peaks = 5;
	std::size_t mixture_bins = 50;
};

std::vector<std::string> split_list(const std::string &text) {
	std::vector<std::string> out;
	std::string item;
	std::istringstream in(text);
	while (std::getline(in, item, ',')) {
		item.erase(0, item.find_first_not_of(" \t"));
		item.erase(item.find_last_not_of(" \t") + 1);
		if (!item.empty()) {
			out.push_back(item);
		}
	}
	return out;
}

/// Collects every violation before failing.
class Violations {
public:
	template <class F> void check(const std::string &key, F &&parse) {
		try {
			parse();
		} catch (const Error &e) {
			add(fmt::format("{}: {}", key, e.what()));
		}
	}
	void add(std::string message) { messages_.push_back(std::move(message)); }
	void add_all(const std::vector<std::string> &messages) {
		messages_.insert(messages_.end(), messages.begin(), messages.end());
	}
	void raise() const {
		if (messages_.empty()) {
			return;
		}
		std::string text = "invalid configuration:";
		for (const auto &m : messages_) {
			text += "\n  - " + m;
		}
		throw UsageError(text);
	}

private:
	std::vector<std::string> messages_;
};

struct Layout {
	fs::path root;

	fs::path raw() const { return root / "raw"; }
	fs::path merged() const { return root / "stage1" / "merged.htab"; }
	fs::path clean() const { return root / "stage2" / "clean.htab"; }
	fs::path cleaning_report() const { return root / "stage2" / "cleaning_report.csv"; }
	fs::path dataset() const { return root / "stage3" / "dataset.wdst"; }
	fs::path model() const { return root / "model"; }
	fs::path eval() const { return root / "eval"; }
	fs::path baseline() const { return root / "baseline"; }
	fs::path analysis() const { return root / "analysis"; }
	fs::path report() const { return root / "report"; }
};

void require(const fs::path &path, std::string_view producer) {
	if (!fs::exists(path)) {
		throw DataError(fmt::format("missing {}; run `loadcast {}` first", path.string(), producer));
	}
}

/// Exclusive marker file held for the lifetime of one invocation.
class WorkdirLock {
public:
	explicit WorkdirLock(const fs::path &workdir) : path_(workdir / ".loadcast.lock") {
		fs::create_directories(workdir);
		std::FILE *f = std::fopen(path_.c_str(), "wx");
		if (f == nullptr) {
			throw UsageError(fmt::format("workdir {} is in use by another invocation (remove {} if stale)",
			                             workdir.string(), path_.string()));
		}
		std::fclose(f);
	}
	~WorkdirLock() {
		std::error_code ec;
		fs::remove(path_, ec);
	}
	WorkdirLock(const WorkdirLock &) = delete;
	WorkdirLock &operator=(const WorkdirLock &) = delete;

private:
	fs::path path_;
};

struct Context {
	const Settings &s;
	Layout layout;
	std::ostream &out;
	std::ostream &err;
	std::string effective_config;
};

train::TrainConfig train_config(const Settings &s) {
	train::TrainConfig c;
	c.architecture = nn::Architecture::parse(s.architecture);
	c.activation = nn::parse_activation(s.activation);
	c.optimizer = train::parse_optimizer(s.optimizer);
	c.learning_rate = s.learning_rate;
	c.batch_size = s.batch_size;
	c.max_epochs = s.epochs;
	c.early_stop_patience = s.early_stop_patience;
	c.plateau_patience = s.plateau_patience;
	c.plateau_factor = s.plateau_factor;
	c.dropout = s.dropout;
	c.dropout_last_layer = s.dropout_last_layer;
	c.shuffle = s.shuffle;
	c.seed = s.seed;
	return c;
}

baseline::ForestConfig forest_config(const Settings &s) {
	baseline::ForestConfig c;
	c.trees = s.trees;
	c.max_depth = s.max_depth;
	c.min_leaf = s.min_leaf;
	c.feature_fraction = s.feature_fraction;
	c.bootstrap = s.bootstrap;
	c.seed = s.seed;
	c.workers = s.workers;
	return c;
}

std::vector<nn::Architecture> parse_architectures(const std::string &text) {
	std::vector<nn::Architecture> out;
	for (const auto &item : split_list(text)) {
		out.push_back(nn::Architecture::parse(item));
	}
	if (out.empty()) {
		throw UsageError("empty architecture list");
	}
	return out;
}

harness::HyperGrid hyper_grid(const Settings &s) {
	harness::HyperGrid g;
	g.activations.clear();
	for (const auto &a : split_list(s.activations)) {
		g.activations.push_back(nn::parse_activation(a));
	}
	g.optimizers.clear();
	for (const auto &o : split_list(s.optimizers)) {
		g.optimizers.push_back(train::parse_optimizer(o));
	}
	g.batches.clear();
	for (const auto &b : split_list(s.batches)) {
		std::size_t pos = 0;
		unsigned long long v = 0;
		try {
			v = std::stoull(b, &pos);
		} catch (const std::exception &) {
			pos = 0;
		}
		if (pos != b.size() || v == 0) {
			throw UsageError(fmt::format("batch size '{}' is not a positive integer", b));
		}
		g.batches.push_back(static_cast<std::size_t>(v));
	}
	if (g.activations.empty() || g.optimizers.empty() || g.batches.empty()) {
		throw UsageError("every grid axis needs at least one value");
	}
	return g;
}

/// Every violation across the settings the chosen subcommand uses.
void validate(const Settings &s, const std::string &command) {
	Violations v;
	v.check("feature-set", [&] { features::parse_feature_set(s.feature_set); });
	v.check("accounting", [&] { features::parse_accounting(s.accounting); });
	if (s.workers == 0) {
		v.add("workers: must be at least 1");
	}
	if (s.window == 0) {
		v.add("window: must be at least 1");
	}
	if (command == "generate-synthetic" && s.days < 3) {
		v.add("days: must be at least 3");
	}
	if (command == "ingest") {
		if (!s.schema.empty() && !fs::exists(s.schema)) {
			v.add(fmt::format("schema: {} does not exist", s.schema));
		}
		v.check("start", [&] {
			if (!s.start.empty()) {
				parse_date(s.start);
			}
		});
		v.check("end", [&] {
			if (!s.end.empty()) {
				parse_date(s.end);
			}
		});
	}
	if (command == "preprocess" && s.bounds != "global" && s.bounds != "daily") {
		v.add(fmt::format("bounds: '{}' is not one of global, daily", s.bounds));
	}
	const bool trains = command == "train" || command == "grid-arch" || command == "grid-hyper" ||
	                    command == "seed-study";
	if (trains) {
		train::TrainConfig c;
		bool parsed = true;
		v.check("architecture", [&] { c.architecture = nn::Architecture::parse(s.architecture); });
		v.check("activation", [&] { c.activation = nn::parse_activation(s.activation); });
		v.check("optimizer", [&] { c.optimizer = train::parse_optimizer(s.optimizer); });
		try {
			c = train_config(s);
		} catch (const Error &) {
			parsed = false;
		}
		if (parsed) {
			v.add_all(c.violations());
		} else {
			train::TrainConfig numeric;
			numeric.learning_rate = s.learning_rate;
			numeric.batch_size = s.batch_size;
			numeric.max_epochs = s.epochs;
			numeric.early_stop_patience = s.early_stop_patience;
			numeric.plateau_patience = s.plateau_patience;
			numeric.plateau_factor = s.plateau_factor;
			numeric.dropout = s.dropout;
			v.add_all(numeric.violations());
		}
	}
	if (command == "grid-arch" && !s.architectures.empty()) {
		v.check("architectures", [&] { parse_architectures(s.architectures); });
	}
	if (command == "grid-hyper") {
		v.check("hyper-architecture", [&] { nn::Architecture::parse(s.hyper_architecture); });
		v.check("grid axes", [&] { hyper_grid(s); });
	}
	if (command == "seed-study" && s.seeds == 0) {
		v.add("seeds: must be at least 1");
	}
	if (command == "evaluate") {
		if (!s.checkpoint.empty() && !fs::exists(s.checkpoint)) {
			v.add(fmt::format("checkpoint: {} does not exist", s.checkpoint));
		}
		if (!s.predictions.empty() && !fs::exists(s.predictions)) {
			v.add(fmt::format("predictions: {} does not exist", s.predictions));
		}
		if (!(s.bin_width > 0.0)) {
			v.add("bin-width: must be positive");
		}
		if (!(s.price >= 0.0)) {
			v.add("price: must not be negative");
		}
	}
	if (command == "baseline-rf") {
		v.add_all(forest_config(s).violations());
	}
	if (command == "analyze") {
		if (s.peaks == 0) {
			v.add("peaks: must be at least 1");
		}
		if (s.mixture_bins < 2) {
			v.add("mixture-bins: must be at least 2");
		}
	}
	v.raise();
}

// ---- stages --------------------------------------------------------------

void cmd_generate(Context &ctx) {
	const fs::path dir = ctx.s.sources.empty() ? ctx.layout.raw() : fs::path(ctx.s.sources);
	const auto sources = synthetic::generate_synthetic(ctx.s.days, ctx.s.synthetic_seed);
	synthetic::write_sources(sources, dir);
	ctx.out << fmt::format("generate-synthetic: {} days from {} to {} -> {}\n", ctx.s.days,
	                       format_date(sources.span.first), format_date(sources.span.last), dir.string());
}

DateSpan infer_span(const Settings &s, const fs::path &demand_path, const ingest::ColumnMap &schema) {
	std::optional<Date> first;
	std::optional<Date> last;
	if (!s.start.empty()) {
		first = parse_date(s.start);
	}
	if (!s.end.empty()) {
		last = parse_date(s.end);
	}
	if (!first || !last) {
		const auto rows = ingest::parse_demand_csv(demand_path, schema);
		if (rows.empty()) {
			throw DataError(fmt::format("{} has no rows", demand_path.string()));
		}
		const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(), [](const auto &a, const auto &b) {
			return a.timestamp < b.timestamp;
		});
		if (!first) {
			first = date_of(lo->timestamp);
		}
		if (!last) {
			last = date_of(hi->timestamp);
		}
	}
	if (*last < *first) {
		throw UsageError(fmt::format("end {} precedes start {}", format_date(*last), format_date(*first)));
	}
	return DateSpan{*first, *last};
}

void cmd_ingest(Context &ctx) {
	const fs::path dir = ctx.s.sources.empty() ? ctx.layout.raw() : fs::path(ctx.s.sources);
	const auto paths = ingest::SourcePaths::in_directory(dir);
	for (const auto &p : {paths.weather, paths.satellite, paths.demand, paths.calendar, paths.population}) {
		if (!fs::exists(p)) {
			throw DataError(fmt::format("missing source {}; point --sources at the raw CSV directory or run "
			                            "`loadcast generate-synthetic` first",
			                            p.string()));
		}
	}
	const ingest::SourceSchemas schemas = ctx.s.schema.empty() ? ingest::SourceSchemas{}
	                                                           : ingest::load_schemas(ctx.s.schema);
	const DateSpan span = infer_span(ctx.s, paths.demand, schemas.demand);
	const HourlyTable table = ingest::ingest_sources(paths, span, schemas);
	fs::create_directories(ctx.layout.merged().parent_path());
	persist_table(table, ctx.layout.merged());
	std::size_t missing = 0;
	for (const auto &c : table.columns()) {
		missing += c.missing_count();
	}
	ctx.out << fmt::format("ingest: {} hours from {} to {}, {} missing cells -> {}\n", table.rows(),
	                       format_date(span.first), format_date(span.last), missing, ctx.layout.merged().string());
}

void cmd_preprocess(Context &ctx) {
	require(ctx.layout.merged(), "ingest");
	const HourlyTable raw = load_table(ctx.layout.merged());
	preprocess::CleaningOptions options;
	options.bounds = ctx.s.bounds == "daily" ? preprocess::BoundsMode::daily : preprocess::BoundsMode::global;
	const auto result = preprocess::clean_table(raw, options);
	fs::create_directories(ctx.layout.clean().parent_path());
	persist_table(result.table, ctx.layout.clean());
	result.report.write_csv(ctx.layout.cleaning_report());
	std::size_t outliers = 0;
	std::size_t imputed = 0;
	for (const auto &r : result.report.rows) {
		outliers += r.outliers;
		imputed += r.imputed_short + r.imputed_long;
	}
	ctx.out << fmt::format("preprocess: {} hours, {} outliers flagged, {} cells imputed -> {}\n",
	                       result.table.rows(), outliers, imputed, ctx.layout.clean().string());
}

void cmd_featurize(Context &ctx) {
	require(ctx.layout.clean(), "preprocess");
	const HourlyTable clean = load_table(ctx.layout.clean());
	const auto set = features::parse_feature_set(ctx.s.feature_set);
	const auto accounting = features::parse_accounting(ctx.s.accounting);
	const auto frame = features::build_frame(clean, set);
	const auto dataset = features::split_and_window(frame, ctx.s.window, accounting);
	fs::create_directories(ctx.layout.dataset().parent_path());
	features::save_dataset(dataset, ctx.layout.dataset());
	const auto &plan = dataset.storage().plan;
	ctx.out << fmt::format("featurize: {} features, window {}, samples train {} / val {} / test {} -> {}\n",
	                       frame.width(), plan.window, plan.train, plan.val, plan.test,
	                       ctx.layout.dataset().string());
}

features::Dataset load_stage_dataset(Context &ctx) {
	require(ctx.layout.dataset(), "featurize");
	return features::load_dataset(ctx.layout.dataset());
}

void write_effective_config(const Context &ctx, const fs::path &dir) {
	fs::create_directories(dir);
	io::write_text(dir / "config.ini", ctx.effective_config);
}

void cmd_train(Context &ctx) {
	const auto dataset = load_stage_dataset(ctx);
	const auto config = train_config(ctx.s);
	auto &err = ctx.err;
	const auto result = train::fit(config, dataset.train(), dataset.val(), [&err](const train::EpochRecord &e) {
		err << fmt::format("epoch {:>4}  train {:.6g}  val {:.6g}  lr {:.3g}\n", e.epoch, e.train_loss, e.val_loss,
		                   e.learning_rate);
	});
	const fs::path dir = ctx.layout.model();
	fs::create_directories(dir);
	nn::save_checkpoint(result.network, dir / "checkpoint.bin",
	                    train::checkpoint_manifest(config, dataset.storage()));
	result.trace.write_csv(dir / "trace.csv");
	write_effective_config(ctx, dir);
	const auto &best = result.trace.epochs.at(result.trace.best_epoch);
	ctx.out << fmt::format("train: {} {} params, {} epochs{}, best epoch {} val loss {:.6g} -> {}\n",
	                       config.architecture.str(), result.network.parameter_count(), result.trace.epochs.size(),
	                       result.trace.early_stopped ? " (early stop)" : "", best.epoch, best.val_loss,
	                       (dir / "checkpoint.bin").string());
}

/// MW predictions aligned to the split's target hours from a timestamp,predicted CSV.
std::vector<double> external_predictions(const fs::path &path, const features::WindowedDataset &data) {
	const auto table = csv::read(path);
	const std::size_t tc = table.column("timestamp");
	const std::size_t pc = table.column("predicted");
	std::map<HourStamp, double> by_time;
	for (const auto &row : table.rows) {
		const auto cell = csv::parse_number(row.cells.at(pc));
		if (!cell.value) {
			throw DataError(fmt::format("{}:{}: prediction is not a number", path.string(), row.line));
		}
		by_time[parse_timestamp(row.cells.at(tc))] = *cell.value;
	}
	std::vector<double> out(data.size());
	for (std::size_t k = 0; k < data.size(); ++k) {
		const auto it = by_time.find(data.target_time(k));
		if (it == by_time.end()) {
			throw DataError(fmt::format("{} has no prediction for {}", path.string(),
			                            format_timestamp(data.target_time(k))));
		}
		out[k] = it->second;
	}
	return out;
}

void write_evaluation(Context &ctx, const fs::path &dir, const eval::ResidualSeries &series) {
	io::write_text(dir / "residuals.csv", eval::residuals_csv(series));
	const auto extrema = eval::extrema_timing(series);
	io::write_text(dir / "extrema.csv", extrema.to_csv());
	csv::Writer summary({"days", "dropped_days", "max_exact_pct", "max_within1_pct", "min_exact_pct",
	                     "min_within1_pct"});
	summary.cell(extrema.days.size());
	summary.cell(extrema.dropped_days);
	summary.cell(extrema.max_exact_pct);
	summary.cell(extrema.max_within1_pct);
	summary.cell(extrema.min_exact_pct);
	summary.cell(extrema.min_within1_pct);
	summary.end_row();
	summary.save(dir / "extrema_summary.csv");
	io::write_text(dir / "errors_by_weekday.csv", eval::group_errors(series, eval::GroupKey::weekday).to_csv());
	io::write_text(dir / "errors_by_hour.csv", eval::group_errors(series, eval::GroupKey::hour).to_csv());
	const auto errors = eval::errors_of(series);
	io::write_text(dir / "histogram.csv", eval::residual_histogram(errors, ctx.s.bin_width).to_csv());
}

void cmd_evaluate(Context &ctx) {
	const auto dataset = load_stage_dataset(ctx);
	const fs::path dir = ctx.layout.eval();
	fs::create_directories(dir);
	std::vector<metrics::ResultRow> rows;
	eval::ResidualSeries test_series;
	std::string model = "lstm";

	const auto real_of = [](const features::WindowedDataset &data) {
		std::vector<double> y(data.size());
		for (std::size_t k = 0; k < data.size(); ++k) {
			y[k] = data.target_mw(k);
		}
		return y;
	};

	if (!ctx.s.predictions.empty()) {
		model = "external";
		const auto test = dataset.test();
		const auto predicted = external_predictions(ctx.s.predictions, test);
		rows.push_back({model, "test", metrics::compute_all(real_of(test), predicted)});
		test_series = eval::make_residuals(test, predicted);
	} else {
		const fs::path checkpoint =
		    ctx.s.checkpoint.empty() ? ctx.layout.model() / "checkpoint.bin" : fs::path(ctx.s.checkpoint);
		require(checkpoint, "train");
		const auto network = nn::load_checkpoint(checkpoint);
		if (network.input_width() != dataset.storage().width()) {
			throw DataError(fmt::format("checkpoint expects {} features but the dataset has {}; re-run "
			                            "`loadcast train` after `loadcast featurize`",
			                            network.input_width(), dataset.storage().width()));
		}
		for (const auto split : harness::kReportSplits) {
			const auto data = dataset.subset(split);
			const auto predicted = train::predict_mw(network, data);
			rows.push_back({model, std::string(features::to_string(split)), metrics::compute_all(real_of(data), predicted)});
			if (split == features::Split::test) {
				test_series = eval::make_residuals(data, predicted);
			}
		}
	}
	metrics::write_results_csv(rows, dir / "metrics.csv");
	write_evaluation(ctx, dir, test_series);

	const auto &test = rows.front().report;
	csv::Writer cost({"deviation_mw", "duration_h", "price_per_mwh", "cost"});
	cost.cell(test.mae);
	cost.cell(24.0);
	cost.cell(ctx.s.price);
	cost.cell(eval::cost_of_error(test.mae, 24.0, ctx.s.price));
	cost.end_row();
	cost.save(dir / "cost.csv");

	ctx.out << fmt::format("evaluate: {} test n={} MAE {:.4g} RMSE {:.4g} MAPE {} -> {}\n", model, test.n, test.mae,
	                       test.rmse, test.mape ? fmt::format("{:.4g}%", *test.mape) : std::string("n/a"),
	                       (dir / "metrics.csv").string());
}

harness::RunOptions run_options(Context &ctx, const fs::path &dir) {
	harness::RunOptions o;
	o.out_dir = dir;
	o.workers = ctx.s.workers;
	o.resume = ctx.s.resume;
	o.save_checkpoints = ctx.s.save_checkpoints;
	auto &err = ctx.err;
	o.log = [&err](const std::string &line) { err << line << '\n'; };
	return o;
}

int finish_grid(Context &ctx, const std::string &name, const harness::GridResult &result) {
	ctx.out << fmt::format("{}: {} cells, {} failed -> {}\n", name, result.cells.size(), result.failed(),
	                       (ctx.layout.root / name).string());
	if (result.failed() > 0) {
		for (const auto &c : result.cells) {
			if (!c.ok) {
				ctx.err << fmt::format("cell {} failed: {}\n", c.id, c.error);
			}
		}
		return kExitNumeric;
	}
	return kExitOk;
}

int cmd_grid_arch(Context &ctx) {
	const auto dataset = load_stage_dataset(ctx);
	const auto base = train_config(ctx.s);
	const auto archs =
	    ctx.s.architectures.empty() ? harness::study_architectures() : parse_architectures(ctx.s.architectures);
	const auto plan = harness::architecture_plan(base, ctx.s.seed, archs);
	const fs::path dir = ctx.layout.root / "grid-arch";
	const auto result = harness::run_plan(plan, dataset, run_options(ctx, dir));
	io::write_text(dir / "architectures.csv",
	               harness::architectures_csv(plan, dataset.storage().plan.train, dataset.storage().width()));
	io::write_text(dir / "ranking.csv", harness::ranking_csv(plan, result));
	write_effective_config(ctx, dir);
	return finish_grid(ctx, "grid-arch", result);
}

int cmd_grid_hyper(Context &ctx) {
	const auto dataset = load_stage_dataset(ctx);
	auto base = train_config(ctx.s);
	base.architecture = nn::Architecture::parse(ctx.s.hyper_architecture);
	const auto plan = harness::hyper_plan(base, ctx.s.seed, hyper_grid(ctx.s));
	const fs::path dir = ctx.layout.root / "grid-hyper";
	const auto result = harness::run_plan(plan, dataset, run_options(ctx, dir));
	io::write_text(dir / "ranking.csv", harness::ranking_csv(plan, result));
	write_effective_config(ctx, dir);
	return finish_grid(ctx, "grid-hyper", result);
}

int cmd_seed_study(Context &ctx) {
	const auto dataset = load_stage_dataset(ctx);
	const auto plan = harness::seed_plan(train_config(ctx.s), ctx.s.seed, ctx.s.seeds);
	const fs::path dir = ctx.layout.root / "seed-study";
	const auto result = harness::run_plan(plan, dataset, run_options(ctx, dir));
	io::write_text(dir / "seeds.csv", harness::seeds_csv(result));
	const auto aggregate = harness::aggregate_seeds(result);
	if (aggregate.completed > 0) {
		io::write_text(dir / "aggregate.csv", harness::aggregate_csv(aggregate));
	}
	write_effective_config(ctx, dir);
	return finish_grid(ctx, "seed-study", result);
}

void cmd_baseline(Context &ctx) {
	const auto dataset = load_stage_dataset(ctx);
	const auto config = forest_config(ctx.s);
	const auto train_rows = baseline::flat_rows(dataset.train());
	const auto model = baseline::fit_forest(train_rows, config);
	const fs::path dir = ctx.layout.baseline();
	fs::create_directories(dir);
	std::vector<metrics::ResultRow> rows;
	for (const auto split : harness::kReportSplits) {
		const auto data = baseline::flat_rows(dataset.subset(split));
		const auto predicted = model.predict_all(data);
		rows.push_back({"random-forest", std::string(features::to_string(split)), metrics::compute_all(data.y, predicted)});
		if (split == features::Split::test) {
			io::write_text(dir / "residuals.csv",
			               eval::residuals_csv(eval::make_residuals(dataset.test(), predicted)));
		}
	}
	metrics::write_results_csv(rows, dir / "metrics.csv");
	const auto importance = baseline::importance_report(model, train_rows);
	io::write_text(dir / "importance.csv", baseline::importance_csv(importance));
	ctx.out << fmt::format("baseline-rf: {} trees, test R2 {}, top feature {} -> {}\n", config.trees,
	                       rows.front().report.r2 ? fmt::format("{:.4f}", *rows.front().report.r2) : "n/a",
	                       importance.empty() ? "n/a" : importance.front().feature, dir.string());
}

void cmd_analyze(Context &ctx) {
	require(ctx.layout.clean(), "preprocess");
	const HourlyTable clean = load_table(ctx.layout.clean());
	const auto &demand = clean.column(col::demand).values;
	const auto &temp = clean.column(col::temp).values;
	const fs::path dir = ctx.layout.analysis();
	fs::create_directories(dir);

	const auto spectrum = analysis::periodogram(demand);
	io::write_text(dir / "periodogram.csv", spectrum.to_csv());
	csv::Writer peaks({"rank", "frequency", "period_hours", "power"});
	std::size_t rank = 1;
	for (const auto &p : spectrum.peaks(ctx.s.peaks)) {
		peaks.cell(rank++);
		peaks.cell(p.frequency);
		peaks.cell(p.period_hours);
		peaks.cell(p.power);
		peaks.end_row();
	}
	peaks.save(dir / "peaks.csv");

	const std::size_t lags = std::min(ctx.s.acf_lags, demand.size() - 1);
	csv::Writer acf_out({"lag", "acf"});
	if (const auto r = analysis::acf(demand, lags)) {
		for (std::size_t k = 0; k < r->size(); ++k) {
			acf_out.cell(k);
			acf_out.cell((*r)[k]);
			acf_out.end_row();
		}
	}
	acf_out.save(dir / "acf.csv");

	csv::Writer poly({"degree", "center", "c0", "c1", "c2", "c3", "rho", "residual_ss", "stationary_points"});
	for (int degree = 1; degree <= 3; ++degree) {
		const auto fit = analysis::fit_poly(temp, demand, degree);
		poly.cell(static_cast<std::size_t>(degree));
		poly.cell(fit.center);
		for (std::size_t k = 0; k < 4; ++k) {
			poly.cell(k < fit.coefficients.size() ? std::optional<double>(fit.coefficients[k]) : std::nullopt);
		}
		poly.cell(fit.rho);
		poly.cell(fit.residual_ss);
		std::vector<std::string> points;
		for (const auto &p : fit.stationary_points) {
			points.push_back(fmt::format("{}:{}", p.minimum ? "min" : "max", csv::number(p.x)));
		}
		poly.cell(fmt::format("{}", fmt::join(points, ";")));
		poly.end_row();
	}
	poly.save(dir / "polyfit.csv");

	std::vector<HourStamp> times(clean.rows());
	for (std::size_t r = 0; r < clean.rows(); ++r) {
		times[r] = clean.timestamp(r);
	}
	csv::Writer monthly({"month", "n", "slope", "rho"});
	for (const auto &m : analysis::fit_monthly_linear(times, temp, demand)) {
		monthly.cell(static_cast<std::size_t>(m.month));
		monthly.cell(m.n);
		monthly.cell(m.slope);
		monthly.cell(m.rho);
		monthly.end_row();
	}
	monthly.save(dir / "monthly.csv");

	const auto mixture = analysis::fit_bimodal(demand, ctx.s.mixture_bins);
	csv::Writer bimodal({"component", "weight", "mean", "sd", "iterations", "converged", "restarted"});
	for (std::size_t k = 0; k < mixture.components.size(); ++k) {
		const auto &c = mixture.components[k];
		bimodal.cell(k + 1);
		bimodal.cell(c.weight);
		bimodal.cell(c.mean);
		bimodal.cell(c.sd);
		bimodal.cell(mixture.iterations);
		bimodal.cell(mixture.converged ? "1" : "0");
		bimodal.cell(mixture.restarted ? "1" : "0");
		bimodal.end_row();
	}
	bimodal.save(dir / "bimodal.csv");

	const auto top = spectrum.peaks(2);
	ctx.out << fmt::format("analyze: {} hours, strongest periods {} h, mixture means {:.1f} / {:.1f} MW -> {}\n",
	                       demand.size(),
	                       fmt::join([&] {
		                       std::vector<std::string> v;
		                       for (const auto &p : top) {
			                       v.push_back(fmt::format("{:.1f}", p.period_hours));
		                       }
		                       return v;
	                       }(),
	                                 ", "),
	                       mixture.components[0].mean, mixture.components[1].mean, dir.string());
}

// ---- report --------------------------------------------------------------

std::vector<double> numeric_column(const csv::Table &table, std::string_view name) {
	const std::size_t c = table.column(name);
	std::vector<double> out;
	out.reserve(table.rows.size());
	for (const auto &row : table.rows) {
		out.push_back(csv::parse_number(row.cells.at(c)).value.value_or(std::numeric_limits<double>::quiet_NaN()));
	}
	return out;
}

eval::ResidualSeries read_residuals(const fs::path &path) {
	const auto table = csv::read(path);
	const std::size_t tc = table.column("timestamp");
	std::vector<HourStamp> times;
	for (const auto &row : table.rows) {
		times.push_back(parse_timestamp(row.cells.at(tc)));
	}
	const auto real = numeric_column(table, "real");
	const auto predicted = numeric_column(table, "predicted");
	std::vector<std::uint8_t> holiday;
	for (const double h : numeric_column(table, "holiday")) {
		holiday.push_back(h != 0.0 ? 1 : 0);
	}
	return eval::make_residuals(times, real, predicted, holiday);
}

/// Copies every CSV of `dir` (non-recursive) into `out` with `prefix`.
std::size_t collect_csvs(const fs::path &dir, const std::string &prefix, const fs::path &out) {
	if (!fs::is_directory(dir)) {
		return 0;
	}
	std::vector<fs::path> files;
	for (const auto &entry : fs::directory_iterator(dir)) {
		if (entry.is_regular_file() && entry.path().extension() == ".csv") {
			files.push_back(entry.path());
		}
	}
	std::sort(files.begin(), files.end());
	for (const auto &f : files) {
		fs::copy_file(f, out / (prefix + "_" + f.filename().string()), fs::copy_options::overwrite_existing);
	}
	return files.size();
}

void cmd_report(Context &ctx) {
	const fs::path residuals = ctx.layout.eval() / "residuals.csv";
	require(residuals, "evaluate");
	const fs::path out = ctx.layout.report();
	fs::create_directories(out);

	std::size_t copied = 0;
	copied += collect_csvs(ctx.layout.root / "stage2", "cleaning", out);
	copied += collect_csvs(ctx.layout.model(), "model", out);
	copied += collect_csvs(ctx.layout.eval(), "eval", out);
	copied += collect_csvs(ctx.layout.baseline(), "baseline", out);
	copied += collect_csvs(ctx.layout.analysis(), "analysis", out);
	copied += collect_csvs(ctx.layout.root / "grid-arch", "grid_arch", out);
	copied += collect_csvs(ctx.layout.root / "grid-hyper", "grid_hyper", out);
	copied += collect_csvs(ctx.layout.root / "seed-study", "seed_study", out);

	std::size_t charts = 0;
	const auto chart = [&](const std::string &name, const std::string &document) {
		svg::save(out / name, document);
		++charts;
	};

	const fs::path trace_path = ctx.layout.model() / "trace.csv";
	if (fs::exists(trace_path)) {
		const auto trace = csv::read(trace_path);
		const auto epoch = numeric_column(trace, "epoch");
		chart("loss_curve.svg", svg::line_chart({{"train", epoch, numeric_column(trace, "train_loss")},
		                                         {"validation", epoch, numeric_column(trace, "val_loss")}},
		                                        {"Training and validation loss", "epoch", "MSE (normalized)"}));
	}

	const auto series = read_residuals(residuals);
	std::vector<double> index(series.size());
	std::vector<double> real(series.size());
	std::vector<double> predicted(series.size());
	for (std::size_t k = 0; k < series.size(); ++k) {
		index[k] = static_cast<double>(k);
		real[k] = series[k].real;
		predicted[k] = series[k].predicted;
	}
	chart("prediction_overlay.svg", svg::line_chart({{"real", index, real}, {"predicted", index, predicted}},
	                                                {"Test split: real and predicted demand", "hour", "MW"}));
	chart("residuals_histogram.svg",
	      svg::histogram_chart(eval::residual_histogram(eval::errors_of(series), ctx.s.bin_width),
	                           {"Test residuals", "real - predicted (MW)", "density"}));
	chart("scatter.svg", svg::scatter_chart({{"test", real, predicted}},
	                                        {"Predicted against real demand", "real (MW)", "predicted (MW)"}, true));
	chart("errors_by_weekday.svg", svg::boxplot_chart(eval::group_errors(series, eval::GroupKey::weekday),
	                                                  {"Residuals by weekday", "weekday (0 = Monday)", "MW"}));
	chart("errors_by_hour.svg", svg::boxplot_chart(eval::group_errors(series, eval::GroupKey::hour),
	                                               {"Residuals by hour", "hour", "MW"}));

	const auto extrema = eval::extrema_timing(series);
	std::vector<double> day(extrema.days.size());
	std::vector<double> dt_max(extrema.days.size());
	std::vector<double> dt_min(extrema.days.size());
	for (std::size_t k = 0; k < extrema.days.size(); ++k) {
		day[k] = static_cast<double>(k);
		dt_max[k] = extrema.days[k].dt_max;
		dt_min[k] = extrema.days[k].dt_min;
	}
	chart("peak_timing.svg",
	      svg::scatter_chart({{"dt max", day, dt_max}}, {"Daily peak timing error", "day", "real - predicted (h)"}));
	chart("trough_timing.svg", svg::scatter_chart({{"dt min", day, dt_min}},
	                                              {"Daily trough timing error", "day", "real - predicted (h)"}));

	write_effective_config(ctx, out);
	if (fs::exists(ctx.layout.model() / "config.ini")) {
		fs::copy_file(ctx.layout.model() / "config.ini", out / "train_config.ini",
		              fs::copy_options::overwrite_existing);
	}
	ctx.out << fmt::format("report: {} CSVs, {} charts -> {}\n", copied, charts, out.string());
}

// ---- option table ----------------------------------------------------------

void add_options(CLI::App &app, Settings &s) {
	const auto opt = [&](const std::string &name, auto &value, const std::string &help, const std::string &group) {
		return app.add_option(name, value, help)->group(group);
	};

	opt("--workdir", s.workdir, "Directory holding every stage artifact", "Global")->envname("LOADCAST_WORKDIR");
	opt("--seed", s.seed, "Base seed for initialization, dropout, shuffling and forests", "Global");
	opt("--feature-set", s.feature_set, "Input features: full | paper-table2", "Global");
	opt("--accounting", s.accounting, "Sample accounting: default | paper", "Global");
	opt("--workers", s.workers, "Parallel workers for grids and forests", "Global");
	opt("--window", s.window, "Hours of history per sample", "Global");

	opt("--sources", s.sources, "Raw CSV directory (default <workdir>/raw)", "Sources");
	opt("--schema", s.schema, "JSON column-name mapping for the raw CSVs", "Sources");
	opt("--start", s.start, "First date to ingest, YYYY-MM-DD (default: first demand hour)", "Sources");
	opt("--end", s.end, "Last date to ingest, YYYY-MM-DD (default: last demand hour)", "Sources");
	opt("--days", s.days, "Days of synthetic data", "Sources");
	opt("--synthetic-seed", s.synthetic_seed, "Seed of the synthetic generator", "Sources");

	opt("--bounds", s.bounds, "Outlier bounds: global | daily", "Cleaning");

	opt("--architecture", s.architecture, "LSTM units per layer, e.g. 32x32", "Training");
	opt("--activation", s.activation, "sigmoid | tanh | relu | softmax | linear", "Training");
	opt("--optimizer", s.optimizer, "adam | sgd | rmsprop", "Training");
	opt("--learning-rate", s.learning_rate, "Initial learning rate", "Training");
	opt("--batch-size", s.batch_size, "Samples per gradient step", "Training");
	opt("--epochs", s.epochs, "Maximum epochs", "Training");
	opt("--early-stop-patience", s.early_stop_patience, "Epochs without improvement before stopping", "Training");
	opt("--plateau-patience", s.plateau_patience, "Epochs without improvement before reducing the rate", "Training");
	opt("--plateau-factor", s.plateau_factor, "Learning-rate multiplier on plateau", "Training");
	opt("--dropout", s.dropout, "Dropout rate on LSTM outputs", "Training");
	opt("--dropout-last-layer", s.dropout_last_layer, "Apply dropout after the last LSTM layer", "Training");
	opt("--shuffle", s.shuffle, "Shuffle sample order every epoch", "Training");

	opt("--checkpoint", s.checkpoint, "Checkpoint to evaluate (default <workdir>/model/checkpoint.bin)", "Evaluation");
	opt("--predictions", s.predictions, "Evaluate a timestamp,predicted CSV for the test split instead",
	    "Evaluation");
	opt("--bin-width", s.bin_width, "Residual histogram bin width in MW", "Evaluation");
	opt("--price", s.price, "Energy price per MWh for the cost of error", "Evaluation");

	opt("--architectures", s.architectures, "Comma list for grid-arch (default: the ten study architectures)",
	    "Experiments");
	opt("--hyper-architecture", s.hyper_architecture, "Architecture used by grid-hyper", "Experiments");
	opt("--activations", s.activations, "Comma list of grid-hyper activations", "Experiments");
	opt("--optimizers", s.optimizers, "Comma list of grid-hyper optimizers", "Experiments");
	opt("--batches", s.batches, "Comma list of grid-hyper batch sizes", "Experiments");
	opt("--seeds", s.seeds, "Runs in the seed study", "Experiments");
	opt("--resume", s.resume, "Skip cells already completed in the output directory", "Experiments");
	opt("--save-checkpoints", s.save_checkpoints, "Keep one checkpoint per cell", "Experiments");

	opt("--trees", s.trees, "Trees in the random forest", "Baseline");
	opt("--max-depth", s.max_depth, "Tree depth limit, 0 for none", "Baseline");
	opt("--min-leaf", s.min_leaf, "Minimum samples per leaf", "Baseline");
	opt("--feature-fraction", s.feature_fraction, "Fraction of features tried per split", "Baseline");
	opt("--bootstrap", s.bootstrap, "Resample rows per tree", "Baseline");

	opt("--acf-lags", s.acf_lags, "Autocorrelation lags", "Analysis");
	opt("--peaks", s.peaks, "Spectral peaks to list", "Analysis");
	opt("--mixture-bins", s.mixture_bins, "Histogram bins seeding the two-component mixture", "Analysis");
}

struct Command {
	std::string name;
	std::string help;
	std::function<int(Context &)> run;
};

std::vector<Command> commands() {
	const auto plain = [](void (*f)(Context &)) {
		return [f](Context &ctx) {
			f(ctx);
			return kExitOk;
		};
	};
	return {
	    {"generate-synthetic", "Write a synthetic raw-source fixture", plain(cmd_generate)},
	    {"ingest", "Merge raw sources onto the hourly grid", plain(cmd_ingest)},
	    {"preprocess", "Impute, flag and correct outliers, decompose wind", plain(cmd_preprocess)},
	    {"featurize", "Build features, split and window", plain(cmd_featurize)},
	    {"train", "Train one LSTM and save its checkpoint and trace", plain(cmd_train)},
	    {"evaluate", "Metrics, residuals, extrema timing and grouped errors", plain(cmd_evaluate)},
	    {"grid-arch", "Architecture study", cmd_grid_arch},
	    {"grid-hyper", "Activation x optimizer x batch study", cmd_grid_hyper},
	    {"seed-study", "Repeat one configuration over derived seeds", cmd_seed_study},
	    {"baseline-rf", "Random-forest baseline and feature importance", plain(cmd_baseline)},
	    {"analyze", "Spectrum, autocorrelation, temperature fits, bimodality", plain(cmd_analyze)},
	    {"report", "Collect CSVs and draw SVG charts", plain(cmd_report)},
	};
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
	Settings s;
	CLI::App app{"Hourly electricity-demand forecasting pipeline", "loadcast"};
	app.option_defaults()->always_capture_default();
	app.config_formatter(std::make_shared<SectionlessIni>());
	app.set_config("--config", "", "INI file; [sections] are optional and keys are the long option names");
	app.allow_config_extras(CLI::config_extras_mode::error);
	app.require_subcommand(1, 1);
	app.footer("Every long option is also a config-file key (e.g. `batch-size = 36`); command-line flags win.\n"
	           "Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.");
	add_options(app, s);

	const auto table = commands();
	std::map<std::string, const Command *> chosen;
	for (const auto &c : table) {
		auto *sub = app.add_subcommand(c.name, c.help);
		sub->fallthrough();
	}

	try {
		std::vector<std::string> reversed(args.rbegin(), args.rend());
		app.parse(reversed);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e, out, err);
		return code == 0 ? kExitOk : kExitUsage;
	}

	const CLI::App *sub = app.get_subcommands().front();
	const auto it = std::find_if(table.begin(), table.end(), [&](const Command &c) { return c.name == sub->get_name(); });

	try {
		validate(s, it->name);
		Context ctx{s, Layout{fs::path(s.workdir)}, out, err, app.config_to_str(true, false)};
		WorkdirLock lock(ctx.layout.root);
		return it->run(ctx);
	} catch (const UsageError &e) {
		err << "error: " << e.what() << '\n';
		return kExitUsage;
	} catch (const DataError &e) {
		err << "error: " << e.what() << '\n';
		return kExitData;
	} catch (const NumericError &e) {
		err << "error: " << e.what() << '\n';
		return kExitNumeric;
	} catch (const Error &e) {
		err << "error: " << e.what() << '\n';
		return kExitUsage;
	} catch (const fs::filesystem_error &e) {
		err << "error: " << e.what() << '\n';
		return kExitData;
	}
}

} // namespace loadcast::cli
