#include "gradcheck.hpp"
#include "support.hpp"

#include "loadcast/analysis.hpp"
#include "loadcast/baseline.hpp"
#include "loadcast/binary_io.hpp"
#include "loadcast/eval.hpp"
#include "loadcast/features.hpp"
#include "loadcast/harness.hpp"
#include "loadcast/ingest.hpp"
#include "loadcast/metrics.hpp"
#include "loadcast/nn.hpp"
#include "loadcast/preprocess.hpp"
#include "loadcast/random.hpp"
#include "loadcast/train.hpp"

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

using namespace loadcast;
namespace fs = std::filesystem;

namespace {

namespace tol {
constexpr double gradient = 1e-4;
constexpr double metric_relative = 1e-9;
constexpr double worked_example = 5e-5;
constexpr double sigma_rate_pp = 0.05;
constexpr double encoding_norm = 1e-12;
constexpr double encoding_period = 1e-9;
constexpr double synthetic_mase = 1.0;
constexpr double synthetic_r2 = 0.85;
constexpr double extrema_exact_pct = 60.0;
constexpr double extrema_within1_pct = 90.0;
constexpr double importance_sum = 1e-9;
constexpr double pearson_example = 1e-4;
} // namespace tol

struct Outcome {
	bool pass = false;
	std::string detail;
};

class Checker {
public:
	void run(int id, const std::string &title, const std::function<Outcome()> &check) {
		const auto t0 = std::chrono::steady_clock::now();
		Outcome o;
		try {
			o = check();
		} catch (const std::exception &e) {
			o = {false, fmt::format("exception: {}", e.what())};
		}
		const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
		fmt::print("{} criterion {:>2}: {} ({}; {:.1f} s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail, secs);
		std::fflush(stdout);
		failures_ += o.pass ? 0 : 1;
	}

	void skip(int id, const std::string &title, const std::string &why) {
		fmt::print("SKIP criterion {:>2}: {} ({})\n", id, title, why);
	}

	int failures() const { return failures_; }

private:
	int failures_ = 0;
};

bool near_rel(double a, double b, double rel) { return std::fabs(a - b) <= rel * std::max(1.0, std::fabs(b)); }

Outcome parameter_counts() {
	struct Row {
		const char *arch;
		std::uint64_t params;
		double risk;
	};
	const std::vector<Row> rows{
	    {"32x32", 14369, 3.4},      {"64x64", 53313, 0.9},       {"128x128", 204929, 0.2},
	    {"32x32x32", 22689, 2.2},   {"64x64x64", 86337, 0.6},    {"128x128x128", 336513, 0.1},
	    {"32x32x32x32", 31009, 1.6}, {"64x64x64x64", 119361, 0.4}, {"128x128x128x128", 468097, 0.1},
	    {"64x128x128x64", 300097, 0.2},
	};
	std::size_t ok = 0;
	std::string bad;
	for (const auto &r : rows) {
		const auto arch = nn::Architecture::parse(r.arch);
		const auto n = nn::count_parameters(arch, 14);
		const double risk = std::round(10.0 * train::overfit_ratio(49056, arch, 14)) / 10.0;
		if (n == r.params && risk == r.risk) {
			++ok;
		} else {
			bad += fmt::format(" {}: {} / {:.1f}", r.arch, n, risk);
		}
	}
	return {ok == rows.size(), fmt::format("{}/{} architectures exact{}", ok, rows.size(), bad)};
}

Outcome gradients() {
	double worst = 0;
	constexpr std::uint64_t instances = 24;
	for (std::uint64_t seed = 1; seed <= instances; ++seed) {
		auto t = test_support::tiny_instance(seed);
		worst = std::max(worst, test_support::gradcheck(t.net, t.batch(), t.targets, t.masks).max_relative_error);
	}
	return {worst < tol::gradient, fmt::format("{} instances, max relative error {:.2e} < {:.0e}", instances, worst,
	                                           tol::gradient)};
}

Outcome metric_oracle() {
	Rng rng(11);
	std::size_t mismatches = 0;
	for (int trial = 0; trial < 1000; ++trial) {
		const std::size_t n = 2 + rng.below(100);
		std::vector<double> y(n), p(n);
		for (std::size_t k = 0; k < n; ++k) {
			y[k] = rng.uniform(100.0, 2000.0);
			p[k] = y[k] + rng.normal() * 50.0;
		}
		const double cnt = static_cast<double>(n);
		double se = 0, ae = 0, ape = 0, sy = 0, mean = 0, tot = 0, naive = 0;
		for (const double v : y) {
			mean += v / cnt;
		}
		for (std::size_t k = 0; k < n; ++k) {
			const double e = y[k] - p[k];
			se += e * e;
			ae += std::fabs(e);
			ape += std::fabs(e) / y[k];
			sy += y[k];
			tot += (y[k] - mean) * (y[k] - mean);
			naive += k > 0 ? std::fabs(y[k] - y[k - 1]) : 0.0;
		}
		const auto r = metrics::compute_all(y, p);
		const bool ok = near_rel(r.mse, se / cnt, tol::metric_relative) &&
		                near_rel(r.mae, ae / cnt, tol::metric_relative) &&
		                near_rel(r.rmse, std::sqrt(se / cnt), tol::metric_relative) &&
		                near_rel(*r.r2, 1 - se / tot, tol::metric_relative) &&
		                near_rel(*r.mape, 100 * ape / cnt, tol::metric_relative) &&
		                near_rel(*r.wape, 100 * ae / sy, tol::metric_relative) &&
		                near_rel(*r.mase, (ae / cnt) / (naive / (cnt - 1)), tol::metric_relative);
		mismatches += ok ? 0 : 1;
	}
	const auto w = metrics::compute_all(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2});
	const bool worked = std::fabs(w.mse - 2.0 / 3) < tol::worked_example &&
	                    std::fabs(w.mae - 2.0 / 3) < tol::worked_example &&
	                    std::fabs(w.rmse - 0.8165) < tol::worked_example && std::fabs(*w.r2) < tol::worked_example &&
	                    std::fabs(*w.mape - 27.78) < 5e-3 && std::fabs(*w.wape - 33.33) < 5e-3 &&
	                    std::fabs(*w.mase - 2.0 / 3) < tol::worked_example;
	return {mismatches == 0 && worked,
	        fmt::format("{} of 1000 pairs differ beyond {:.0e}; worked example {}", mismatches, tol::metric_relative,
	                    worked ? "matches" : "differs")};
}

Outcome cleaning() {
	const auto linear = preprocess::impute_gaps({10.0, std::nullopt, std::nullopt, 16.0}).values;
	const auto four = preprocess::impute_gaps({0.0, std::nullopt, std::nullopt, std::nullopt, std::nullopt, 5.0}).values;
	preprocess::OptionalSeries daily(72);
	for (std::size_t i = 0; i < daily.size(); ++i) {
		daily[i] = 100.0 * static_cast<double>(i / 24) + static_cast<double>(i % 24);
	}
	for (std::size_t h = 30; h < 40; ++h) {
		daily[h] = std::nullopt;
	}
	const auto filled = preprocess::impute_gaps(daily).values;
	bool day_ok = true;
	for (std::size_t h = 30; h < 40; ++h) {
		day_ok = day_ok && filled[h] == 100.0 + static_cast<double>(h % 24);
	}
	const bool hand = linear == std::vector<double>{10, 12, 14, 16} && four == std::vector<double>{0, 1, 2, 3, 4, 5} &&
	                  day_ok;

	Rng rng(2024);
	std::vector<double> x(1000000);
	for (auto &v : x) {
		v = rng.normal();
	}
	const double pct = 100.0 * static_cast<double>(preprocess::detect_outliers(x).flagged) / static_cast<double>(x.size());
	const bool rate = std::fabs(pct - 0.27) <= tol::sigma_rate_pp;
	return {hand && rate, fmt::format("hand imputations {}; 3-sigma flags {:.3f}% (0.27 +/- {})",
	                                  hand ? "exact" : "differ", pct, tol::sigma_rate_pp)};
}

Outcome encoding() {
	Rng rng(5);
	double norm_err = 0, period_err = 0;
	for (int k = 0; k < 10000; ++k) {
		const double t = std::floor(rng.uniform(0, 70000));
		const auto e = features::encode_time(t);
		for (const auto &[s, c] : {std::pair{e.day_sin, e.day_cos}, std::pair{e.week_sin, e.week_cos},
		                           std::pair{e.year_sin, e.year_cos}}) {
			norm_err = std::max(norm_err, std::fabs(s * s + c * c - 1.0));
		}
		const auto d = features::encode_time(t + features::kDayPeriod);
		const auto w = features::encode_time(t + features::kWeekPeriod);
		const auto y = features::encode_time(t + features::kYearPeriod);
		period_err = std::max({period_err, std::fabs(d.day_sin - e.day_sin), std::fabs(d.day_cos - e.day_cos),
		                       std::fabs(w.week_sin - e.week_sin), std::fabs(w.week_cos - e.week_cos),
		                       std::fabs(y.year_sin - e.year_sin), std::fabs(y.year_cos - e.year_cos)});
	}
	return {norm_err <= tol::encoding_norm && period_err <= tol::encoding_period,
	        fmt::format("max |sin^2+cos^2-1| {:.1e}, max period drift {:.1e}", norm_err, period_err)};
}

train::TrainConfig synthetic_config() {
	train::TrainConfig c;
	c.architecture = nn::Architecture::parse("16x16");
	c.activation = nn::Activation::tanh;
	c.optimizer = train::OptimizerKind::adam;
	c.learning_rate = 0.01;
	c.batch_size = 16;
	c.max_epochs = 30;
	c.dropout = 0.0;
	c.shuffle = true;
	c.seed = 1;
	return c;
}

Outcome end_to_end() {
	const auto ds = test_support::synthetic_dataset(180, 7);
	const auto fitted = train::fit(synthetic_config(), ds.train(), ds.val());
	const auto test = ds.test();
	const auto predicted = train::predict_mw(fitted.network, test);
	std::vector<double> real(test.size());
	for (std::size_t k = 0; k < test.size(); ++k) {
		real[k] = test.target_mw(k);
	}
	const auto m = metrics::compute_all(real, predicted);
	const auto ex = eval::extrema_timing(eval::make_residuals(test, predicted));
	const bool pass = m.mase && *m.mase < tol::synthetic_mase && m.r2 && *m.r2 > tol::synthetic_r2 &&
	                  ex.max_exact_pct >= tol::extrema_exact_pct && ex.min_exact_pct >= tol::extrema_exact_pct &&
	                  ex.max_within1_pct >= tol::extrema_within1_pct && ex.min_within1_pct >= tol::extrema_within1_pct;
	return {pass, fmt::format("{} epochs; MASE {:.3f}, R2 {:.3f}; peak exact {:.1f}% within1 {:.1f}%; "
	                          "trough exact {:.1f}% within1 {:.1f}% over {} days",
	                          fitted.trace.epochs.size(), m.mase.value_or(NAN), m.r2.value_or(NAN), ex.max_exact_pct,
	                          ex.max_within1_pct, ex.min_exact_pct, ex.min_within1_pct, ex.days.size())};
}

Outcome determinism() {
	test_support::TempDir dir("acceptance-determinism");
	const auto ds = test_support::synthetic_dataset(40, 3);
	auto cfg = synthetic_config();
	cfg.architecture = nn::Architecture::parse("6x4");
	cfg.max_epochs = 4;
	cfg.dropout = 0.2;
	for (const char *run : {"a", "b"}) {
		const auto fitted = train::fit(cfg, ds.train(), ds.val());
		nn::save_checkpoint(fitted.network, dir.path() / fmt::format("{}.bin", run),
		                    train::checkpoint_manifest(cfg, ds.storage()));
		fitted.trace.write_csv(dir.path() / fmt::format("{}-trace.csv", run));
	}
	const auto same = [&](const fs::path &a, const fs::path &b) { return io::read_text(a) == io::read_text(b); };
	bool single = same(dir.path() / "a.bin", dir.path() / "b.bin") &&
	              same(dir.path() / "a.bin.json", dir.path() / "b.bin.json") &&
	              same(dir.path() / "a-trace.csv", dir.path() / "b-trace.csv");

	const auto plan = harness::architecture_plan(cfg, 9,
	                                             {nn::Architecture::parse("4"), nn::Architecture::parse("6x4"),
	                                              nn::Architecture::parse("8"), nn::Architecture::parse("3x3")});
	for (const std::size_t workers : {1u, 4u}) {
		harness::RunOptions o;
		o.out_dir = dir.path() / fmt::format("w{}", workers);
		o.workers = workers;
		harness::run_plan(plan, ds, o);
	}
	bool grid = same(dir.path() / "w1" / "results.csv", dir.path() / "w4" / "results.csv") &&
	            same(dir.path() / "w1" / "plan.csv", dir.path() / "w4" / "plan.csv");
	for (const auto &c : plan.cells) {
		for (const char *file : {"checkpoint.bin", "trace.csv"}) {
			grid = grid && same(dir.path() / "w1" / "cells" / c.id / file, dir.path() / "w4" / "cells" / c.id / file);
		}
	}
	return {single && grid, fmt::format("repeat run {}; workers 1 vs 4 over {} cells {}",
	                                    single ? "byte-identical" : "differs", plan.cells.size(),
	                                    grid ? "byte-identical" : "differs")};
}

Outcome economics() {
	const double cost = eval::cost_of_error(284, 24, 54);
	return {cost == 368064.0, fmt::format("cost_of_error(284, 24, 54) = {:.0f}", cost)};
}

Outcome forest() {
	Rng rng(1);
	baseline::FlatData d;
	d.width = 6;
	for (std::size_t c = 0; c < d.width; ++c) {
		d.names.push_back(fmt::format("x{}", c));
	}
	for (int r = 0; r < 500; ++r) {
		double target = 0;
		for (std::size_t c = 0; c < d.width; ++c) {
			const double v = rng.uniform(-1, 1);
			d.x.push_back(v);
			target += c == 4 ? 5.0 * v : 0.0;
		}
		d.y.push_back(target + 0.05 * rng.normal());
	}
	baseline::ForestConfig cfg;
	cfg.trees = 50;
	cfg.seed = 2;
	const auto model = baseline::fit_forest(d, cfg);
	const auto report = baseline::importance_report(model, d);
	const double sum = std::accumulate(model.importance.begin(), model.importance.end(), 0.0);
	const double rho = *baseline::pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4});
	const bool pass = report.front().feature == "x4" && std::fabs(sum - 1.0) <= tol::importance_sum &&
	                  std::fabs(rho - 0.9820) <= tol::pearson_example;
	return {pass, fmt::format("top feature {} (MDI {:.3f}), importance sum {:.12f}, pearson {:.4f}",
	                          report.front().feature, report.front().mdi, sum, rho)};
}

struct RealData {
	explicit RealData(const fs::path &dir) {
		const DateSpan span{parse_date("2018-01-01"), parse_date("2024-12-31")};
		const char *schema = std::getenv("LOADCAST_REAL_SCHEMA");
		const auto schemas = schema ? ingest::load_schemas(schema) : ingest::SourceSchemas{};
		clean = preprocess::clean_table(ingest::ingest_sources(ingest::SourcePaths::in_directory(dir), span, schemas));
	}
	preprocess::CleanResult clean;
};

Outcome real_bounds(const RealData &data) {
	const auto &demand = data.clean.report.row(col::demand);
	const auto &temp = data.clean.report.row(col::temp);
	const bool pass = std::fabs(demand.lower - 434) <= 1 && std::fabs(demand.upper - 1880) <= 1 &&
	                  std::fabs(temp.stats.mean - 17.44) <= 0.01 && std::fabs(temp.stats.sd - 7.81) <= 0.01;
	return {pass, fmt::format("demand bounds {:.1f} / {:.1f} MW (434 / 1880 +/- 1); temp mean {:.3f}, sd {:.3f} "
	                          "(17.44 / 7.81 +/- 0.01)",
	                          demand.lower, demand.upper, temp.stats.mean, temp.stats.sd)};
}

Outcome real_minima(const RealData &data) {
	const auto &t = data.clean.table.column(col::temp).values;
	const auto &d = data.clean.table.column(col::demand).values;
	std::array<double, 2> found{NAN, NAN};
	for (const int degree : {2, 3}) {
		for (const auto &p : analysis::fit_poly(t, d, degree).stationary_points) {
			if (p.minimum) {
				found[static_cast<std::size_t>(degree - 2)] = p.x;
			}
		}
	}
	const bool pass = std::fabs(found[0] - 13.88) <= 0.3 && std::fabs(found[1] - 15.77) <= 0.3;
	return {pass, fmt::format("quadratic minimum {:.2f} C (13.88 +/- 0.3), cubic minimum {:.2f} C (15.77 +/- 0.3)",
	                          found[0], found[1])};
}

features::Dataset real_dataset(const RealData &data) {
	return features::split_and_window(features::build_frame(data.clean.table, features::FeatureSet::full), 24);
}

Outcome real_lstm(const RealData &data) {
	const auto ds = real_dataset(data);
	train::TrainConfig c;
	c.architecture = nn::Architecture::parse("64x128x128x64");
	c.activation = nn::Activation::sigmoid;
	c.optimizer = train::OptimizerKind::adam;
	c.batch_size = 60;
	c.seed = 1;
	const auto t0 = std::chrono::steady_clock::now();
	const auto fitted = train::fit(c, ds.train(), ds.val());
	const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
	const auto m = harness::evaluate_splits(fitted.network, ds)[0];
	const bool pass = m.mape && *m.mape <= 4.9 && m.r2 && *m.r2 >= 0.90;
	return {pass, fmt::format("test MAPE {:.3f}% (<= 4.9), R2 {:.4f} (>= 0.90), training {:.0f} s",
	                          m.mape.value_or(NAN), m.r2.value_or(NAN), secs)};
}

Outcome real_forest(const RealData &data) {
	const auto ds = real_dataset(data);
	const auto train_rows = baseline::flat_rows(ds.train());
	const auto test_rows = baseline::flat_rows(ds.test());
	baseline::ForestConfig cfg;
	cfg.seed = 1;
	const auto model = baseline::fit_forest(train_rows, cfg);
	const auto m = metrics::compute_all(test_rows.y, model.predict_all(test_rows));
	const auto report = baseline::importance_report(model, train_rows);
	const bool pass = m.r2 && *m.r2 >= 0.88 && report.front().feature == col::demand;
	return {pass, fmt::format("test R2 {:.4f} (>= 0.88); top feature {} (MDI {:.3f})", m.r2.value_or(NAN),
	                          report.front().feature, report.front().mdi)};
}

} // namespace

int main() {
	Checker check;
	check.run(1, "parameter counts and overfitting ratios", parameter_counts);
	check.run(2, "BPTT gradients vs central differences", gradients);
	check.run(3, "metric oracle and worked example", metric_oracle);
	check.run(4, "imputation and 3-sigma flagging", cleaning);
	check.run(5, "cyclic time encoding", encoding);
	check.run(6, "end-to-end synthetic forecast", end_to_end);
	check.run(7, "determinism across runs and worker counts", determinism);
	check.run(8, "cost of error", economics);
	check.run(9, "random-forest importance and correlation", forest);

	const char *real = std::getenv("LOADCAST_REAL_DATA");
	if (real == nullptr) {
		const std::string why = "set LOADCAST_REAL_DATA to the directory of real raw sources";
		check.skip(10, "optimized LSTM on real data", why);
		check.skip(11, "random-forest baseline on real data", why);
		check.skip(12, "outlier bounds and temperature statistics on real data", why);
		check.skip(13, "demand-temperature minima on real data", why);
	} else {
		const RealData data(real);
		check.run(12, "outlier bounds and temperature statistics on real data", [&] { return real_bounds(data); });
		check.run(13, "demand-temperature minima on real data", [&] { return real_minima(data); });
		if (std::getenv("LOADCAST_REAL_DATA_LONG") != nullptr) {
			check.run(10, "optimized LSTM on real data", [&] { return real_lstm(data); });
			check.run(11, "random-forest baseline on real data", [&] { return real_forest(data); });
		} else {
			const std::string why = "runs for hours; set LOADCAST_REAL_DATA_LONG=1";
			check.skip(10, "optimized LSTM on real data", why);
			check.skip(11, "random-forest baseline on real data", why);
		}
	}

	fmt::print("{} criteria failed\n", check.failures());
	return check.failures() == 0 ? 0 : 1;
}
