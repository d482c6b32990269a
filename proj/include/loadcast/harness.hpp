#pragma once

#include "loadcast/features.hpp"
#include "loadcast/metrics.hpp"
#include "loadcast/train.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace loadcast::harness {

struct Cell {
	std::string id;
	train::TrainConfig config; ///< config.seed is the derived cell seed
};

struct ExperimentPlan {
	std::string name;
	std::uint64_t base_seed = 0;
	std::vector<Cell> cells;

	/// Throws UsageError on duplicate cell ids.
	void validate() const;
	std::string to_csv() const;
};

/// Reproducible per-cell seed from the base seed and the cell id.
std::uint64_t cell_seed(std::uint64_t base_seed, const std::string &cell_id);

/// The ten architectures of the study, smallest first.
std::vector<nn::Architecture> study_architectures();

/// One cell per architecture with dropout 0.2 and otherwise `base` settings.
ExperimentPlan architecture_plan(const train::TrainConfig &base, std::uint64_t base_seed,
                                 const std::vector<nn::Architecture> &architectures = study_architectures());

struct HyperGrid {
	std::vector<nn::Activation> activations{nn::Activation::tanh, nn::Activation::relu, nn::Activation::softmax,
	                                        nn::Activation::sigmoid};
	std::vector<train::OptimizerKind> optimizers{train::OptimizerKind::adam, train::OptimizerKind::sgd,
	                                             train::OptimizerKind::rmsprop};
	std::vector<std::size_t> batches{12, 24, 36, 48, 60, 72};
};

/// Full cross of activations x optimizers x batch sizes on base.architecture.
ExperimentPlan hyper_plan(const train::TrainConfig &base, std::uint64_t base_seed, const HyperGrid &grid = {});

/// `count` cells that differ only in their seed.
ExperimentPlan seed_plan(const train::TrainConfig &base, std::uint64_t base_seed, std::size_t count);

inline constexpr std::array<features::Split, 3> kReportSplits{features::Split::test, features::Split::val,
                                                              features::Split::train};

struct CellResult {
	std::string id;
	std::uint64_t seed = 0;
	bool ok = false;
	std::string error;
	std::array<metrics::MetricsReport, 3> reports; ///< test, val, train
	std::size_t best_epoch = 0;                    ///< 1-based
	std::size_t epochs = 0;
	double wall_seconds = 0.0;
	bool resumed = false;
};

/// Metrics on the MW scale for test, val and train.
std::array<metrics::MetricsReport, 3> evaluate_splits(const nn::LstmNetwork &network,
                                                      const features::Dataset &dataset);

struct RunOptions {
	std::filesystem::path out_dir; ///< empty: nothing is written
	std::size_t workers = 1;
	bool resume = true;
	bool save_checkpoints = true;
	std::function<void(const std::string &)> log;
};

struct GridResult {
	std::vector<CellResult> cells; ///< plan order

	std::size_t failed() const;
	/// Completed cells ordered by test MSE (ties keep plan order).
	std::vector<const CellResult *> ranked_by_test_mse() const;
};

/// Runs every cell (in parallel up to `workers`), writing per-cell artifacts
/// under out_dir/cells/<id>/ and the merged CSVs under out_dir. Failed cells
/// are recorded and the remaining cells still run.
GridResult run_plan(const ExperimentPlan &plan, const features::Dataset &dataset, const RunOptions &options);

/// cell, architecture, activation, optimizer, batch, seed, subset, metrics..., best_epoch, status.
std::string results_csv(const ExperimentPlan &plan, const GridResult &result);
std::string timings_csv(const GridResult &result);
std::string ranking_csv(const ExperimentPlan &plan, const GridResult &result);
std::string architectures_csv(const ExperimentPlan &plan, std::size_t train_samples, std::size_t input_width);

struct SeedAggregate {
	std::size_t completed = 0;
	std::size_t failed = 0;
	const CellResult *best = nullptr; ///< lowest test MAPE, ties to highest R2
	metrics::MetricsReport mean;
	metrics::MetricsReport sd; ///< sample standard deviation, 0 for a single seed
};

SeedAggregate aggregate_seeds(const GridResult &result);
std::string seeds_csv(const GridResult &result);
std::string aggregate_csv(const SeedAggregate &aggregate);

} // namespace loadcast::harness
