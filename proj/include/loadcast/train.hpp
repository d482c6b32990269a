#pragma once

#include "loadcast/error.hpp"
#include "loadcast/features.hpp"
#include "loadcast/nn.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loadcast::train {

enum class OptimizerKind { adam, sgd, rmsprop };

OptimizerKind parse_optimizer(std::string_view text);
std::string_view to_string(OptimizerKind kind);

struct OptimizerConstants {
	double beta1 = 0.9;
	double beta2 = 0.999;
	double epsilon = 1e-8;
	double rho = 0.9;
	double momentum = 0.0;
};

/// Per-parameter optimizer state over a flat parameter buffer.
class Optimizer {
public:
	Optimizer(OptimizerKind kind, std::size_t parameters, OptimizerConstants constants = {});

	void step(std::span<double> params, std::span<const double> grads, double lr);

	OptimizerKind kind() const { return kind_; }
	std::uint64_t steps() const { return steps_; }
	const OptimizerConstants &constants() const { return constants_; }

private:
	OptimizerKind kind_;
	OptimizerConstants constants_;
	std::uint64_t steps_ = 0;
	std::vector<double> first_;  ///< adam m, sgd velocity
	std::vector<double> second_; ///< adam v, rmsprop accumulator
};

/// Mean squared error over the batch.
double mse_loss(std::span<const double> predictions, std::span<const double> targets);

struct Gradients {
	std::vector<double> values; ///< same layout as LstmNetwork::parameters()
	double loss = 0.0;
};

/// Reverse-mode gradients of the batch-mean squared error through every step
/// and layer of a cached forward pass. Throws NumericError naming the first
/// non-finite parameter gradient.
Gradients bptt_gradients(const nn::LstmNetwork &network, std::span<const double> targets,
                         const nn::ForwardCache &cache);

struct TrainConfig {
	nn::Architecture architecture{{32, 32}};
	nn::Activation activation = nn::Activation::tanh;
	OptimizerKind optimizer = OptimizerKind::adam;
	double learning_rate = 0.001;
	std::size_t batch_size = 60;
	std::size_t max_epochs = 80;
	std::size_t early_stop_patience = 10;
	std::size_t plateau_patience = 5;
	double plateau_factor = 0.5;
	double dropout = 0.2;
	bool dropout_last_layer = true;
	bool shuffle = false;
	std::uint64_t seed = 0;

	/// Every violated constraint, empty when valid.
	std::vector<std::string> violations() const;
	/// Throws UsageError listing all violations.
	void validate() const;
};

struct EpochRecord {
	std::size_t epoch = 0; ///< 1-based
	double train_loss = 0.0;
	double val_loss = 0.0;
	double learning_rate = 0.0;
	double wall_seconds = 0.0;
};

struct TrainTrace {
	std::vector<EpochRecord> epochs;
	std::size_t best_epoch = 0; ///< index into epochs
	bool early_stopped = false;

	double best_val_loss() const { return epochs.at(best_epoch).val_loss; }
	/// epoch, train_loss, val_loss, lr (wall time is left out so traces compare bit-exactly).
	std::string to_csv() const;
	void write_csv(const std::filesystem::path &path) const;
};

/// Thrown when a loss turns non-finite; carries the epochs completed so far.
class DivergenceError : public NumericError {
public:
	DivergenceError(const std::string &message, TrainTrace trace)
	    : NumericError(message), trace_(std::move(trace)) {}
	const TrainTrace &trace() const { return trace_; }

private:
	TrainTrace trace_;
};

struct FitResult {
	nn::LstmNetwork network; ///< parameters from the best validation epoch
	TrainTrace trace;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

FitResult fit(const TrainConfig &config, const features::WindowedDataset &train_set,
              const features::WindowedDataset &val_set, const EpochCallback &on_epoch = {});

/// Inference-mode predictions on the normalized scale, in sample order.
std::vector<double> predict_all(const nn::LstmNetwork &network, const features::WindowedDataset &data,
                                std::size_t batch_size = 256);

/// Predictions mapped back to MW.
std::vector<double> predict_mw(const nn::LstmNetwork &network, const features::WindowedDataset &data);

/// Inference-mode MSE on the normalized scale.
double evaluate_loss(const nn::LstmNetwork &network, const features::WindowedDataset &data);

/// Training samples per trainable parameter.
double overfit_ratio(std::size_t train_samples, const nn::Architecture &architecture, std::size_t input_width);

/// JSON manifest for a checkpoint: architecture, activations, dropout,
/// optimizer settings, seed, feature order and normalization.
std::string checkpoint_manifest(const TrainConfig &config, const features::DatasetStorage &data);

} // namespace loadcast::train
