#pragma once

#include "loadcast/random.hpp"

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loadcast::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

enum class Activation { sigmoid, tanh, relu, softmax, linear };

Activation parse_activation(std::string_view text);
std::string_view to_string(Activation activation);

/// Elementwise activation; softmax is not elementwise and throws here.
double activate(Activation activation, double x);
/// d activate / dx at pre-activation x (elementwise kinds only).
double derivative(Activation activation, double x);

/// In-place activation of every column (softmax normalizes each column).
void activate_columns(Activation activation, Eigen::Ref<Eigen::MatrixXd> values);

/// Gradient with respect to the pre-activation given the activation output `y`
/// and the upstream gradient `dy` (columns are independent samples).
Eigen::MatrixXd activation_backward(Activation activation, const Eigen::MatrixXd &y, const Eigen::MatrixXd &dy);

/// Hidden units per stacked LSTM layer, written "64x128x128x64".
struct Architecture {
	std::vector<std::size_t> units;

	/// Throws UsageError on empty strings and zero-width layers.
	static Architecture parse(std::string_view text);
	std::string str() const;
	bool operator==(const Architecture &) const = default;
};

struct NetworkOptions {
	Activation cell_activation = Activation::tanh;  ///< candidate g and the h = o * act(c) squash
	Activation dense_activation = Activation::tanh; ///< output neuron
	double dropout = 0.0;                           ///< applied to each LSTM layer's output sequence
	bool dropout_last_layer = true;
};

/// Read-only view of one layer. W stacks the four gate matrices in the
/// order f, i, g, o; each gate block is units x (units + inputs) acting on [h_prev, x].
struct LayerParams {
	ConstMatrixMap W;
	ConstVectorMap b;
	std::size_t inputs;
	std::size_t units;

	auto W_f() const { return W.topRows(units); }
	auto W_i() const { return W.middleRows(units, units); }
	auto W_g() const { return W.middleRows(2 * units, units); }
	auto W_o() const { return W.bottomRows(units); }
};

/// Stacked LSTM with a single-neuron dense head.
///
/// All parameters live in one flat buffer: for each layer the row-major stacked
/// W = [W_f; W_i; W_g; W_o] followed by b = [b_f; b_i; b_g; b_o], then the dense
/// weights and the dense bias. Optimizers and checkpoints use this buffer as is.
class LstmNetwork {
public:
	LstmNetwork() = default;
	/// Zero-initialized parameters.
	LstmNetwork(Architecture architecture, std::size_t input_width, NetworkOptions options = {});

	/// Glorot-uniform weights, zero biases except forget gate = 1.
	static LstmNetwork initialize(const Architecture &architecture, std::size_t input_width, std::uint64_t seed,
	                              NetworkOptions options = {});

	const Architecture &architecture() const { return architecture_; }
	const NetworkOptions &options() const { return options_; }
	NetworkOptions &options() { return options_; }
	std::size_t input_width() const { return input_width_; }
	std::size_t layers() const { return architecture_.units.size(); }
	std::size_t units(std::size_t layer) const { return architecture_.units[layer]; }
	std::size_t layer_inputs(std::size_t layer) const { return layer == 0 ? input_width_ : units(layer - 1); }

	std::size_t parameter_count() const { return params_.size(); }
	std::span<double> parameters() { return params_; }
	std::span<const double> parameters() const { return params_; }

	LayerParams layer(std::size_t k) const;
	std::size_t weight_offset(std::size_t k) const { return offsets_[k]; }
	std::size_t bias_offset(std::size_t k) const;
	std::size_t dense_offset() const { return offsets_.back(); }
	std::span<const double> dense_weights() const;
	double dense_bias() const { return params_.back(); }

	/// Human-readable name of a flat parameter index, e.g. "layer2.W_o[3,7]".
	std::string parameter_name(std::size_t index) const;

	bool dropout_applies(std::size_t layer) const;

private:
	Architecture architecture_;
	std::size_t input_width_ = 0;
	NetworkOptions options_;
	std::vector<std::size_t> offsets_; ///< per-layer weight offset, then the dense offset
	std::vector<double> params_;
};

/// Σ over layers 4·(n·(m+n) + n) plus the dense n_last + 1.
std::uint64_t count_parameters(const Architecture &architecture, std::size_t input_width);

struct CellState {
	Eigen::VectorXd h;
	Eigen::VectorXd c;
};

/// One time step of one layer. Throws NumericError naming the gate on non-finite values.
CellState cell_step(const LayerParams &params, const Eigen::VectorXd &x, const CellState &prev,
                    Activation cell_activation = Activation::tanh);

/// A batch of equally shaped windows (steps x width, time-major).
struct SequenceBatch {
	std::size_t steps = 0;
	std::size_t width = 0;
	std::vector<std::span<const double>> windows;

	std::size_t size() const { return windows.size(); }
};

enum class Mode { train, infer };

/// Per layer, per time step: units x batch matrices holding 0 or 1/keep.
/// Layers without dropout have no entries.
struct DropoutMasks {
	std::vector<std::vector<Eigen::MatrixXd>> layers;
	bool empty() const;
};

/// Draws masks for every layer that applies dropout.
DropoutMasks sample_masks(const LstmNetwork &network, std::size_t steps, std::size_t batch, Rng &rng);

/// Everything the backward pass needs. Columns are batch samples.
struct LayerTrace {
	std::vector<Eigen::MatrixXd> hx;    ///< [h_prev; x] per step
	std::vector<Eigen::MatrixXd> gates; ///< post-activation [f; i; g; o] per step
	std::vector<Eigen::MatrixXd> c;     ///< cell state per step
	std::vector<Eigen::MatrixXd> act_c; ///< act(c) per step
	std::vector<Eigen::MatrixXd> out;   ///< h after dropout per step (next layer input)
};

struct ForwardCache {
	std::vector<LayerTrace> layers;
	DropoutMasks masks;
	Eigen::MatrixXd dense_input; ///< last layer output at the final step
	Eigen::RowVectorXd output;   ///< predictions
};

/// Infer mode applies no mask and no scaling; train mode draws masks from `rng`.
ForwardCache forward(const LstmNetwork &network, const SequenceBatch &batch, Mode mode, Rng *rng = nullptr);

/// Forward pass with explicit masks (used for gradient checks).
ForwardCache forward(const LstmNetwork &network, const SequenceBatch &batch, const DropoutMasks &masks);

/// Inference on a single window.
double predict(const LstmNetwork &network, std::span<const double> window, std::size_t steps);

/// Binary checkpoint: magic "LSTMCKPT1", shape header, then the flat parameter
/// buffer as little-endian f64. `manifest_json` is written to `path` + ".json".
void save_checkpoint(const LstmNetwork &network, const std::filesystem::path &path,
                     const std::string &manifest_json = "{}\n");
LstmNetwork load_checkpoint(const std::filesystem::path &path);

} // namespace loadcast::nn
