#include "loadcast/nn.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/error.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>

namespace loadcast::nn {

namespace {

constexpr std::string_view kCheckpointMagic = "LSTMCKPT1";

double sigmoid(double x) {
	return 1.0 / (1.0 + std::exp(-x));
}

void sigmoid_rows(Eigen::Ref<Eigen::MatrixXd> block) {
	block = block.unaryExpr([](double v) { return sigmoid(v); });
}

void check_finite(const Eigen::MatrixXd &values, std::size_t layer, std::size_t step, const char *what) {
	if (!values.allFinite()) {
		throw NumericError(fmt::format("non-finite {} in layer {} at step {}", what, layer + 1, step));
	}
}

std::vector<Eigen::MatrixXd> batch_inputs(const SequenceBatch &batch) {
	for (const auto &w : batch.windows) {
		if (w.size() != batch.steps * batch.width) {
			throw DataError(fmt::format("window holds {} values, expected {} x {}", w.size(), batch.steps,
			                            batch.width));
		}
	}
	std::vector<Eigen::MatrixXd> xs(batch.steps, Eigen::MatrixXd(batch.width, batch.size()));
	for (std::size_t b = 0; b < batch.size(); ++b) {
		const double *src = batch.windows[b].data();
		for (std::size_t t = 0; t < batch.steps; ++t) {
			for (std::size_t f = 0; f < batch.width; ++f) {
				xs[t](static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(b)) = src[t * batch.width + f];
			}
		}
	}
	return xs;
}

ForwardCache run_forward(const LstmNetwork &net, const SequenceBatch &batch, const DropoutMasks *masks) {
	if (batch.width != net.input_width()) {
		throw DataError(fmt::format("batch width {} does not match network input width {}", batch.width,
		                            net.input_width()));
	}
	if (batch.steps == 0 || batch.size() == 0) {
		throw DataError("empty batch");
	}
	const auto B = static_cast<Eigen::Index>(batch.size());
	const auto act = net.options().cell_activation;

	ForwardCache cache;
	if (masks != nullptr) {
		cache.masks = *masks;
	}
	cache.layers.resize(net.layers());
	std::vector<Eigen::MatrixXd> inputs = batch_inputs(batch);

	for (std::size_t l = 0; l < net.layers(); ++l) {
		const auto p = net.layer(l);
		const auto n = static_cast<Eigen::Index>(p.units);
		const auto m = static_cast<Eigen::Index>(p.inputs);
		auto &trace = cache.layers[l];
		trace.hx.reserve(batch.steps);
		trace.gates.reserve(batch.steps);
		trace.c.reserve(batch.steps);
		trace.act_c.reserve(batch.steps);
		trace.out.reserve(batch.steps);
		const bool masked = masks != nullptr && l < masks->layers.size() && !masks->layers[l].empty();

		Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, B);
		Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, B);
		for (std::size_t t = 0; t < batch.steps; ++t) {
			Eigen::MatrixXd hx(n + m, B);
			hx.topRows(n) = h;
			hx.bottomRows(m) = inputs[t];
			Eigen::MatrixXd z = p.W * hx;
			z.colwise() += p.b;
			sigmoid_rows(z.topRows(n));
			sigmoid_rows(z.middleRows(n, n));
			activate_columns(act, z.middleRows(2 * n, n));
			sigmoid_rows(z.bottomRows(n));
			check_finite(z, l, t, "gate activation");

			c = z.topRows(n).cwiseProduct(c) + z.middleRows(n, n).cwiseProduct(z.middleRows(2 * n, n));
			check_finite(c, l, t, "cell state");
			Eigen::MatrixXd ac = c;
			activate_columns(act, ac);
			h = z.bottomRows(n).cwiseProduct(ac);

			Eigen::MatrixXd out = masked ? Eigen::MatrixXd(h.cwiseProduct(masks->layers[l][t])) : h;
			trace.hx.push_back(std::move(hx));
			trace.gates.push_back(std::move(z));
			trace.c.push_back(c);
			trace.act_c.push_back(std::move(ac));
			trace.out.push_back(std::move(out));
		}
		inputs = trace.out;
	}

	cache.dense_input = cache.layers.back().out.back();
	const auto w = net.dense_weights();
	const ConstVectorMap wv(w.data(), static_cast<Eigen::Index>(w.size()));
	Eigen::MatrixXd z = (wv.transpose() * cache.dense_input).array() + net.dense_bias();
	activate_columns(net.options().dense_activation, z);
	if (!z.allFinite()) {
		throw NumericError("non-finite dense output");
	}
	cache.output = z.row(0);
	return cache;
}

} // namespace

Activation parse_activation(std::string_view text) {
	if (text == "sigmoid") {
		return Activation::sigmoid;
	}
	if (text == "tanh") {
		return Activation::tanh;
	}
	if (text == "relu") {
		return Activation::relu;
	}
	if (text == "softmax") {
		return Activation::softmax;
	}
	if (text == "linear") {
		return Activation::linear;
	}
	throw UsageError(fmt::format("unknown activation '{}'", text));
}

std::string_view to_string(Activation activation) {
	switch (activation) {
	case Activation::sigmoid:
		return "sigmoid";
	case Activation::tanh:
		return "tanh";
	case Activation::relu:
		return "relu";
	case Activation::softmax:
		return "softmax";
	case Activation::linear:
		return "linear";
	}
	return "?";
}

double activate(Activation activation, double x) {
	switch (activation) {
	case Activation::sigmoid:
		return sigmoid(x);
	case Activation::tanh:
		return std::tanh(x);
	case Activation::relu:
		return x > 0.0 ? x : 0.0;
	case Activation::linear:
		return x;
	case Activation::softmax:
		break;
	}
	throw Error("softmax is a vector activation");
}

double derivative(Activation activation, double x) {
	switch (activation) {
	case Activation::sigmoid: {
		const double s = sigmoid(x);
		return s * (1.0 - s);
	}
	case Activation::tanh: {
		const double t = std::tanh(x);
		return 1.0 - t * t;
	}
	case Activation::relu:
		return x > 0.0 ? 1.0 : 0.0;
	case Activation::linear:
		return 1.0;
	case Activation::softmax:
		break;
	}
	throw Error("softmax is a vector activation");
}

void activate_columns(Activation activation, Eigen::Ref<Eigen::MatrixXd> values) {
	switch (activation) {
	case Activation::sigmoid:
		values = values.unaryExpr([](double v) { return sigmoid(v); });
		return;
	case Activation::tanh:
		values = values.array().tanh().matrix();
		return;
	case Activation::relu:
		values = values.cwiseMax(0.0);
		return;
	case Activation::linear:
		return;
	case Activation::softmax:
		for (Eigen::Index j = 0; j < values.cols(); ++j) {
			auto col = values.col(j);
			const double peak = col.maxCoeff();
			col = (col.array() - peak).exp().matrix();
			col /= col.sum();
		}
		return;
	}
}

Eigen::MatrixXd activation_backward(Activation activation, const Eigen::MatrixXd &y, const Eigen::MatrixXd &dy) {
	switch (activation) {
	case Activation::sigmoid:
		return (dy.array() * y.array() * (1.0 - y.array())).matrix();
	case Activation::tanh:
		return (dy.array() * (1.0 - y.array().square())).matrix();
	case Activation::relu:
		return (dy.array() * (y.array() > 0.0).cast<double>()).matrix();
	case Activation::linear:
		return dy;
	case Activation::softmax: {
		const Eigen::RowVectorXd dot = dy.cwiseProduct(y).colwise().sum();
		return (y.array() * (dy.rowwise() - dot).array()).matrix();
	}
	}
	throw Error("unknown activation");
}

Architecture Architecture::parse(std::string_view text) {
	Architecture arch;
	std::size_t pos = 0;
	if (text.empty()) {
		throw UsageError("empty architecture string");
	}
	while (pos <= text.size()) {
		auto end = text.find_first_of("xX*", pos);
		// Also accept the multiplication sign U+00D7.
		const auto times = text.find("\xC3\x97", pos);
		std::size_t skip = 1;
		if (times != std::string_view::npos && (end == std::string_view::npos || times < end)) {
			end = times;
			skip = 2;
		}
		const auto piece = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
		std::size_t units = 0;
		const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), units);
		if (ec != std::errc{} || ptr != piece.data() + piece.size()) {
			throw UsageError(fmt::format("malformed architecture '{}'", text));
		}
		if (units == 0) {
			throw UsageError(fmt::format("architecture '{}' has a zero-width layer", text));
		}
		arch.units.push_back(units);
		if (end == std::string_view::npos) {
			break;
		}
		pos = end + skip;
	}
	return arch;
}

std::string Architecture::str() const {
	std::string out;
	for (std::size_t i = 0; i < units.size(); ++i) {
		if (i > 0) {
			out += 'x';
		}
		out += std::to_string(units[i]);
	}
	return out;
}

std::uint64_t count_parameters(const Architecture &architecture, std::size_t input_width) {
	std::uint64_t total = 0;
	std::uint64_t m = input_width;
	for (const auto n : architecture.units) {
		total += 4 * (n * (m + n) + n);
		m = n;
	}
	return total + m + 1;
}

LstmNetwork::LstmNetwork(Architecture architecture, std::size_t input_width, NetworkOptions options)
    : architecture_(std::move(architecture)), input_width_(input_width), options_(options) {
	if (architecture_.units.empty()) {
		throw UsageError("network needs at least one LSTM layer");
	}
	if (input_width_ == 0) {
		throw UsageError("network input width must be positive");
	}
	for (const auto n : architecture_.units) {
		if (n == 0) {
			throw UsageError("zero-width LSTM layer");
		}
	}
	if (!(options_.dropout >= 0.0 && options_.dropout < 1.0)) {
		throw UsageError(fmt::format("dropout rate {} outside [0, 1)", options_.dropout));
	}
	std::size_t offset = 0;
	for (std::size_t k = 0; k < layers(); ++k) {
		offsets_.push_back(offset);
		const std::size_t n = units(k);
		offset += 4 * n * (n + layer_inputs(k)) + 4 * n;
	}
	offsets_.push_back(offset);
	offset += units(layers() - 1) + 1;
	params_.assign(offset, 0.0);
}

LstmNetwork LstmNetwork::initialize(const Architecture &architecture, std::size_t input_width, std::uint64_t seed,
                                    NetworkOptions options) {
	LstmNetwork net(architecture, input_width, options);
	Rng rng(seed);
	for (std::size_t k = 0; k < net.layers(); ++k) {
		const std::size_t n = net.units(k);
		const std::size_t fan_in = n + net.layer_inputs(k);
		const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + n));
		double *w = net.params_.data() + net.weight_offset(k);
		for (std::size_t i = 0; i < 4 * n * fan_in; ++i) {
			w[i] = rng.uniform(-limit, limit);
		}
		double *b = net.params_.data() + net.bias_offset(k);
		for (std::size_t i = 0; i < n; ++i) {
			b[i] = 1.0; // forget gate
		}
	}
	const std::size_t last = net.units(net.layers() - 1);
	const double limit = std::sqrt(6.0 / static_cast<double>(last + 1));
	double *dense = net.params_.data() + net.dense_offset();
	for (std::size_t i = 0; i < last; ++i) {
		dense[i] = rng.uniform(-limit, limit);
	}
	return net;
}

std::size_t LstmNetwork::bias_offset(std::size_t k) const {
	const std::size_t n = units(k);
	return offsets_[k] + 4 * n * (n + layer_inputs(k));
}

LayerParams LstmNetwork::layer(std::size_t k) const {
	const auto n = static_cast<Eigen::Index>(units(k));
	const auto m = static_cast<Eigen::Index>(layer_inputs(k));
	return LayerParams{ConstMatrixMap(params_.data() + weight_offset(k), 4 * n, n + m),
	                   ConstVectorMap(params_.data() + bias_offset(k), 4 * n), static_cast<std::size_t>(m),
	                   static_cast<std::size_t>(n)};
}

std::span<const double> LstmNetwork::dense_weights() const {
	return {params_.data() + dense_offset(), units(layers() - 1)};
}

std::string LstmNetwork::parameter_name(std::size_t index) const {
	static constexpr const char *kGates[] = {"f", "i", "g", "o"};
	if (index >= dense_offset()) {
		const std::size_t rel = index - dense_offset();
		return rel < units(layers() - 1) ? fmt::format("dense.w[{}]", rel) : std::string("dense.b");
	}
	std::size_t k = 0;
	while (k + 1 < layers() && index >= offsets_[k + 1]) {
		++k;
	}
	const std::size_t n = units(k);
	const std::size_t cols = n + layer_inputs(k);
	if (index < bias_offset(k)) {
		const std::size_t rel = index - weight_offset(k);
		const std::size_t row = rel / cols;
		return fmt::format("layer{}.W_{}[{},{}]", k + 1, kGates[row / n], row % n, rel % cols);
	}
	const std::size_t rel = index - bias_offset(k);
	return fmt::format("layer{}.b_{}[{}]", k + 1, kGates[rel / n], rel % n);
}

bool LstmNetwork::dropout_applies(std::size_t layer) const {
	if (options_.dropout <= 0.0) {
		return false;
	}
	return options_.dropout_last_layer || layer + 1 < layers();
}

CellState cell_step(const LayerParams &params, const Eigen::VectorXd &x, const CellState &prev,
                    Activation cell_activation) {
	const auto n = static_cast<Eigen::Index>(params.units);
	const auto m = static_cast<Eigen::Index>(params.inputs);
	if (x.size() != m || prev.h.size() != n || prev.c.size() != n) {
		throw DataError("cell_step shape mismatch");
	}
	Eigen::VectorXd hx(n + m);
	hx << prev.h, x;
	Eigen::MatrixXd z = params.W * hx + params.b;
	static constexpr const char *kGateNames[] = {"forget gate", "input gate", "candidate", "output gate"};
	sigmoid_rows(z.topRows(n));
	sigmoid_rows(z.middleRows(n, n));
	activate_columns(cell_activation, z.middleRows(2 * n, n));
	sigmoid_rows(z.bottomRows(n));
	for (int g = 0; g < 4; ++g) {
		if (!z.middleRows(g * n, n).allFinite()) {
			throw NumericError(fmt::format("non-finite {}", kGateNames[g]));
		}
	}
	CellState next;
	next.c = z.topRows(n).cwiseProduct(prev.c) + z.middleRows(n, n).cwiseProduct(z.middleRows(2 * n, n));
	if (!next.c.allFinite()) {
		throw NumericError("non-finite cell state");
	}
	Eigen::MatrixXd ac = next.c;
	activate_columns(cell_activation, ac);
	next.h = z.bottomRows(n).cwiseProduct(ac);
	return next;
}

bool DropoutMasks::empty() const {
	for (const auto &l : layers) {
		if (!l.empty()) {
			return false;
		}
	}
	return true;
}

DropoutMasks sample_masks(const LstmNetwork &network, std::size_t steps, std::size_t batch, Rng &rng) {
	DropoutMasks masks;
	masks.layers.resize(network.layers());
	const double keep = 1.0 - network.options().dropout;
	for (std::size_t l = 0; l < network.layers(); ++l) {
		if (!network.dropout_applies(l)) {
			continue;
		}
		const auto n = static_cast<Eigen::Index>(network.units(l));
		for (std::size_t t = 0; t < steps; ++t) {
			Eigen::MatrixXd mask(n, static_cast<Eigen::Index>(batch));
			for (Eigen::Index j = 0; j < mask.cols(); ++j) {
				for (Eigen::Index i = 0; i < n; ++i) {
					mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
				}
			}
			masks.layers[l].push_back(std::move(mask));
		}
	}
	return masks;
}

ForwardCache forward(const LstmNetwork &network, const SequenceBatch &batch, Mode mode, Rng *rng) {
	if (mode == Mode::train && network.options().dropout > 0.0) {
		if (rng == nullptr) {
			throw Error("train-mode forward with dropout needs a random generator");
		}
		const auto masks = sample_masks(network, batch.steps, batch.size(), *rng);
		return run_forward(network, batch, &masks);
	}
	return run_forward(network, batch, nullptr);
}

ForwardCache forward(const LstmNetwork &network, const SequenceBatch &batch, const DropoutMasks &masks) {
	return run_forward(network, batch, &masks);
}

double predict(const LstmNetwork &network, std::span<const double> window, std::size_t steps) {
	SequenceBatch batch{steps, network.input_width(), {window}};
	return forward(network, batch, Mode::infer).output(0);
}

void save_checkpoint(const LstmNetwork &network, const std::filesystem::path &path,
                     const std::string &manifest_json) {
	io::ByteWriter out;
	out.magic(kCheckpointMagic);
	out.u64(network.input_width());
	out.u64(network.layers());
	for (const auto n : network.architecture().units) {
		out.u64(n);
	}
	out.u8(static_cast<std::uint8_t>(network.options().cell_activation));
	out.u8(static_cast<std::uint8_t>(network.options().dense_activation));
	out.f64(network.options().dropout);
	out.u8(network.options().dropout_last_layer ? 1 : 0);
	out.u64(network.parameter_count());
	out.f64s(network.parameters());
	out.save(path);
	auto manifest_path = path;
	manifest_path += ".json";
	io::write_text(manifest_path, manifest_json);
}

LstmNetwork load_checkpoint(const std::filesystem::path &path) {
	auto in = io::ByteReader::open(path);
	in.expect_magic(kCheckpointMagic);
	const auto width = in.u64();
	const auto layers = in.u64();
	if (layers == 0 || layers > 64) {
		throw FormatError(fmt::format("'{}' declares {} layers", path.string(), layers));
	}
	Architecture arch;
	for (std::uint64_t k = 0; k < layers; ++k) {
		arch.units.push_back(in.u64());
	}
	NetworkOptions options;
	const auto cell = in.u8();
	const auto dense = in.u8();
	if (cell > 4 || dense > 4) {
		throw FormatError(fmt::format("'{}' has an unknown activation code", path.string()));
	}
	options.cell_activation = static_cast<Activation>(cell);
	options.dense_activation = static_cast<Activation>(dense);
	options.dropout = in.f64();
	options.dropout_last_layer = in.u8() != 0;
	LstmNetwork net(arch, width, options);
	const auto count = in.u64();
	if (count != net.parameter_count()) {
		throw FormatError(fmt::format("'{}' stores {} parameters, architecture needs {}", path.string(), count,
		                              net.parameter_count()));
	}
	const auto values = in.f64s(count);
	std::copy(values.begin(), values.end(), net.parameters().begin());
	in.expect_end();
	return net;
}

} // namespace loadcast::nn
