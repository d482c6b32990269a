#include "loadcast/train.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/csv.hpp"
#include "loadcast/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>
#include <limits>
#include <numeric>

namespace loadcast::train {

namespace {

nn::SequenceBatch make_batch(const features::WindowedDataset &data, std::span<const std::size_t> indices) {
	nn::SequenceBatch batch{data.window(), data.width(), {}};
	batch.windows.reserve(indices.size());
	for (const auto k : indices) {
		batch.windows.push_back(data.inputs(k));
	}
	return batch;
}

} // namespace

OptimizerKind parse_optimizer(std::string_view text) {
	if (text == "adam") {
		return OptimizerKind::adam;
	}
	if (text == "sgd") {
		return OptimizerKind::sgd;
	}
	if (text == "rmsprop") {
		return OptimizerKind::rmsprop;
	}
	throw UsageError(fmt::format("unknown optimizer '{}' (expected adam, sgd or rmsprop)", text));
}

std::string_view to_string(OptimizerKind kind) {
	switch (kind) {
	case OptimizerKind::adam:
		return "adam";
	case OptimizerKind::sgd:
		return "sgd";
	case OptimizerKind::rmsprop:
		return "rmsprop";
	}
	return "?";
}

Optimizer::Optimizer(OptimizerKind kind, std::size_t parameters, OptimizerConstants constants)
    : kind_(kind), constants_(constants), first_(parameters, 0.0), second_(parameters, 0.0) {}

void Optimizer::step(std::span<double> params, std::span<const double> grads, double lr) {
	if (params.size() != first_.size() || grads.size() != first_.size()) {
		throw Error(fmt::format("optimizer holds {} slots, got {} parameters and {} gradients", first_.size(),
		                        params.size(), grads.size()));
	}
	++steps_;
	const auto &k = constants_;
	switch (kind_) {
	case OptimizerKind::sgd:
		for (std::size_t i = 0; i < params.size(); ++i) {
			first_[i] = k.momentum * first_[i] - lr * grads[i];
			params[i] += first_[i];
		}
		return;
	case OptimizerKind::rmsprop:
		for (std::size_t i = 0; i < params.size(); ++i) {
			second_[i] = k.rho * second_[i] + (1.0 - k.rho) * grads[i] * grads[i];
			params[i] -= lr * grads[i] / std::sqrt(second_[i] + k.epsilon);
		}
		return;
	case OptimizerKind::adam: {
		const double c1 = 1.0 - std::pow(k.beta1, static_cast<double>(steps_));
		const double c2 = 1.0 - std::pow(k.beta2, static_cast<double>(steps_));
		for (std::size_t i = 0; i < params.size(); ++i) {
			first_[i] = k.beta1 * first_[i] + (1.0 - k.beta1) * grads[i];
			second_[i] = k.beta2 * second_[i] + (1.0 - k.beta2) * grads[i] * grads[i];
			const double m_hat = first_[i] / c1;
			const double v_hat = second_[i] / c2;
			params[i] -= lr * m_hat / (std::sqrt(v_hat) + k.epsilon);
		}
		return;
	}
	}
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
	if (predictions.size() != targets.size() || predictions.empty()) {
		throw DataError("loss needs equally sized, nonempty predictions and targets");
	}
	double sum = 0.0;
	for (std::size_t i = 0; i < predictions.size(); ++i) {
		const double e = predictions[i] - targets[i];
		sum += e * e;
	}
	return sum / static_cast<double>(predictions.size());
}

Gradients bptt_gradients(const nn::LstmNetwork &network, std::span<const double> targets,
                         const nn::ForwardCache &cache) {
	const auto B = cache.output.size();
	if (static_cast<std::size_t>(B) != targets.size()) {
		throw DataError(fmt::format("{} targets for a batch of {}", targets.size(), B));
	}
	Gradients grads;
	grads.values.assign(network.parameter_count(), 0.0);
	grads.loss = mse_loss({cache.output.data(), static_cast<std::size_t>(B)}, targets);

	const Eigen::RowVectorXd target = Eigen::Map<const Eigen::RowVectorXd>(targets.data(), B);
	const Eigen::MatrixXd dy = 2.0 * (cache.output - target) / static_cast<double>(B);
	const Eigen::MatrixXd y = cache.output;
	const Eigen::MatrixXd dz = nn::activation_backward(network.options().dense_activation, y, dy);

	const std::size_t top = network.layers() - 1;
	const auto n_top = static_cast<Eigen::Index>(network.units(top));
	nn::VectorMap d_dense(grads.values.data() + network.dense_offset(), n_top);
	d_dense = cache.dense_input * dz.transpose();
	grads.values.back() = dz.sum();

	const auto dense_w = network.dense_weights();
	const nn::ConstVectorMap w_dense(dense_w.data(), n_top);
	const auto act = network.options().cell_activation;
	const std::size_t steps = cache.layers[top].out.size();

	// Gradient with respect to each layer's output sequence (after dropout).
	std::vector<Eigen::MatrixXd> d_out(steps, Eigen::MatrixXd::Zero(n_top, B));
	d_out[steps - 1] = w_dense * dz;

	for (std::size_t l = network.layers(); l-- > 0;) {
		const auto p = network.layer(l);
		const auto n = static_cast<Eigen::Index>(p.units);
		const auto m = static_cast<Eigen::Index>(p.inputs);
		const auto &trace = cache.layers[l];
		const bool masked = l < cache.masks.layers.size() && !cache.masks.layers[l].empty();

		nn::MatrixMap dW(grads.values.data() + network.weight_offset(l), 4 * n, n + m);
		nn::VectorMap db(grads.values.data() + network.bias_offset(l), 4 * n);
		std::vector<Eigen::MatrixXd> d_in(l > 0 ? steps : 0);

		Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(n, B);
		Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(n, B);
		Eigen::MatrixXd dZ(4 * n, B);
		for (std::size_t t = steps; t-- > 0;) {
			const auto &z = trace.gates[t];
			const auto f = z.topRows(n);
			const auto i = z.middleRows(n, n);
			const auto g = z.middleRows(2 * n, n);
			const auto o = z.bottomRows(n);
			const Eigen::MatrixXd &ac = trace.act_c[t];

			Eigen::MatrixXd dh = masked ? Eigen::MatrixXd(d_out[t].cwiseProduct(cache.masks.layers[l][t])) : d_out[t];
			dh += dh_next;
			const Eigen::MatrixXd d_o = dh.cwiseProduct(ac);
			Eigen::MatrixXd dc = nn::activation_backward(act, ac, dh.cwiseProduct(o));
			dc += dc_next;
			if (t > 0) {
				dZ.topRows(n) = dc.cwiseProduct(trace.c[t - 1]);
			} else {
				dZ.topRows(n).setZero();
			}
			dZ.middleRows(n, n) = dc.cwiseProduct(g);
			const Eigen::MatrixXd dg = dc.cwiseProduct(i);
			dc_next = dc.cwiseProduct(f);

			dZ.topRows(n) = (dZ.topRows(n).array() * f.array() * (1.0 - f.array())).matrix();
			dZ.middleRows(n, n) = (dZ.middleRows(n, n).array() * i.array() * (1.0 - i.array())).matrix();
			dZ.middleRows(2 * n, n) = nn::activation_backward(act, g, dg);
			dZ.bottomRows(n) = (d_o.array() * o.array() * (1.0 - o.array())).matrix();

			dW.noalias() += dZ * trace.hx[t].transpose();
			db += dZ.rowwise().sum();
			const Eigen::MatrixXd dhx = p.W.transpose() * dZ;
			dh_next = dhx.topRows(n);
			if (l > 0) {
				d_in[t] = dhx.bottomRows(m);
			}
		}
		d_out = std::move(d_in);
	}

	for (std::size_t idx = 0; idx < grads.values.size(); ++idx) {
		if (!std::isfinite(grads.values[idx])) {
			throw NumericError(fmt::format("non-finite gradient for {}", network.parameter_name(idx)));
		}
	}
	return grads;
}

std::vector<std::string> TrainConfig::violations() const {
	std::vector<std::string> out;
	if (architecture.units.empty()) {
		out.emplace_back("architecture has no layers");
	}
	for (const auto n : architecture.units) {
		if (n == 0) {
			out.emplace_back("architecture has a zero-width layer");
			break;
		}
	}
	if (batch_size == 0) {
		out.emplace_back("batch size must be at least 1");
	}
	if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
		out.push_back(fmt::format("learning rate {} must be positive", learning_rate));
	}
	if (max_epochs == 0) {
		out.emplace_back("max epochs must be at least 1");
	}
	if (!(plateau_factor > 0.0 && plateau_factor <= 1.0)) {
		out.push_back(fmt::format("plateau factor {} must lie in (0, 1]", plateau_factor));
	}
	if (!(dropout >= 0.0 && dropout < 1.0)) {
		out.push_back(fmt::format("dropout {} must lie in [0, 1)", dropout));
	}
	return out;
}

void TrainConfig::validate() const {
	const auto problems = violations();
	if (!problems.empty()) {
		throw UsageError(fmt::format("invalid training configuration: {}", fmt::join(problems, "; ")));
	}
}

std::string TrainTrace::to_csv() const {
	csv::Writer out({"epoch", "train_loss", "val_loss", "lr"});
	for (const auto &e : epochs) {
		out.cell(e.epoch);
		out.cell(e.train_loss);
		out.cell(e.val_loss);
		out.cell(e.learning_rate);
		out.end_row();
	}
	return out.str();
}

void TrainTrace::write_csv(const std::filesystem::path &path) const {
	io::write_text(path, to_csv());
}

FitResult fit(const TrainConfig &config, const features::WindowedDataset &train_set,
              const features::WindowedDataset &val_set, const EpochCallback &on_epoch) {
	config.validate();
	if (train_set.empty()) {
		throw DataError("training split is empty");
	}
	if (val_set.empty()) {
		throw DataError("validation split is empty");
	}
	nn::NetworkOptions options;
	options.cell_activation = config.activation;
	options.dense_activation = config.activation;
	options.dropout = config.dropout;
	options.dropout_last_layer = config.dropout_last_layer;
	auto net = nn::LstmNetwork::initialize(config.architecture, train_set.width(), config.seed, options);
	Optimizer optimizer(config.optimizer, net.parameter_count());
	Rng dropout_rng(derive_seed(config.seed, 1));
	Rng shuffle_rng(derive_seed(config.seed, 2));

	std::vector<std::size_t> order(train_set.size());
	std::iota(order.begin(), order.end(), std::size_t{0});
	std::vector<double> targets;

	FitResult result;
	auto &trace = result.trace;
	std::vector<double> best_params(net.parameters().begin(), net.parameters().end());
	double best_val = std::numeric_limits<double>::infinity();
	double lr = config.learning_rate;
	std::size_t wait = 0;
	std::size_t plateau_wait = 0;
	const std::size_t stop_after = std::max<std::size_t>(config.early_stop_patience, 1);

	for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
		const auto started = std::chrono::steady_clock::now();
		if (config.shuffle) {
			for (std::size_t i = order.size(); i > 1; --i) {
				std::swap(order[i - 1], order[shuffle_rng.below(i)]);
			}
		}
		double weighted = 0.0;
		for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
			const std::size_t count = std::min(config.batch_size, order.size() - begin);
			const std::span<const std::size_t> indices(order.data() + begin, count);
			const auto batch = make_batch(train_set, indices);
			targets.resize(count);
			for (std::size_t j = 0; j < count; ++j) {
				targets[j] = train_set.target(indices[j]);
			}
			Gradients grads;
			try {
				const auto cache = nn::forward(net, batch, nn::Mode::train, &dropout_rng);
				grads = bptt_gradients(net, targets, cache);
			} catch (const NumericError &e) {
				throw DivergenceError(fmt::format("epoch {}: {}", epoch, e.what()), trace);
			}
			if (!std::isfinite(grads.loss)) {
				throw DivergenceError(fmt::format("epoch {}: training loss became non-finite", epoch), trace);
			}
			optimizer.step(net.parameters(), grads.values, lr);
			weighted += grads.loss * static_cast<double>(count);
		}
		EpochRecord record;
		record.epoch = epoch;
		record.train_loss = weighted / static_cast<double>(order.size());
		record.learning_rate = lr;
		try {
			record.val_loss = evaluate_loss(net, val_set);
		} catch (const NumericError &e) {
			throw DivergenceError(fmt::format("epoch {}: {}", epoch, e.what()), trace);
		}
		if (!std::isfinite(record.val_loss) || !std::isfinite(record.train_loss)) {
			trace.epochs.push_back(record);
			throw DivergenceError(fmt::format("epoch {}: loss became non-finite", epoch), trace);
		}
		record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
		trace.epochs.push_back(record);
		if (on_epoch) {
			on_epoch(record);
		}

		if (record.val_loss < best_val) {
			best_val = record.val_loss;
			trace.best_epoch = trace.epochs.size() - 1;
			std::copy(net.parameters().begin(), net.parameters().end(), best_params.begin());
			wait = 0;
			plateau_wait = 0;
			continue;
		}
		++wait;
		++plateau_wait;
		if (plateau_wait >= config.plateau_patience) {
			lr *= config.plateau_factor;
			plateau_wait = 0;
		}
		if (wait >= stop_after) {
			trace.early_stopped = true;
			break;
		}
	}
	std::copy(best_params.begin(), best_params.end(), net.parameters().begin());
	result.network = std::move(net);
	return result;
}

std::vector<double> predict_all(const nn::LstmNetwork &network, const features::WindowedDataset &data,
                                std::size_t batch_size) {
	std::vector<double> out;
	out.reserve(data.size());
	std::vector<std::size_t> indices;
	batch_size = std::max<std::size_t>(batch_size, 1);
	for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
		const std::size_t count = std::min(batch_size, data.size() - begin);
		indices.resize(count);
		std::iota(indices.begin(), indices.end(), begin);
		const auto cache = nn::forward(network, make_batch(data, indices), nn::Mode::infer);
		out.insert(out.end(), cache.output.data(), cache.output.data() + count);
	}
	return out;
}

std::vector<double> predict_mw(const nn::LstmNetwork &network, const features::WindowedDataset &data) {
	auto out = predict_all(network, data);
	for (auto &v : out) {
		v = data.normalization().invert_target(v);
	}
	return out;
}

double evaluate_loss(const nn::LstmNetwork &network, const features::WindowedDataset &data) {
	const auto predictions = predict_all(network, data);
	std::vector<double> targets(data.size());
	for (std::size_t k = 0; k < data.size(); ++k) {
		targets[k] = data.target(k);
	}
	return mse_loss(predictions, targets);
}

double overfit_ratio(std::size_t train_samples, const nn::Architecture &architecture, std::size_t input_width) {
	return static_cast<double>(train_samples) /
	       static_cast<double>(nn::count_parameters(architecture, input_width));
}

std::string checkpoint_manifest(const TrainConfig &config, const features::DatasetStorage &data) {
	nlohmann::ordered_json doc;
	doc["format"] = "LSTMCKPT1";
	doc["architecture"] = config.architecture.str();
	doc["parameters"] = nn::count_parameters(config.architecture, data.width());
	doc["cell_activation"] = nn::to_string(config.activation);
	doc["dense_activation"] = nn::to_string(config.activation);
	doc["dropout"] = config.dropout;
	doc["dropout_last_layer"] = config.dropout_last_layer;
	doc["optimizer"] = to_string(config.optimizer);
	doc["learning_rate"] = config.learning_rate;
	doc["batch_size"] = config.batch_size;
	doc["shuffle"] = config.shuffle;
	doc["seed"] = config.seed;
	doc["window"] = data.plan.window;
	doc["feature_set"] = features::to_string(data.feature_set);
	doc["features"] = data.names;
	auto &norm = doc["normalization"];
	for (std::size_t c = 0; c < data.width(); ++c) {
		norm["features"].push_back(
		    {{"name", data.names[c]}, {"min", data.normalization.min[c]}, {"max", data.normalization.max[c]}});
	}
	norm["target"] = {{"min", data.normalization.target_min}, {"max", data.normalization.target_max}};
	return doc.dump(2) + "\n";
}

} // namespace loadcast::train
