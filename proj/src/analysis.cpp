#include "loadcast/analysis.hpp"

#include "loadcast/csv.hpp"
#include "loadcast/error.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fmt/format.h>
#include <numbers>
#include <numeric>
#include <unsupported/Eigen/FFT>

namespace loadcast::analysis {

namespace {

constexpr std::size_t kMaxEmIterations = 500;
constexpr double kEmTolerance = 1e-8;
constexpr double kCollapseFraction = 1e-6;

double mean_of(std::span<const double> v) {
	return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double normal_log_pdf(double x, double mean, double sd) {
	const double z = (x - mean) / sd;
	return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

std::optional<double> correlation(std::span<const double> x, std::span<const double> y) {
	const double mx = mean_of(x);
	const double my = mean_of(y);
	double sxy = 0.0;
	double sxx = 0.0;
	double syy = 0.0;
	for (std::size_t i = 0; i < x.size(); ++i) {
		sxy += (x[i] - mx) * (y[i] - my);
		sxx += (x[i] - mx) * (x[i] - mx);
		syy += (y[i] - my) * (y[i] - my);
	}
	if (sxx <= 0.0 || syy <= 0.0) {
		return std::nullopt;
	}
	return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct EmOutcome {
	BimodalFit fit;
	bool collapsed = false;
};

EmOutcome run_em(std::span<const double> values, std::array<GaussianComponent, 2> start, double floor_sd) {
	EmOutcome out;
	auto &fit = out.fit;
	fit.components = start;
	const std::size_t n = values.size();
	std::vector<double> r0(n);
	double previous = -std::numeric_limits<double>::infinity();
	for (std::size_t it = 0; it < kMaxEmIterations; ++it) {
		double loglik = 0.0;
		for (std::size_t i = 0; i < n; ++i) {
			const double a = std::log(fit.components[0].weight) +
			                 normal_log_pdf(values[i], fit.components[0].mean, fit.components[0].sd);
			const double b = std::log(fit.components[1].weight) +
			                 normal_log_pdf(values[i], fit.components[1].mean, fit.components[1].sd);
			const double hi = std::max(a, b);
			const double lse = hi + std::log(std::exp(a - hi) + std::exp(b - hi));
			loglik += lse;
			r0[i] = std::exp(a - lse);
		}
		fit.log_likelihood.push_back(loglik);
		fit.iterations = it + 1;
		if (std::abs(loglik - previous) < kEmTolerance) {
			fit.converged = true;
			break;
		}
		previous = loglik;

		std::array<double, 2> weight{};
		std::array<double, 2> sum{};
		for (std::size_t i = 0; i < n; ++i) {
			weight[0] += r0[i];
			weight[1] += 1.0 - r0[i];
			sum[0] += r0[i] * values[i];
			sum[1] += (1.0 - r0[i]) * values[i];
		}
		for (int c = 0; c < 2; ++c) {
			if (!(weight[c] > 0.0)) {
				out.collapsed = true;
				return out;
			}
		}
		std::array<double, 2> mean{sum[0] / weight[0], sum[1] / weight[1]};
		std::array<double, 2> var{};
		for (std::size_t i = 0; i < n; ++i) {
			var[0] += r0[i] * (values[i] - mean[0]) * (values[i] - mean[0]);
			var[1] += (1.0 - r0[i]) * (values[i] - mean[1]) * (values[i] - mean[1]);
		}
		for (int c = 0; c < 2; ++c) {
			const double sd = std::sqrt(var[c] / weight[c]);
			if (!(sd >= floor_sd)) {
				out.collapsed = true;
				return out;
			}
			fit.components[c] = {weight[c] / static_cast<double>(n), mean[c], sd};
		}
	}
	return out;
}

std::array<GaussianComponent, 2> kmeans_start(std::span<const double> values, double c0, double c1,
                                               double range) {
	std::array<double, 2> centers{c0, c1};
	std::vector<std::uint8_t> label(values.size(), 0);
	for (int it = 0; it < 100; ++it) {
		bool changed = false;
		for (std::size_t i = 0; i < values.size(); ++i) {
			const std::uint8_t l = std::abs(values[i] - centers[1]) < std::abs(values[i] - centers[0]) ? 1 : 0;
			changed = changed || l != label[i];
			label[i] = l;
		}
		std::array<double, 2> sum{};
		std::array<std::size_t, 2> count{};
		for (std::size_t i = 0; i < values.size(); ++i) {
			sum[label[i]] += values[i];
			++count[label[i]];
		}
		for (int c = 0; c < 2; ++c) {
			if (count[c] > 0) {
				centers[c] = sum[c] / static_cast<double>(count[c]);
			}
		}
		if (!changed && it > 0) {
			break;
		}
	}
	std::array<GaussianComponent, 2> start;
	std::array<double, 2> ss{};
	std::array<std::size_t, 2> count{};
	for (std::size_t i = 0; i < values.size(); ++i) {
		ss[label[i]] += (values[i] - centers[label[i]]) * (values[i] - centers[label[i]]);
		++count[label[i]];
	}
	for (int c = 0; c < 2; ++c) {
		const double sd = count[c] > 1 ? std::sqrt(ss[c] / static_cast<double>(count[c])) : 0.0;
		start[c].mean = centers[c];
		start[c].sd = std::max(sd, range / 20.0);
		start[c].weight = std::clamp(static_cast<double>(count[c]) / static_cast<double>(values.size()), 0.05, 0.95);
	}
	const double total = start[0].weight + start[1].weight;
	start[0].weight /= total;
	start[1].weight /= total;
	return start;
}

} // namespace

Periodogram periodogram(std::span<const double> series) {
	if (series.size() < 2) {
		throw DataError("periodogram needs at least two values");
	}
	const std::size_t n = series.size();
	const double mean = mean_of(series);
	std::vector<double> centered(n);
	for (std::size_t i = 0; i < n; ++i) {
		centered[i] = series[i] - mean;
	}
	Eigen::FFT<double> fft;
	fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
	std::vector<std::complex<double>> spectrum;
	fft.fwd(spectrum, centered);

	Periodogram p;
	const std::size_t half = n / 2;
	for (std::size_t k = 0; k <= half; ++k) {
		double power = std::norm(spectrum[k]) / static_cast<double>(n);
		const bool nyquist = n % 2 == 0 && k == half;
		if (k > 0 && !nyquist) {
			power *= 2.0;
		}
		p.frequency.push_back(static_cast<double>(k) / static_cast<double>(n));
		p.power.push_back(power);
	}
	return p;
}

std::vector<SpectrumPeak> Periodogram::peaks(std::size_t k) const {
	std::vector<SpectrumPeak> found;
	for (std::size_t i = 1; i < power.size(); ++i) {
		const bool left = power[i] > power[i - 1];
		const bool right = i + 1 == power.size() || power[i] >= power[i + 1];
		if (left && right && power[i] > 0.0) {
			found.push_back({frequency[i], 1.0 / frequency[i], power[i]});
		}
	}
	std::stable_sort(found.begin(), found.end(), [](const auto &a, const auto &b) { return a.power > b.power; });
	if (found.size() > k) {
		found.resize(k);
	}
	return found;
}

std::string Periodogram::to_csv() const {
	csv::Writer out({"frequency", "period_hours", "power"});
	for (std::size_t i = 0; i < power.size(); ++i) {
		out.cell(frequency[i]);
		out.cell(frequency[i] > 0.0 ? std::optional<double>(1.0 / frequency[i]) : std::nullopt);
		out.cell(power[i]);
		out.end_row();
	}
	return out.str();
}

std::optional<std::vector<double>> acf(std::span<const double> series, std::size_t max_lag) {
	if (series.size() <= max_lag) {
		throw DataError(fmt::format("autocorrelation to lag {} needs more than {} values", max_lag, max_lag));
	}
	const double mean = mean_of(series);
	double c0 = 0.0;
	for (const double v : series) {
		c0 += (v - mean) * (v - mean);
	}
	if (!(c0 > 0.0)) {
		return std::nullopt;
	}
	std::vector<double> out(max_lag + 1);
	for (std::size_t lag = 0; lag <= max_lag; ++lag) {
		double c = 0.0;
		for (std::size_t t = lag; t < series.size(); ++t) {
			c += (series[t] - mean) * (series[t - lag] - mean);
		}
		out[lag] = c / c0;
	}
	return out;
}

double PolyFit::evaluate(double x) const {
	const double u = x - center;
	double acc = 0.0;
	for (std::size_t k = coefficients.size(); k-- > 0;) {
		acc = acc * u + coefficients[k];
	}
	return acc;
}

PolyFit fit_poly(std::span<const double> x, std::span<const double> y, int degree) {
	if (degree < 1 || degree > 3) {
		throw UsageError(fmt::format("polynomial degree {} outside 1..3", degree));
	}
	if (x.size() != y.size()) {
		throw DataError("polynomial fit inputs differ in length");
	}
	if (x.size() <= static_cast<std::size_t>(degree)) {
		throw DataError(fmt::format("degree {} fit needs more than {} points", degree, degree));
	}
	const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
	if (!(*lo < *hi)) {
		throw DataError("polynomial fit on a constant predictor is singular");
	}
	PolyFit fit;
	fit.degree = degree;
	fit.center = mean_of(x);
	const auto n = static_cast<Eigen::Index>(x.size());
	Eigen::MatrixXd X(n, degree + 1);
	Eigen::VectorXd Y(n);
	for (Eigen::Index i = 0; i < n; ++i) {
		const double u = x[static_cast<std::size_t>(i)] - fit.center;
		double pw = 1.0;
		for (int k = 0; k <= degree; ++k) {
			X(i, k) = pw;
			pw *= u;
		}
		Y(i) = y[static_cast<std::size_t>(i)];
	}
	const Eigen::MatrixXd A = X.transpose() * X;
	const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
	if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
		throw DataError("polynomial normal equations are singular");
	}
	const Eigen::VectorXd c = ldlt.solve(X.transpose() * Y);
	if (!c.allFinite()) {
		throw DataError("polynomial normal equations are singular");
	}
	fit.coefficients.assign(c.data(), c.data() + c.size());
	fit.residual_ss = (Y - X * c).squaredNorm();

	// Roots of the derivative in u, then mapped back to x.
	std::vector<double> roots;
	if (degree == 2 && c(2) != 0.0) {
		roots.push_back(-c(1) / (2.0 * c(2)));
	} else if (degree == 3) {
		const double a = 3.0 * c(3);
		const double b = 2.0 * c(2);
		const double d = c(1);
		if (a == 0.0) {
			if (b != 0.0) {
				roots.push_back(-d / b);
			}
		} else {
			const double disc = b * b - 4.0 * a * d;
			if (disc >= 0.0) {
				const double s = std::sqrt(disc);
				roots.push_back((-b - s) / (2.0 * a));
				roots.push_back((-b + s) / (2.0 * a));
			}
		}
	}
	std::sort(roots.begin(), roots.end());
	for (const double u : roots) {
		const double at = u + fit.center;
		if (at < *lo || at > *hi) {
			continue;
		}
		double second = 2.0 * c(2);
		if (degree == 3) {
			second += 6.0 * c(3) * u;
		}
		fit.stationary_points.push_back({at, second > 0.0});
	}
	if (degree == 1) {
		fit.rho = correlation(x, y);
	}
	return fit;
}

std::vector<MonthlyFit> fit_monthly_linear(std::span<const HourStamp> times, std::span<const double> temp,
                                           std::span<const double> demand) {
	if (times.size() != temp.size() || temp.size() != demand.size()) {
		throw DataError("monthly fit inputs differ in length");
	}
	std::array<std::vector<double>, 12> tx;
	std::array<std::vector<double>, 12> dy;
	for (std::size_t i = 0; i < times.size(); ++i) {
		const std::chrono::year_month_day ymd{date_of(times[i])};
		const auto m = static_cast<unsigned>(ymd.month()) - 1;
		tx[m].push_back(temp[i]);
		dy[m].push_back(demand[i]);
	}
	std::vector<MonthlyFit> out;
	for (int m = 0; m < 12; ++m) {
		MonthlyFit f;
		f.month = m + 1;
		f.n = tx[m].size();
		if (f.n >= 2) {
			const auto [lo, hi] = std::minmax_element(tx[m].begin(), tx[m].end());
			if (*lo < *hi) {
				const auto line = fit_poly(tx[m], dy[m], 1);
				f.slope = line.coefficients[1];
				f.rho = line.rho;
			}
		}
		out.push_back(f);
	}
	return out;
}

double BimodalFit::density(double x) const {
	double d = 0.0;
	for (const auto &c : components) {
		d += c.weight * std::exp(normal_log_pdf(x, c.mean, c.sd));
	}
	return d;
}

BimodalFit fit_bimodal(std::span<const double> values, std::size_t bins) {
	if (values.size() < 2) {
		throw DataError("mixture fit needs at least two values");
	}
	const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
	const double lo = *lo_it;
	const double hi = *hi_it;
	if (!(lo < hi)) {
		throw DataError("mixture fit needs at least two distinct values");
	}
	const double range = hi - lo;
	bins = std::max<std::size_t>(bins, 3);
	std::vector<std::size_t> hist(bins, 0);
	for (const double v : values) {
		const auto b = static_cast<std::size_t>((v - lo) / range * static_cast<double>(bins));
		++hist[std::min(b, bins - 1)];
	}
	std::vector<std::size_t> modes;
	for (std::size_t b = 0; b < bins; ++b) {
		const std::size_t left = b > 0 ? hist[b - 1] : 0;
		const std::size_t right = b + 1 < bins ? hist[b + 1] : 0;
		if (hist[b] > 0 && hist[b] >= left && hist[b] > right) {
			modes.push_back(b);
		}
	}
	std::stable_sort(modes.begin(), modes.end(), [&](auto a, auto b) { return hist[a] > hist[b]; });
	const auto centre = [&](std::size_t b) { return lo + (static_cast<double>(b) + 0.5) * range / static_cast<double>(bins); };
	double c0 = lo + range / 4.0;
	double c1 = hi - range / 4.0;
	if (modes.size() >= 2) {
		c0 = centre(std::min(modes[0], modes[1]));
		c1 = centre(std::max(modes[0], modes[1]));
	}
	const double floor_sd = kCollapseFraction * range;

	auto start = kmeans_start(values, c0, c1, range);
	auto outcome = run_em(values, start, floor_sd);
	if (outcome.collapsed) {
		start[0].mean -= 0.1 * range;
		start[1].mean += 0.1 * range;
		start[0].sd = start[1].sd = range / 4.0;
		start[0].weight = start[1].weight = 0.5;
		outcome = run_em(values, start, floor_sd);
		outcome.fit.restarted = true;
		if (outcome.collapsed) {
			throw NumericError("mixture component collapsed twice");
		}
	}
	auto fit = std::move(outcome.fit);
	if (fit.components[0].mean > fit.components[1].mean) {
		std::swap(fit.components[0], fit.components[1]);
	}
	return fit;
}

} // namespace loadcast::analysis
