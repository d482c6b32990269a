#pragma once

#include "loadcast/calendar.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace loadcast::analysis {

struct SpectrumPeak {
	double frequency = 0.0; ///< cycles per hour
	double period_hours = 0.0;
	double power = 0.0;
};

/// One-sided power spectrum of the mean-removed series; powers sum to
/// the series' sum of squared deviations.
struct Periodogram {
	std::vector<double> frequency; ///< k / n, from 0 to the Nyquist frequency 0.5
	std::vector<double> power;

	/// The `k` largest local maxima, strongest first.
	std::vector<SpectrumPeak> peaks(std::size_t k) const;
	std::string to_csv() const;
};

/// Throws DataError for fewer than two values.
Periodogram periodogram(std::span<const double> series);

/// Biased sample autocorrelation for lags 0..max_lag; empty for a constant series.
std::optional<std::vector<double>> acf(std::span<const double> series, std::size_t max_lag);

struct StationaryPoint {
	double x = 0.0;
	bool minimum = false;
};

/// Least-squares polynomial in the centered variable u = x - center.
struct PolyFit {
	int degree = 1;
	double center = 0.0;
	std::vector<double> coefficients; ///< ascending powers of u
	std::vector<StationaryPoint> stationary_points; ///< real roots of the derivative inside the data range
	std::optional<double> rho; ///< Pearson correlation, degree 1 only
	double residual_ss = 0.0;

	double evaluate(double x) const;
};

/// Degree 1 to 3. Throws DataError on constant x or mismatched lengths.
PolyFit fit_poly(std::span<const double> x, std::span<const double> y, int degree);

struct MonthlyFit {
	int month = 1;
	std::size_t n = 0;
	std::optional<double> slope;
	std::optional<double> rho;
};

/// Linear demand-temperature fit per calendar month.
std::vector<MonthlyFit> fit_monthly_linear(std::span<const HourStamp> times, std::span<const double> temp,
                                           std::span<const double> demand);

struct GaussianComponent {
	double weight = 0.5;
	double mean = 0.0;
	double sd = 1.0;
};

struct BimodalFit {
	std::array<GaussianComponent, 2> components; ///< ordered by mean
	std::size_t iterations = 0;
	bool converged = false;
	bool restarted = false;
	std::vector<double> log_likelihood; ///< per EM iteration

	double density(double x) const;
};

/// Two-component Gaussian mixture by expectation-maximization, initialized from
/// the two strongest histogram modes refined by 1-D k-means.
BimodalFit fit_bimodal(std::span<const double> values, std::size_t bins = 50);

} // namespace loadcast::analysis
