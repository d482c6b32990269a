#include "loadcast/error.hpp"
#include "loadcast/metrics.hpp"
#include "loadcast/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace loadcast;

namespace {

struct Oracle {
	double mse, mae, rmse, r2, mape, wape, mase;
};

Oracle straight_line(const std::vector<double> &y, const std::vector<double> &p) {
	const double n = static_cast<double>(y.size());
	double se = 0, ae = 0, ape = 0, sy = 0, mean = 0, naive = 0;
	for (std::size_t k = 0; k < y.size(); ++k) {
		mean += y[k];
	}
	mean /= n;
	double tot = 0;
	for (std::size_t k = 0; k < y.size(); ++k) {
		const double e = y[k] - p[k];
		se += e * e;
		ae += std::fabs(e);
		ape += std::fabs(e / y[k]);
		sy += y[k];
		tot += (y[k] - mean) * (y[k] - mean);
		if (k > 0) {
			naive += std::fabs(y[k] - y[k - 1]);
		}
	}
	return {se / n, ae / n, std::sqrt(se / n), 1 - se / tot, 100 * ape / n, 100 * ae / sy, (ae / n) / (naive / (n - 1))};
}

void expect_rel(double a, double b, double tol) {
	EXPECT_LE(std::fabs(a - b), tol * std::max(1.0, std::fabs(b))) << a << " vs " << b;
}

} // namespace

TEST(Metrics, WorkedExample) {
	const auto r = metrics::compute_all(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2});
	EXPECT_NEAR(r.mse, 0.6667, 1e-4);
	EXPECT_NEAR(r.mae, 0.6667, 1e-4);
	EXPECT_NEAR(r.rmse, 0.8165, 1e-4);
	EXPECT_NEAR(*r.r2, 0.0, 1e-12);
	EXPECT_NEAR(*r.mape, 27.78, 1e-2);
	EXPECT_NEAR(*r.wape, 33.33, 1e-2);
	EXPECT_NEAR(*r.mase, 0.6667, 1e-4);
}

TEST(Metrics, PerfectForecast) {
	const std::vector<double> y{3, 5, 4, 7};
	const auto r = metrics::compute_all(y, y);
	EXPECT_EQ(r.mse, 0.0);
	EXPECT_EQ(r.mae, 0.0);
	EXPECT_EQ(r.rmse, 0.0);
	EXPECT_EQ(*r.r2, 1.0);
	EXPECT_EQ(*r.mape, 0.0);
	EXPECT_EQ(*r.wape, 0.0);
	EXPECT_EQ(*r.mase, 0.0);
}

TEST(Metrics, MeanForecastHasZeroR2) {
	const std::vector<double> y{1, 4, 2, 9};
	const std::vector<double> p(4, 4.0);
	EXPECT_NEAR(*metrics::compute_all(y, p).r2, 0.0, 1e-12);
}

TEST(Metrics, MatchesOracleOnRandomVectors) {
	Rng rng(11);
	for (int trial = 0; trial < 1000; ++trial) {
		const std::size_t n = 2 + rng.below(60);
		std::vector<double> y(n), p(n);
		for (std::size_t k = 0; k < n; ++k) {
			y[k] = rng.uniform(50.0, 2000.0);
			p[k] = y[k] + rng.normal() * 40.0;
		}
		const auto o = straight_line(y, p);
		const auto r = metrics::compute_all(y, p);
		expect_rel(r.mse, o.mse, 1e-9);
		expect_rel(r.mae, o.mae, 1e-9);
		expect_rel(r.rmse, o.rmse, 1e-9);
		expect_rel(*r.r2, o.r2, 1e-9);
		expect_rel(*r.mape, o.mape, 1e-9);
		expect_rel(*r.wape, o.wape, 1e-9);
		expect_rel(*r.mase, o.mase, 1e-9);
	}
}

TEST(Metrics, ShiftInvariance) {
	Rng rng(3);
	std::vector<double> y(50), p(50), ys(50), ps(50);
	for (std::size_t k = 0; k < y.size(); ++k) {
		y[k] = rng.uniform(100, 200);
		p[k] = y[k] + rng.normal() * 5;
		ys[k] = y[k] + 1000;
		ps[k] = p[k] + 1000;
	}
	const auto a = metrics::compute_all(y, p);
	const auto b = metrics::compute_all(ys, ps);
	EXPECT_NEAR(a.mse, b.mse, 1e-9 * a.mse);
	EXPECT_NEAR(a.mae, b.mae, 1e-12 * 1e3);
	EXPECT_NEAR(a.rmse, b.rmse, 1e-12 * 1e3);
	EXPECT_NEAR(*a.r2, *b.r2, 1e-9);
	EXPECT_NEAR(*a.mase, *b.mase, 1e-9);
	const auto ob = straight_line(ys, ps);
	EXPECT_NEAR(*b.mape, ob.mape, 1e-9);
	EXPECT_NEAR(*b.wape, ob.wape, 1e-9);
	EXPECT_LT(*b.mape, *a.mape);
}

TEST(Metrics, ScaleCovariance) {
	Rng rng(4);
	std::vector<double> y(40), p(40), ys(40), ps(40);
	const double lambda = 3.5;
	for (std::size_t k = 0; k < y.size(); ++k) {
		y[k] = rng.uniform(10, 20);
		p[k] = y[k] + rng.normal();
		ys[k] = lambda * y[k];
		ps[k] = lambda * p[k];
	}
	const auto a = metrics::compute_all(y, p);
	const auto b = metrics::compute_all(ys, ps);
	EXPECT_NEAR(b.mae, lambda * a.mae, 1e-12 * b.mae);
	EXPECT_NEAR(b.rmse, lambda * a.rmse, 1e-12 * b.rmse);
	EXPECT_NEAR(b.mse, lambda * lambda * a.mse, 1e-12 * b.mse);
	EXPECT_NEAR(*b.mape, *a.mape, 1e-12 * *a.mape);
	EXPECT_NEAR(*b.wape, *a.wape, 1e-12 * *a.wape);
	EXPECT_NEAR(*b.r2, *a.r2, 1e-12);
	EXPECT_NEAR(*b.mase, *a.mase, 1e-12);
}

TEST(Metrics, NaiveForecastHasUnitMase) {
	Rng rng(8);
	std::vector<double> series(101);
	for (auto &v : series) {
		v = rng.uniform(0, 10);
	}
	// y_t for t = 1..n and naive y_{t-1}; the scale uses the same index set.
	std::vector<double> y(series.begin() + 1, series.end());
	std::vector<double> p(series.begin(), series.end() - 1);
	const auto r = metrics::compute_all(y, p);
	double naive = 0;
	for (std::size_t k = 1; k < series.size(); ++k) {
		naive += std::fabs(series[k] - series[k - 1]);
	}
	naive /= static_cast<double>(series.size() - 1);
	EXPECT_NEAR(r.mae / naive, 1.0, 1e-12);
}

TEST(Metrics, UndefinedMetricsAreEmpty) {
	const auto constant = metrics::compute_all(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3});
	EXPECT_FALSE(constant.r2.has_value());
	EXPECT_FALSE(constant.mase.has_value());
	const auto zeros = metrics::compute_all(std::vector<double>{0, 0, 0}, std::vector<double>{1, 0, 1});
	EXPECT_FALSE(zeros.mape.has_value());
	EXPECT_FALSE(zeros.wape.has_value());
	EXPECT_EQ(zeros.mape_excluded, 3u);
}

TEST(Metrics, RejectsBadShapes) {
	EXPECT_THROW(metrics::compute_all(std::vector<double>{1, 2}, std::vector<double>{1}), DataError);
	EXPECT_THROW(metrics::compute_all(std::vector<double>{1}, std::vector<double>{1}), DataError);
}

TEST(Metrics, ResultsCsvHasHeaderAndRows) {
	const auto r = metrics::compute_all(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2});
	const std::string text = metrics::results_csv({{"lstm", "test", r}, {"lstm", "val", r}});
	EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
	EXPECT_EQ(text.rfind("model,subset", 0), 0u);
}
