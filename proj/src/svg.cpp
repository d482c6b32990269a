#include "loadcast/svg.hpp"

#include "loadcast/binary_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace loadcast::svg {

namespace {

constexpr std::array<const char *, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

std::string escape(std::string_view text) {
	std::string out;
	for (const char c : text) {
		switch (c) {
		case '<':
			out += "&lt;";
			break;
		case '>':
			out += "&gt;";
			break;
		case '&':
			out += "&amp;";
			break;
		case '"':
			out += "&quot;";
			break;
		default:
			out += c;
		}
	}
	return out;
}

double nice_step(double span, int target) {
	if (!(span > 0.0)) {
		return 1.0;
	}
	const double raw = span / target;
	const double mag = std::pow(10.0, std::floor(std::log10(raw)));
	const double norm = raw / mag;
	const double step = norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0;
	return step * mag;
}

struct Range {
	double lo = std::numeric_limits<double>::infinity();
	double hi = -std::numeric_limits<double>::infinity();

	void add(double v) {
		if (std::isfinite(v)) {
			lo = std::min(lo, v);
			hi = std::max(hi, v);
		}
	}
	void finish() {
		if (!std::isfinite(lo)) {
			lo = 0.0;
			hi = 1.0;
		}
		if (lo == hi) {
			lo -= 0.5;
			hi += 0.5;
		}
	}
};

class Canvas {
public:
	Canvas(const ChartOptions &options, Range x, Range y) : o_(options), x_(x), y_(y) {
		x_.finish();
		y_.finish();
		const double pad = (y_.hi - y_.lo) * 0.05;
		y_.lo -= pad;
		y_.hi += pad;
		out_ = fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
		                   "font-family=\"sans-serif\" font-size=\"12\">\n",
		                   o_.width, o_.height);
		out_ += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", o_.width, o_.height);
		out_ += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
		                    o_.width / 2, escape(o_.title));
	}

	double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * plot_w(); }
	double py(double y) const { return kTop + (y_.hi - y) / (y_.hi - y_.lo) * plot_h(); }
	double plot_w() const { return o_.width - kLeft - kRight; }
	double plot_h() const { return o_.height - kTop - kBottom; }
	const Range &x_range() const { return x_; }

	void axes(bool x_ticks = true) {
		const double step_y = nice_step(y_.hi - y_.lo, 6);
		for (double v = std::ceil(y_.lo / step_y) * step_y; v <= y_.hi; v += step_y) {
			out_ += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", kLeft,
			                    py(v), kLeft + plot_w(), py(v));
			out_ += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:g}</text>\n", kLeft - 6,
			                    py(v) + 4, v);
		}
		if (x_ticks) {
			const double step_x = nice_step(x_.hi - x_.lo, 8);
			for (double v = std::ceil(x_.lo / step_x) * step_x; v <= x_.hi; v += step_x) {
				out_ += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n", px(v),
				                    kTop + plot_h() + 16, v);
			}
		}
		out_ += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#333\"/>\n",
		                    kLeft, kTop, plot_w(), plot_h());
		out_ += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + plot_w() / 2,
		                    o_.height - 12, escape(o_.x_label));
		out_ += fmt::format("<text transform=\"translate(16 {:.1f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
		                    kTop + plot_h() / 2, escape(o_.y_label));
	}

	void legend(const std::vector<Series> &series) {
		for (std::size_t i = 0; i < series.size(); ++i) {
			const double y = kTop + 14 + 16 * static_cast<double>(i);
			out_ += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"12\" height=\"3\" fill=\"{}\"/>\n",
			                    kLeft + 10, y - 4, kPalette[i % kPalette.size()]);
			out_ += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", kLeft + 28, y,
			                    escape(series[i].label));
		}
	}

	std::string &body() { return out_; }
	std::string finish() { return out_ + "</svg>\n"; }

private:
	ChartOptions o_;
	Range x_;
	Range y_;
	std::string out_;
};

} // namespace

std::string line_chart(const std::vector<Series> &series, const ChartOptions &options) {
	Range xr;
	Range yr;
	for (const auto &s : series) {
		for (const double v : s.x) {
			xr.add(v);
		}
		for (const double v : s.y) {
			yr.add(v);
		}
	}
	Canvas c(options, xr, yr);
	c.axes();
	for (std::size_t i = 0; i < series.size(); ++i) {
		std::string points;
		const auto &s = series[i];
		for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
			if (std::isfinite(s.y[k])) {
				points += fmt::format("{:.1f},{:.1f} ", c.px(s.x[k]), c.py(s.y[k]));
			}
		}
		c.body() += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
		                        kPalette[i % kPalette.size()], points);
	}
	c.legend(series);
	return c.finish();
}

std::string scatter_chart(const std::vector<Series> &series, const ChartOptions &options, bool identity_line) {
	Range xr;
	Range yr;
	for (const auto &s : series) {
		for (const double v : s.x) {
			xr.add(v);
		}
		for (const double v : s.y) {
			yr.add(v);
		}
	}
	if (identity_line) {
		xr.add(yr.lo);
		xr.add(yr.hi);
		yr.add(xr.lo);
		yr.add(xr.hi);
	}
	Canvas c(options, xr, yr);
	c.axes();
	if (identity_line) {
		const double lo = c.x_range().lo;
		const double hi = c.x_range().hi;
		c.body() += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#888\" "
		                        "stroke-dasharray=\"4 3\"/>\n",
		                        c.px(lo), c.py(lo), c.px(hi), c.py(hi));
	}
	for (std::size_t i = 0; i < series.size(); ++i) {
		const auto &s = series[i];
		for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
			if (std::isfinite(s.x[k]) && std::isfinite(s.y[k])) {
				c.body() += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"1.8\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
				                        c.px(s.x[k]), c.py(s.y[k]), kPalette[i % kPalette.size()]);
			}
		}
	}
	c.legend(series);
	return c.finish();
}

std::string histogram_chart(const eval::Histogram &histogram, const ChartOptions &options) {
	Range xr;
	Range yr;
	xr.add(histogram.origin);
	xr.add(histogram.origin + histogram.bin_width * static_cast<double>(histogram.counts.size()));
	yr.add(0.0);
	for (const double d : histogram.density) {
		yr.add(d);
	}
	Canvas c(options, xr, yr);
	c.axes();
	for (std::size_t i = 0; i < histogram.density.size(); ++i) {
		const double left = histogram.origin + histogram.bin_width * static_cast<double>(i);
		const double x0 = c.px(left);
		const double x1 = c.px(left + histogram.bin_width);
		const double y0 = c.py(histogram.density[i]);
		c.body() += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\" "
		                        "stroke=\"white\" stroke-width=\"0.5\"/>\n",
		                        x0, y0, std::max(x1 - x0, 0.5), c.py(0.0) - y0, kPalette[0]);
	}
	c.body() += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">mean {:.2f}, sd {:.2f}</text>\n",
	                        c.px(xr.hi) - 8, kTop + 16.0, histogram.mean, histogram.sd);
	return c.finish();
}

std::string boxplot_chart(const eval::GroupedErrorSummary &summary, const ChartOptions &options) {
	Range xr;
	Range yr;
	const int keys = summary.key == eval::GroupKey::weekday ? 7 : 24;
	xr.add(-0.5);
	xr.add(keys - 0.5);
	for (const auto &row : summary.rows) {
		if (row.stats.n == 0) {
			continue;
		}
		yr.add(row.stats.lower_whisker);
		yr.add(row.stats.upper_whisker);
		for (const double v : row.stats.outliers) {
			yr.add(v);
		}
	}
	Canvas c(options, xr, yr);
	c.axes(false);
	static constexpr const char *kDays[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
	for (int k = 0; k < keys; ++k) {
		const auto label = summary.key == eval::GroupKey::weekday ? std::string(kDays[k]) : std::to_string(k);
		c.body() += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", c.px(k),
		                        c.plot_h() + kTop + 16, label);
	}
	const double slot = c.plot_w() / keys;
	for (const auto &row : summary.rows) {
		if (row.stats.n == 0) {
			continue;
		}
		const double centre = c.px(row.key) + (row.holiday ? 0.2 : -0.2) * slot;
		const double half = 0.15 * slot;
		const char *colour = row.holiday ? kPalette[1] : kPalette[0];
		const auto &s = row.stats;
		c.body() += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"{3}\"/>\n",
		                        centre, c.py(s.lower_whisker), c.py(s.upper_whisker), colour);
		c.body() += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"white\" "
		                        "stroke=\"{}\"/>\n",
		                        centre - half, c.py(s.q3), 2 * half, std::max(c.py(s.q1) - c.py(s.q3), 0.5), colour);
		c.body() += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\" "
		                        "stroke-width=\"2\"/>\n",
		                        centre - half, c.py(s.median), centre + half, c.py(s.median), colour);
		for (const double v : s.outliers) {
			c.body() += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"1.5\" fill=\"none\" stroke=\"{}\"/>\n",
			                        centre, c.py(v), colour);
		}
	}
	c.legend({{"non-holiday", {}, {}}, {"holiday", {}, {}}});
	return c.finish();
}

void save(const std::filesystem::path &path, const std::string &document) {
	io::write_text(path, document);
}

} // namespace loadcast::svg
