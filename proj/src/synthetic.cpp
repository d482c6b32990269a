#include "loadcast/synthetic.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/csv.hpp"
#include "loadcast/error.hpp"
#include "loadcast/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace loadcast::synthetic {

namespace {

using std::chrono::day;
using std::chrono::month;
using std::chrono::year;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Month/day pairs treated as holidays every year.
constexpr std::array<std::pair<unsigned, unsigned>, 9> kHolidays{
    {{1, 1}, {3, 24}, {4, 2}, {5, 1}, {5, 25}, {6, 20}, {7, 9}, {12, 8}, {12, 25}}};

bool synthetic_holiday(Date date) {
	const std::chrono::year_month_day ymd{date};
	for (const auto &[m, d] : kHolidays) {
		if (static_cast<unsigned>(ymd.month()) == m && static_cast<unsigned>(ymd.day()) == d) {
			return true;
		}
	}
	return false;
}

double gaussian_bump(double hour, double centre, double width) {
	double d = std::abs(hour - centre);
	d = std::min(d, 24.0 - d);
	return std::exp(-d * d / (2.0 * width * width));
}

double round_to(double v, double step) {
	return std::round(v / step) * step;
}

} // namespace

SyntheticSources generate_synthetic(std::size_t days, std::uint64_t seed) {
	if (days < 3) {
		throw UsageError("synthetic data needs at least three days");
	}
	SyntheticSources s;
	const Date first = std::chrono::sys_days{year{2018} / month{1} / day{1}};
	s.span = DateSpan{first, first + std::chrono::days{static_cast<int>(days) - 1}};

	Rng weather_rng(derive_seed(seed, "weather"));
	Rng demand_rng(derive_seed(seed, "demand"));
	Rng rain_rng(derive_seed(seed, "rain"));

	double temp_anomaly = 0.0;
	double day_level = 0.0;
	double rain_left = 0.0;
	for (std::size_t d = 0; d < days; ++d) {
		const Date date = first + std::chrono::days{static_cast<int>(d)};
		const bool holiday = synthetic_holiday(date);
		s.calendar.set(date, holiday);
		const int weekday = weekday_index(date);
		const double doy = static_cast<double>((date - std::chrono::sys_days{std::chrono::year_month_day{date}.year() /
		                                                                      month{1} / day{1}})
		                                           .count());
		const double season = std::cos(kTwoPi * (doy - 15.0) / 365.25); // +1 mid January
		day_level = 0.7 * day_level + demand_rng.normal() * 12.0;

		for (int h = 0; h < 24; ++h) {
			const HourStamp stamp = make_hour(date, h);
			const double hour = static_cast<double>(h);
			const double t = static_cast<double>(d * 24 + static_cast<std::size_t>(h));

			temp_anomaly = 0.97 * temp_anomaly + weather_rng.normal() * 0.35;
			const double temp = 17.4 + 7.5 * season + 4.0 * std::cos(kTwoPi * (hour - 15.0) / 24.0) + temp_anomaly;
			const double hum = std::clamp(65.0 - 1.8 * (temp - 17.4) + weather_rng.normal() * 4.0, 8.0, 100.0);
			const double pnm = 1013.0 - 4.0 * season + 2.0 * std::sin(kTwoPi * t / 97.0) + weather_rng.normal();
			double wd = std::fmod(200.0 + 140.0 * std::sin(kTwoPi * t / 61.0) + weather_rng.normal() * 15.0, 360.0);
			if (wd < 0.0) {
				wd += 360.0;
			}
			const double ws =
			    std::max(0.0, 11.0 + 5.0 * std::sin(kTwoPi * (hour - 10.0) / 24.0) + weather_rng.normal() * 2.5);
			s.weather.push_back({stamp, round_to(temp, 0.1), round_to(hum, 1.0), round_to(pnm, 0.1),
			                     round_to(wd, 1.0), round_to(ws, 0.1)});

			const double sun = h >= 6 && h <= 19 ? std::sin(std::numbers::pi * (hour - 6.0) / 13.0) : 0.0;
			const double clear = 2.4 + 0.9 * season;
			std::array<double, 3> irr{};
			for (std::size_t k = 0; k < irr.size(); ++k) {
				const double scale = 0.9 + 0.1 * static_cast<double>(k);
				irr[k] = std::max(0.0, sun * clear * scale * (1.0 + 0.05 * weather_rng.normal()));
			}
			if (rain_left <= 0.0 && rain_rng.uniform() < 0.01) {
				rain_left = 1.0 + static_cast<double>(rain_rng.below(6));
			}
			double pre = 0.0;
			if (rain_left > 0.0) {
				pre = round_to(0.2 + 3.0 * rain_rng.uniform(), 0.1);
				rain_left -= 1.0;
			}
			s.satellite.push_back({stamp, round_to(irr[0], 0.001), round_to(irr[1], 0.001), round_to(irr[2], 0.001),
			                       pre});

			double demand = 1150.0;
			demand += 250.0 * gaussian_bump(hour, 20.0, 2.0);
			demand += 110.0 * gaussian_bump(hour, 11.5, 3.0);
			demand -= 190.0 * gaussian_bump(hour, 5.0, 1.5);
			demand += 25.0 * std::cos(kTwoPi * t / 168.0);
			demand += 60.0 * season;
			demand += 0.8 * (temp - 15.0) * (temp - 15.0);
			const double daytime = 0.4 + 0.6 * gaussian_bump(hour, 14.0, 5.0);
			if (holiday || weekday == 6) {
				demand -= 150.0 * daytime;
			} else if (weekday == 5) {
				demand -= 90.0 * daytime;
			}
			demand += day_level + demand_rng.normal() * 8.0;
			s.demand.push_back({stamp, round_to(demand, 0.1)});
		}
	}

	const int first_year = static_cast<int>(std::chrono::year_month_day{s.span.first}.year());
	const int last_year = static_cast<int>(std::chrono::year_month_day{s.span.last}.year());
	for (int y = first_year; y <= last_year + 1; ++y) {
		s.population.set(y, std::round(3.6e6 * std::pow(1.01, y - 2018)));
	}
	return s;
}

void write_sources(const SyntheticSources &sources, const std::filesystem::path &dir) {
	std::filesystem::create_directories(dir);

	csv::Writer weather({"timestamp", "temp", "hum", "pnm", "wd", "ws"});
	for (const auto &r : sources.weather) {
		weather.cell(format_timestamp(r.timestamp));
		weather.cell(r.temp);
		weather.cell(r.hum);
		weather.cell(r.pnm);
		weather.cell(r.wd);
		weather.cell(r.ws);
		weather.end_row();
	}
	weather.save(dir / "weather.csv");

	csv::Writer satellite({"timestamp", "irr1", "irr2", "irr3", "pre"});
	for (const auto &r : sources.satellite) {
		satellite.cell(format_timestamp(r.timestamp));
		satellite.cell(r.irr1);
		satellite.cell(r.irr2);
		satellite.cell(r.irr3);
		satellite.cell(r.pre);
		satellite.end_row();
	}
	satellite.save(dir / "satellite.csv");

	csv::Writer demand({"timestamp", "demand"});
	for (const auto &r : sources.demand) {
		demand.cell(format_timestamp(r.timestamp));
		demand.cell(r.demand);
		demand.end_row();
	}
	demand.save(dir / "demand.csv");

	csv::Writer calendar({"date", "is_holiday"});
	for (Date d = sources.span.first; d <= sources.span.last; d += std::chrono::days{1}) {
		calendar.cell(format_date(d));
		calendar.cell(sources.calendar.is_holiday(d) ? "1" : "0");
		calendar.end_row();
	}
	calendar.save(dir / "calendar.csv");

	csv::Writer population({"year", "population"});
	for (const auto &[y, p] : sources.population.years()) {
		population.cell(static_cast<std::size_t>(y));
		population.cell(p);
		population.end_row();
	}
	population.save(dir / "population.csv");
}

} // namespace loadcast::synthetic
