#include "loadcast/ingest.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/csv.hpp"
#include "loadcast/error.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <json.hpp>

namespace loadcast::ingest {

namespace {

HourStamp row_timestamp(const csv::Table &table, const csv::Row &row, std::size_t column) {
	try {
		return parse_timestamp(row.cells[column]);
	} catch (const DataError &e) {
		throw DataError(fmt::format("{}:{}: {}", table.origin, row.line, e.what()));
	}
}

std::optional<double> numeric(const csv::Row &row, std::size_t column, ParseStats *stats) {
	const auto cell = csv::parse_number(row.cells[column]);
	if (!cell.ok && stats != nullptr) {
		++stats->invalid_cells;
	}
	return cell.value;
}

template <typename Row>
void sort_and_check(std::vector<Row> &rows, const std::string &origin) {
	std::stable_sort(rows.begin(), rows.end(),
	                 [](const Row &a, const Row &b) { return a.timestamp < b.timestamp; });
	for (std::size_t i = 1; i < rows.size(); ++i) {
		if (rows[i].timestamp == rows[i - 1].timestamp) {
			throw DataError(
			    fmt::format("'{}' has duplicate timestamp {}", origin, format_timestamp(rows[i].timestamp)));
		}
	}
}

ColumnMap column_map_from(const nlohmann::json &object) {
	ColumnMap map;
	if (!object.is_object()) {
		return map;
	}
	for (const auto &[field, header] : object.items()) {
		map.set(field, header.get<std::string>());
	}
	return map;
}

} // namespace

std::string_view ColumnMap::operator[](std::string_view field) const {
	if (const auto it = names_.find(field); it != names_.end()) {
		return it->second;
	}
	return field;
}

SourceSchemas load_schemas(const std::filesystem::path &path) {
	nlohmann::json doc;
	try {
		doc = nlohmann::json::parse(io::read_text(path));
	} catch (const nlohmann::json::exception &e) {
		throw SchemaError(fmt::format("schema file '{}': {}", path.string(), e.what()));
	}
	SourceSchemas schemas;
	const auto section = [&](const char *name) { return doc.contains(name) ? doc[name] : nlohmann::json::object(); };
	schemas.weather = column_map_from(section("weather"));
	schemas.satellite = column_map_from(section("satellite"));
	schemas.demand = column_map_from(section("demand"));
	schemas.calendar = column_map_from(section("calendar"));
	schemas.population = column_map_from(section("population"));
	return schemas;
}

bool CalendarTable::is_holiday(Date date) const {
	const auto it = entries_.find(date);
	if (it == entries_.end()) {
		throw DataError(fmt::format("calendar has no entry for {}", format_date(date)));
	}
	return it->second;
}

double PopulationTable::at(Date date) const {
	if (years_.empty()) {
		throw DataError("population table is empty");
	}
	const auto anchor = [](int year) { return Date{std::chrono::year{year} / 1 / 1}; };
	const auto upper = years_.upper_bound(static_cast<int>(std::chrono::year_month_day{date}.year()));
	if (upper == years_.begin()) {
		return years_.begin()->second;
	}
	const auto lower = std::prev(upper);
	if (upper == years_.end()) {
		return lower->second;
	}
	const double span = static_cast<double>((anchor(upper->first) - anchor(lower->first)).count());
	const double offset = static_cast<double>((date - anchor(lower->first)).count());
	const double frac = std::clamp(offset / span, 0.0, 1.0);
	return lower->second + frac * (upper->second - lower->second);
}

std::vector<RawWeatherRow> parse_weather_csv(const std::filesystem::path &path, const ColumnMap &schema,
                                             ParseStats *stats) {
	const auto table = csv::read(path);
	const auto ts = table.column(schema["timestamp"]);
	const auto temp = table.column(schema["temp"]);
	const auto hum = table.column(schema["hum"]);
	const auto pnm = table.column(schema["pnm"]);
	const auto wd = table.column(schema["wd"]);
	const auto ws = table.column(schema["ws"]);

	std::vector<RawWeatherRow> rows;
	rows.reserve(table.rows.size());
	for (const auto &row : table.rows) {
		RawWeatherRow out;
		out.timestamp = row_timestamp(table, row, ts);
		out.temp = numeric(row, temp, stats);
		out.hum = numeric(row, hum, stats);
		out.pnm = numeric(row, pnm, stats);
		out.wd = numeric(row, wd, stats);
		out.ws = numeric(row, ws, stats);
		if (out.wd && (*out.wd < 0.0 || *out.wd > 360.0)) {
			out.wd.reset();
			if (stats != nullptr) {
				++stats->invalid_cells;
			}
		}
		if (out.ws && *out.ws < 0.0) {
			out.ws.reset();
			if (stats != nullptr) {
				++stats->invalid_cells;
			}
		}
		rows.push_back(out);
	}
	if (stats != nullptr) {
		stats->rows = rows.size();
	}
	sort_and_check(rows, table.origin);
	return rows;
}

std::vector<RawSatelliteRow> parse_satellite_csv(const std::filesystem::path &path, const ColumnMap &schema,
                                                 ParseStats *stats) {
	const auto table = csv::read(path);
	const auto ts = table.column(schema["timestamp"]);
	const auto irr1 = table.column(schema["irr1"]);
	const auto irr2 = table.column(schema["irr2"]);
	const auto irr3 = table.column(schema["irr3"]);
	const auto pre = table.column(schema["pre"]);

	std::vector<RawSatelliteRow> rows;
	rows.reserve(table.rows.size());
	for (const auto &row : table.rows) {
		RawSatelliteRow out;
		out.timestamp = row_timestamp(table, row, ts);
		out.irr1 = numeric(row, irr1, stats);
		out.irr2 = numeric(row, irr2, stats);
		out.irr3 = numeric(row, irr3, stats);
		out.pre = numeric(row, pre, stats);
		rows.push_back(out);
	}
	if (stats != nullptr) {
		stats->rows = rows.size();
	}
	sort_and_check(rows, table.origin);
	return rows;
}

std::vector<RawDemandRow> parse_demand_csv(const std::filesystem::path &path, const ColumnMap &schema,
                                           ParseStats *stats) {
	const auto table = csv::read(path);
	const auto ts = table.column(schema["timestamp"]);
	const auto demand = table.column(schema["demand"]);

	std::vector<RawDemandRow> rows;
	rows.reserve(table.rows.size());
	for (const auto &row : table.rows) {
		RawDemandRow out;
		out.timestamp = row_timestamp(table, row, ts);
		out.demand = numeric(row, demand, stats);
		if (out.demand && *out.demand <= 0.0) {
			out.demand.reset();
			if (stats != nullptr) {
				++stats->invalid_cells;
			}
		}
		rows.push_back(out);
	}
	if (stats != nullptr) {
		stats->rows = rows.size();
	}
	sort_and_check(rows, table.origin);
	return rows;
}

CalendarTable parse_calendar_csv(const std::filesystem::path &path, const ColumnMap &schema) {
	const auto table = csv::read(path);
	const auto date = table.column(schema["date"]);
	const auto flag = table.column(schema["is_holiday"]);
	CalendarTable calendar;
	for (const auto &row : table.rows) {
		Date d;
		try {
			d = parse_date(row.cells[date]);
		} catch (const DataError &e) {
			throw DataError(fmt::format("{}:{}: {}", table.origin, row.line, e.what()));
		}
		const auto &text = row.cells[flag];
		bool holiday = false;
		if (text == "1" || text == "true" || text == "TRUE" || text == "yes") {
			holiday = true;
		} else if (!(text == "0" || text == "false" || text == "FALSE" || text == "no")) {
			throw DataError(fmt::format("{}:{}: holiday flag '{}' is not boolean", table.origin, row.line, text));
		}
		if (calendar.contains(d)) {
			throw DataError(fmt::format("{}:{}: duplicate date {}", table.origin, row.line, format_date(d)));
		}
		calendar.set(d, holiday);
	}
	return calendar;
}

PopulationTable parse_population_csv(const std::filesystem::path &path, const ColumnMap &schema) {
	const auto table = csv::read(path);
	const auto year = table.column(schema["year"]);
	const auto persons = table.column(schema["population"]);
	PopulationTable population;
	for (const auto &row : table.rows) {
		const auto y = csv::parse_number(row.cells[year]);
		const auto p = csv::parse_number(row.cells[persons]);
		if (!y.value || !p.value || *p.value <= 0.0) {
			throw DataError(fmt::format("{}:{}: population rows need a year and a positive total", table.origin,
			                            row.line));
		}
		population.set(static_cast<int>(*y.value), *p.value);
	}
	return population;
}

HourlyTable merge_sources(const DateSpan &span, const std::vector<RawWeatherRow> &weather,
                          const std::vector<RawSatelliteRow> &satellite, const std::vector<RawDemandRow> &demand,
                          const CalendarTable &calendar, const PopulationTable &population) {
	if (span.last < span.first) {
		throw UsageError("span ends before it starts");
	}
	const auto rows = static_cast<std::size_t>(span.hours());
	const HourStamp start = span.first_hour();
	HourlyTable table(start, rows);

	auto &demand_col = table.add_column(col::demand, "MW");
	auto &temp = table.add_column(col::temp, "degC");
	auto &hum = table.add_column(col::hum, "%");
	auto &pnm = table.add_column(col::pnm, "hPa");
	auto &wd = table.add_column(col::wd, "deg");
	auto &ws = table.add_column(col::ws, "km/h");
	auto &irr1 = table.add_column(col::irr1, "MJ/h");
	auto &irr2 = table.add_column(col::irr2, "MJ/h");
	auto &irr3 = table.add_column(col::irr3, "MJ/h");
	auto &pre = table.add_column(col::pre, "mm/h");
	auto &holiday = table.add_column(col::holiday, "flag");
	auto &pop = table.add_column(col::population, "persons");

	const auto put = [](Column &c, std::size_t i, const std::optional<double> &v) {
		if (v) {
			c.values[i] = *v;
			c.missing[i] = 0;
		}
	};
	const auto slot = [&](HourStamp stamp) -> std::optional<std::size_t> {
		if (!span.contains(stamp)) {
			return std::nullopt;
		}
		return static_cast<std::size_t>(stamp - start);
	};

	std::vector<std::uint8_t> seen(rows, 0);
	for (const auto &r : weather) {
		if (const auto i = slot(r.timestamp)) {
			if (seen[*i]++ != 0) {
				throw DataError(fmt::format("weather has overlapping rows at {}", format_timestamp(r.timestamp)));
			}
			put(temp, *i, r.temp);
			put(hum, *i, r.hum);
			put(pnm, *i, r.pnm);
			put(wd, *i, r.wd);
			put(ws, *i, r.ws);
		}
	}
	seen.assign(rows, 0);
	for (const auto &r : satellite) {
		if (const auto i = slot(r.timestamp)) {
			if (seen[*i]++ != 0) {
				throw DataError(fmt::format("satellite has overlapping rows at {}", format_timestamp(r.timestamp)));
			}
			put(irr1, *i, r.irr1);
			put(irr2, *i, r.irr2);
			put(irr3, *i, r.irr3);
			put(pre, *i, r.pre);
		}
	}
	seen.assign(rows, 0);
	for (const auto &r : demand) {
		if (const auto i = slot(r.timestamp)) {
			if (seen[*i]++ != 0) {
				throw DataError(fmt::format("demand has overlapping rows at {}", format_timestamp(r.timestamp)));
			}
			put(demand_col, *i, r.demand);
		}
	}
	std::vector<std::string> absent;
	for (std::size_t i = 0; i < rows; ++i) {
		if (seen[i] == 0) {
			absent.push_back(format_timestamp(table.timestamp(i)));
		}
	}
	if (!absent.empty()) {
		const auto shown = std::min<std::size_t>(absent.size(), 10);
		throw DataError(fmt::format("demand is absent for {} hour(s) of the span, first: {}", absent.size(),
		                            fmt::join(absent.begin(), absent.begin() + static_cast<std::ptrdiff_t>(shown),
		                                      ", ")));
	}

	if (population.empty()) {
		throw DataError("population table is empty");
	}
	for (Date d = span.first; d <= span.last; d += std::chrono::days{1}) {
		const double flag = calendar.is_holiday(d) ? 1.0 : 0.0;
		const double persons = population.at(d);
		const auto base = static_cast<std::size_t>(make_hour(d, 0) - start);
		for (std::size_t h = 0; h < 24; ++h) {
			put(holiday, base + h, flag);
			put(pop, base + h, persons);
		}
	}
	return table;
}

SourcePaths SourcePaths::in_directory(const std::filesystem::path &dir) {
	return SourcePaths{dir / "weather.csv", dir / "satellite.csv", dir / "demand.csv", dir / "calendar.csv",
	                   dir / "population.csv"};
}

HourlyTable ingest_sources(const SourcePaths &paths, const DateSpan &span, const SourceSchemas &schemas) {
	return merge_sources(span, parse_weather_csv(paths.weather, schemas.weather),
	                     parse_satellite_csv(paths.satellite, schemas.satellite),
	                     parse_demand_csv(paths.demand, schemas.demand),
	                     parse_calendar_csv(paths.calendar, schemas.calendar),
	                     parse_population_csv(paths.population, schemas.population));
}

} // namespace loadcast::ingest
