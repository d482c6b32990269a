#pragma once

#include "loadcast/calendar.hpp"
#include "loadcast/hourly_table.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loadcast::ingest {

/// Logical field name -> column header in a source file. Unmapped fields use
/// their logical name as the header.
class ColumnMap {
public:
	ColumnMap() = default;
	explicit ColumnMap(std::map<std::string, std::string, std::less<>> names) : names_(std::move(names)) {}

	std::string_view operator[](std::string_view field) const;
	void set(std::string field, std::string header) { names_[std::move(field)] = std::move(header); }

private:
	std::map<std::string, std::string, std::less<>> names_;
};

struct SourceSchemas {
	ColumnMap weather;    ///< timestamp, temp, hum, pnm, wd, ws
	ColumnMap satellite;  ///< timestamp, irr1, irr2, irr3, pre
	ColumnMap demand;     ///< timestamp, demand
	ColumnMap calendar;   ///< date, is_holiday
	ColumnMap population; ///< year, population
};

/// JSON object with one object per source, e.g. {"weather": {"temp": "TEMP"}}.
SourceSchemas load_schemas(const std::filesystem::path &path);

struct RawWeatherRow {
	HourStamp timestamp;
	std::optional<double> temp; ///< degC
	std::optional<double> hum;  ///< % relative
	std::optional<double> pnm;  ///< hPa
	std::optional<double> wd;   ///< degrees, [0, 360]
	std::optional<double> ws;   ///< km/h
};

struct RawSatelliteRow {
	HourStamp timestamp;
	std::optional<double> irr1; ///< MJ/h
	std::optional<double> irr2;
	std::optional<double> irr3;
	std::optional<double> pre; ///< mm/h
};

struct RawDemandRow {
	HourStamp timestamp;
	std::optional<double> demand; ///< MW
};

class CalendarTable {
public:
	void set(Date date, bool holiday) { entries_[date] = holiday; }
	bool contains(Date date) const { return entries_.contains(date); }
	/// Throws DataError when the date has no entry.
	bool is_holiday(Date date) const;
	std::size_t size() const { return entries_.size(); }

private:
	std::map<Date, bool> entries_;
};

/// Annual province totals, interpolated linearly at day resolution between
/// January 1st anchors; held flat outside the covered years.
class PopulationTable {
public:
	void set(int year, double persons) { years_[year] = persons; }
	double at(Date date) const;
	bool empty() const { return years_.empty(); }
	const std::map<int, double> &years() const { return years_; }

private:
	std::map<int, double> years_;
};

/// Counts of cells that were present but unusable (not a number, out of range).
struct ParseStats {
	std::size_t rows = 0;
	std::size_t invalid_cells = 0;
};

std::vector<RawWeatherRow> parse_weather_csv(const std::filesystem::path &path, const ColumnMap &schema = {},
                                             ParseStats *stats = nullptr);
std::vector<RawSatelliteRow> parse_satellite_csv(const std::filesystem::path &path, const ColumnMap &schema = {},
                                                 ParseStats *stats = nullptr);
std::vector<RawDemandRow> parse_demand_csv(const std::filesystem::path &path, const ColumnMap &schema = {},
                                           ParseStats *stats = nullptr);
CalendarTable parse_calendar_csv(const std::filesystem::path &path, const ColumnMap &schema = {});
PopulationTable parse_population_csv(const std::filesystem::path &path, const ColumnMap &schema = {});

/// Joins every source on the hour grid of `span`.
///
/// Weather and satellite hours absent from their files become missing cells.
/// Every hour of the span must have a demand value; the calendar must cover
/// every date and the population table must be non-empty.
HourlyTable merge_sources(const DateSpan &span, const std::vector<RawWeatherRow> &weather,
                          const std::vector<RawSatelliteRow> &satellite, const std::vector<RawDemandRow> &demand,
                          const CalendarTable &calendar, const PopulationTable &population);

struct SourcePaths {
	std::filesystem::path weather;
	std::filesystem::path satellite;
	std::filesystem::path demand;
	std::filesystem::path calendar;
	std::filesystem::path population;

	/// weather.csv, satellite.csv, demand.csv, calendar.csv, population.csv under `dir`.
	static SourcePaths in_directory(const std::filesystem::path &dir);
};

/// Parses every source and merges over `span`.
HourlyTable ingest_sources(const SourcePaths &paths, const DateSpan &span, const SourceSchemas &schemas = {});

} // namespace loadcast::ingest
