#pragma once

#include "loadcast/calendar.hpp"
#include "loadcast/ingest.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace loadcast::synthetic {

/// A complete, gap-free set of raw sources in the ingest schemas.
struct SyntheticSources {
	DateSpan span;
	std::vector<ingest::RawWeatherRow> weather;
	std::vector<ingest::RawSatelliteRow> satellite;
	std::vector<ingest::RawDemandRow> demand;
	ingest::CalendarTable calendar;
	ingest::PopulationTable population;
};

/// Hourly sources for `days` days from 2018-01-01: demand with daily, weekly
/// and annual cycles, a quadratic temperature response, holiday drops and
/// seeded noise; weather from smooth seasonal and diurnal cycles.
/// Throws UsageError for fewer than three days.
SyntheticSources generate_synthetic(std::size_t days, std::uint64_t seed);

/// Writes weather.csv, satellite.csv, demand.csv, calendar.csv and population.csv.
void write_sources(const SyntheticSources &sources, const std::filesystem::path &dir);

} // namespace loadcast::synthetic
