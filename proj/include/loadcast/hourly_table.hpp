#pragma once

#include "loadcast/calendar.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace loadcast {

/// Canonical column names shared by the raw and cleaned tables.
namespace col {
inline constexpr std::string_view demand = "demand";
inline constexpr std::string_view temp = "temp";
inline constexpr std::string_view hum = "hum";
inline constexpr std::string_view pnm = "pnm";
inline constexpr std::string_view wd = "wd";
inline constexpr std::string_view ws = "ws";
inline constexpr std::string_view u_wind = "u_wind";
inline constexpr std::string_view v_wind = "v_wind";
inline constexpr std::string_view irr1 = "irr1";
inline constexpr std::string_view irr2 = "irr2";
inline constexpr std::string_view irr3 = "irr3";
inline constexpr std::string_view pre = "pre";
inline constexpr std::string_view holiday = "is_holiday";
inline constexpr std::string_view population = "population";
} // namespace col

struct Column {
	std::string name;
	std::string unit;
	std::vector<double> values;        ///< NaN where missing
	std::vector<std::uint8_t> missing; ///< 1 where the source had no usable value

	std::size_t missing_count() const;
};

/// Contiguous hourly rows starting at `start`, stored column-major.
class HourlyTable {
public:
	HourlyTable() = default;
	HourlyTable(HourStamp start, std::size_t rows) : start_(start), rows_(rows) {}

	HourStamp start() const { return start_; }
	std::size_t rows() const { return rows_; }
	HourStamp timestamp(std::size_t row) const { return start_ + static_cast<std::int64_t>(row); }
	DateSpan span() const;

	/// Appends a column filled with NaN and flagged missing; references to existing columns stay valid.
	Column &add_column(std::string_view name, std::string_view unit);

	bool has(std::string_view name) const { return find(name) != nullptr; }
	const Column *find(std::string_view name) const;
	const Column &column(std::string_view name) const;
	Column &column(std::string_view name);
	const std::deque<Column> &columns() const { return columns_; }

private:
	HourStamp start_{};
	std::size_t rows_ = 0;
	std::deque<Column> columns_;
};

/// Equality on names, units, flags and the bit patterns of every value.
bool bit_identical(const HourlyTable &a, const HourlyTable &b);

/// Writes `path` (magic "HTAB0001", little-endian f64, column-major) and a
/// JSON manifest at `path` + ".json".
void persist_table(const HourlyTable &table, const std::filesystem::path &path);
HourlyTable load_table(const std::filesystem::path &path);

} // namespace loadcast
