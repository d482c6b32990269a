#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace loadcast {

using Date = std::chrono::sys_days;

/// Naive local wall-clock hour, counted from 1970-01-01 00:00.
///
/// Sources are published in local time and the data period has no DST
/// transitions, so no zone conversion is ever applied.
struct HourStamp {
	std::int64_t hours = 0;

	constexpr auto operator<=>(const HourStamp &) const = default;

	constexpr HourStamp operator+(std::int64_t delta) const { return HourStamp{hours + delta}; }
	constexpr HourStamp operator-(std::int64_t delta) const { return HourStamp{hours - delta}; }
	constexpr std::int64_t operator-(HourStamp other) const { return hours - other.hours; }
};

HourStamp make_hour(Date date, int hour);

Date date_of(HourStamp stamp);
int hour_of_day(HourStamp stamp);

/// 0 = Monday ... 6 = Sunday.
int weekday_index(Date date);
inline int weekday_index(HourStamp stamp) { return weekday_index(date_of(stamp)); }

/// Accepts "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM" with optional ":SS" (must be on the hour).
/// Throws DataError on anything else.
HourStamp parse_timestamp(std::string_view text);

/// "YYYY-MM-DD".
Date parse_date(std::string_view text);

std::string format_timestamp(HourStamp stamp);
std::string format_date(Date date);

/// Inclusive day range.
struct DateSpan {
	Date first;
	Date last;

	std::int64_t days() const { return (last - first).count() + 1; }
	std::int64_t hours() const { return days() * 24; }
	HourStamp first_hour() const { return make_hour(first, 0); }
	bool contains(HourStamp stamp) const {
		return stamp >= first_hour() && stamp < first_hour() + hours();
	}
};

} // namespace loadcast
