#include "loadcast/calendar.hpp"

#include "loadcast/error.hpp"

#include <charconv>
#include <fmt/format.h>

namespace loadcast {

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t width, std::string_view whole) {
	if (pos + width > text.size()) {
		throw DataError(fmt::format("malformed timestamp '{}'", whole));
	}
	int value = 0;
	const char *first = text.data() + pos;
	const auto [ptr, ec] = std::from_chars(first, first + width, value);
	if (ec != std::errc{} || ptr != first + width) {
		throw DataError(fmt::format("malformed timestamp '{}'", whole));
	}
	return value;
}

std::string_view trim(std::string_view text) {
	while (!text.empty() && (text.front() == ' ' || text.front() == '\t' || text.front() == '"')) {
		text.remove_prefix(1);
	}
	while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r' || text.back() == '"')) {
		text.remove_suffix(1);
	}
	return text;
}

Date checked_date(int y, int m, int d, std::string_view whole) {
	const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
	                                      std::chrono::day{static_cast<unsigned>(d)}};
	if (!ymd.ok()) {
		throw DataError(fmt::format("invalid calendar date '{}'", whole));
	}
	return Date{ymd};
}

} // namespace

HourStamp make_hour(Date date, int hour) {
	return HourStamp{static_cast<std::int64_t>(date.time_since_epoch().count()) * 24 + hour};
}

Date date_of(HourStamp stamp) {
	std::int64_t days = stamp.hours / 24;
	if (stamp.hours % 24 < 0) {
		--days;
	}
	return Date{std::chrono::days{days}};
}

int hour_of_day(HourStamp stamp) {
	const auto rem = static_cast<int>(stamp.hours % 24);
	return rem < 0 ? rem + 24 : rem;
}

int weekday_index(Date date) {
	return static_cast<int>(std::chrono::weekday{date}.iso_encoding()) - 1;
}

Date parse_date(std::string_view text) {
	const std::string_view s = trim(text);
	if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
		throw DataError(fmt::format("malformed date '{}'", text));
	}
	return checked_date(parse_fixed(s, 0, 4, text), parse_fixed(s, 5, 2, text), parse_fixed(s, 8, 2, text), text);
}

HourStamp parse_timestamp(std::string_view text) {
	const std::string_view s = trim(text);
	if (s.size() < 16 || (s[10] != ' ' && s[10] != 'T') || s[13] != ':') {
		throw DataError(fmt::format("malformed timestamp '{}'", text));
	}
	const Date date = parse_date(s.substr(0, 10));
	const int hour = parse_fixed(s, 11, 2, text);
	const int minute = parse_fixed(s, 14, 2, text);
	int second = 0;
	if (s.size() == 19 && s[16] == ':') {
		second = parse_fixed(s, 17, 2, text);
	} else if (s.size() != 16) {
		throw DataError(fmt::format("malformed timestamp '{}'", text));
	}
	if (hour > 23 || minute != 0 || second != 0) {
		throw DataError(fmt::format("timestamp '{}' is not on an hour boundary", text));
	}
	return make_hour(date, hour);
}

std::string format_date(Date date) {
	const std::chrono::year_month_day ymd{date};
	return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
	                   static_cast<unsigned>(ymd.day()));
}

std::string format_timestamp(HourStamp stamp) {
	return fmt::format("{} {:02d}:00", format_date(date_of(stamp)), hour_of_day(stamp));
}

} // namespace loadcast
