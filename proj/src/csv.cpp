#include "loadcast/csv.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/error.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>

namespace loadcast::csv {

namespace {

std::string_view trim(std::string_view text) {
	while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
		text.remove_prefix(1);
	}
	while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
		text.remove_suffix(1);
	}
	return text;
}

std::vector<std::string> split(std::string_view line, char delimiter) {
	std::vector<std::string> cells;
	std::size_t start = 0;
	while (true) {
		const auto pos = line.find(delimiter, start);
		const auto piece = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
		cells.emplace_back(trim(piece));
		if (pos == std::string_view::npos) {
			break;
		}
		start = pos + 1;
	}
	return cells;
}

} // namespace

std::optional<std::size_t> Table::find_column(std::string_view name) const {
	for (std::size_t i = 0; i < header.size(); ++i) {
		if (header[i] == name) {
			return i;
		}
	}
	return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
	if (const auto idx = find_column(name)) {
		return *idx;
	}
	throw SchemaError(fmt::format("'{}' has no column '{}'", origin, name));
}

Table parse(std::string_view text, std::string origin, char delimiter) {
	Table table;
	table.origin = std::move(origin);
	std::size_t line_no = 0;
	std::size_t start = 0;
	bool have_header = false;
	while (start < text.size()) {
		auto end = text.find('\n', start);
		if (end == std::string_view::npos) {
			end = text.size();
		}
		const auto line = trim(text.substr(start, end - start));
		start = end + 1;
		++line_no;
		if (line.empty() || line.front() == '#') {
			continue;
		}
		auto cells = split(line, delimiter);
		if (!have_header) {
			table.header = std::move(cells);
			have_header = true;
			continue;
		}
		if (cells.size() != table.header.size()) {
			throw DataError(fmt::format("{}:{}: expected {} cells, found {}", table.origin, line_no,
			                            table.header.size(), cells.size()));
		}
		table.rows.push_back(Row{line_no, std::move(cells)});
	}
	if (!have_header) {
		throw SchemaError(fmt::format("'{}' is empty (no header line)", table.origin));
	}
	return table;
}

Table read(const std::filesystem::path &path, char delimiter) {
	if (!std::filesystem::exists(path)) {
		throw DataError(fmt::format("input file '{}' does not exist", path.string()));
	}
	return parse(io::read_text(path), path.string(), delimiter);
}

Cell parse_number(std::string_view text) {
	const auto s = trim(text);
	if (s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null" || s == "-") {
		return {};
	}
	double value = 0.0;
	const char *first = s.data();
	if (!s.empty() && s.front() == '+') {
		++first;
	}
	const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
	if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
		return Cell{std::nullopt, false};
	}
	return Cell{value, true};
}

std::string number(double value) {
	if (std::isnan(value)) {
		return "nan";
	}
	char buf[64];
	const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
	return std::string(buf, ptr);
}

Writer::Writer(std::vector<std::string> header) : columns_(header.size()) {
	for (std::size_t i = 0; i < header.size(); ++i) {
		if (i > 0) {
			text_ += ',';
		}
		text_ += header[i];
	}
	text_ += '\n';
}

Writer &Writer::cell(std::string_view text) {
	if (pending_ > 0) {
		text_ += ',';
	}
	text_ += text;
	++pending_;
	return *this;
}

Writer &Writer::cell(double value) {
	return cell(std::string_view(number(value)));
}

Writer &Writer::cell(std::size_t value) {
	return cell(std::string_view(std::to_string(value)));
}

Writer &Writer::cell(std::optional<double> value) {
	return value ? cell(*value) : cell(std::string_view("NA"));
}

void Writer::end_row() {
	if (pending_ != columns_) {
		throw Error(fmt::format("csv row has {} cells, header has {}", pending_, columns_));
	}
	text_ += '\n';
	pending_ = 0;
}

void Writer::save(const std::filesystem::path &path) const {
	io::write_text(path, text_);
}

} // namespace loadcast::csv
