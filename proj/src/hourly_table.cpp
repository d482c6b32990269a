#include "loadcast/hourly_table.hpp"

#include "loadcast/binary_io.hpp"
#include "loadcast/error.hpp"

#include <algorithm>
#include <bit>
#include <fmt/format.h>
#include <json.hpp>
#include <limits>

namespace loadcast {

namespace {
constexpr std::string_view kTableMagic = "HTAB0001";
}

std::size_t Column::missing_count() const {
	return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
}

DateSpan HourlyTable::span() const {
	const Date first = date_of(start_);
	const Date last = rows_ == 0 ? first : date_of(timestamp(rows_ - 1));
	return DateSpan{first, last};
}

Column &HourlyTable::add_column(std::string_view name, std::string_view unit) {
	if (has(name)) {
		throw Error(fmt::format("duplicate column '{}'", name));
	}
	Column column;
	column.name = std::string(name);
	column.unit = std::string(unit);
	column.values.assign(rows_, std::numeric_limits<double>::quiet_NaN());
	column.missing.assign(rows_, 1);
	columns_.push_back(std::move(column));
	return columns_.back();
}

const Column *HourlyTable::find(std::string_view name) const {
	for (const auto &c : columns_) {
		if (c.name == name) {
			return &c;
		}
	}
	return nullptr;
}

const Column &HourlyTable::column(std::string_view name) const {
	if (const auto *c = find(name)) {
		return *c;
	}
	throw DataError(fmt::format("table has no column '{}'", name));
}

Column &HourlyTable::column(std::string_view name) {
	return const_cast<Column &>(std::as_const(*this).column(name));
}

bool bit_identical(const HourlyTable &a, const HourlyTable &b) {
	if (a.start() != b.start() || a.rows() != b.rows() || a.columns().size() != b.columns().size()) {
		return false;
	}
	for (std::size_t c = 0; c < a.columns().size(); ++c) {
		const auto &x = a.columns()[c];
		const auto &y = b.columns()[c];
		if (x.name != y.name || x.unit != y.unit || x.missing != y.missing) {
			return false;
		}
		for (std::size_t i = 0; i < x.values.size(); ++i) {
			if (std::bit_cast<std::uint64_t>(x.values[i]) != std::bit_cast<std::uint64_t>(y.values[i])) {
				return false;
			}
		}
	}
	return true;
}

void persist_table(const HourlyTable &table, const std::filesystem::path &path) {
	io::ByteWriter out;
	out.magic(kTableMagic);
	out.i64(table.start().hours);
	out.u64(table.rows());
	out.u64(table.columns().size());
	for (const auto &c : table.columns()) {
		out.string(c.name);
		out.string(c.unit);
	}
	for (const auto &c : table.columns()) {
		out.f64s(c.values);
	}
	for (const auto &c : table.columns()) {
		out.bytes(c.missing);
	}
	out.save(path);

	nlohmann::ordered_json manifest;
	manifest["format"] = kTableMagic;
	manifest["rows"] = table.rows();
	manifest["first_hour"] = format_timestamp(table.start());
	if (table.rows() > 0) {
		manifest["last_hour"] = format_timestamp(table.timestamp(table.rows() - 1));
	}
	manifest["columns"] = nlohmann::ordered_json::array();
	for (const auto &c : table.columns()) {
		manifest["columns"].push_back({{"name", c.name}, {"unit", c.unit}, {"missing", c.missing_count()}});
	}
	auto manifest_path = path;
	manifest_path += ".json";
	io::write_text(manifest_path, manifest.dump(2) + "\n");
}

HourlyTable load_table(const std::filesystem::path &path) {
	auto in = io::ByteReader::open(path);
	in.expect_magic(kTableMagic);
	const HourStamp start{in.i64()};
	const auto rows = in.u64();
	const auto cols = in.u64();
	if (cols > 4096 || rows > (std::uint64_t{1} << 32)) {
		throw FormatError(fmt::format("'{}' declares an implausible shape ({} x {})", path.string(), rows, cols));
	}
	HourlyTable table(start, rows);
	std::vector<std::pair<std::string, std::string>> names;
	for (std::uint64_t c = 0; c < cols; ++c) {
		auto name = in.string();
		auto unit = in.string();
		names.emplace_back(std::move(name), std::move(unit));
	}
	for (const auto &[name, unit] : names) {
		table.add_column(name, unit).values = in.f64s(rows);
	}
	for (const auto &[name, unit] : names) {
		table.column(name).missing = in.bytes(rows);
	}
	in.expect_end();
	return table;
}

} // namespace loadcast
