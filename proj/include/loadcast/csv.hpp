#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loadcast::csv {

struct Row {
	std::size_t line = 0; ///< 1-based line in the source file
	std::vector<std::string> cells;
};

struct Table {
	std::string origin;
	std::vector<std::string> header;
	std::vector<Row> rows;

	/// Index of a header column; throws SchemaError naming the file when absent.
	std::size_t column(std::string_view name) const;
	std::optional<std::size_t> find_column(std::string_view name) const;
};

/// Comma-separated with a header line. Blank lines and lines starting with '#' are skipped.
/// Quoted cells are not supported; none of the source formats need them.
Table read(const std::filesystem::path &path, char delimiter = ',');
Table parse(std::string_view text, std::string origin, char delimiter = ',');

/// Empty, "NA", "NaN", "null" and "-" are missing. Anything else that is not a
/// finite number is also missing; callers count those through `ok == false`.
struct Cell {
	std::optional<double> value;
	bool ok = true; ///< false when the cell was non-empty but not a number
};
Cell parse_number(std::string_view text);

/// Shortest round-trip representation; "nan" for NaN. Deterministic across runs.
std::string number(double value);

/// Accumulates rows in memory and writes the file in one go.
class Writer {
public:
	explicit Writer(std::vector<std::string> header);

	Writer &cell(std::string_view text);
	Writer &cell(double value);
	Writer &cell(std::size_t value);
	Writer &cell(std::optional<double> value);
	void end_row();

	std::string str() const { return text_; }
	void save(const std::filesystem::path &path) const;

private:
	std::size_t columns_;
	std::size_t pending_ = 0;
	std::string text_;
};

} // namespace loadcast::csv
