#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loadcast::io {

/// Little-endian byte sink used by every binary artifact (.htab, .wdst, checkpoints).
class ByteWriter {
public:
	void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }
	void u8(std::uint8_t value) { bytes_.push_back(value); }
	void u64(std::uint64_t value);
	void i64(std::int64_t value) { u64(static_cast<std::uint64_t>(value)); }
	void f64(double value);
	void f64s(std::span<const double> values);
	void bytes(std::span<const std::uint8_t> values) { bytes_.insert(bytes_.end(), values.begin(), values.end()); }
	void string(std::string_view text);

	const std::vector<std::uint8_t> &buffer() const { return bytes_; }

	/// Writes to a sibling temp file, then renames over the target.
	void save(const std::filesystem::path &path) const;

private:
	std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked reader; every failure raises FormatError naming the file.
class ByteReader {
public:
	ByteReader(std::vector<std::uint8_t> bytes, std::string origin);

	static ByteReader open(const std::filesystem::path &path);

	void expect_magic(std::string_view tag);
	std::uint8_t u8();
	std::uint64_t u64();
	std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
	double f64();
	std::vector<double> f64s(std::size_t count);
	std::vector<std::uint8_t> bytes(std::size_t count);
	std::string string();

	bool at_end() const { return pos_ == bytes_.size(); }
	void expect_end() const;

private:
	void need(std::size_t count) const;

	std::vector<std::uint8_t> bytes_;
	std::size_t pos_ = 0;
	std::string origin_;
};

void write_text(const std::filesystem::path &path, std::string_view text);
std::string read_text(const std::filesystem::path &path);

} // namespace loadcast::io
