#include "loadcast/binary_io.hpp"

#include "loadcast/error.hpp"

#include <bit>
#include <fmt/format.h>
#include <fstream>
#include <iterator>

namespace loadcast::io {

void ByteWriter::u64(std::uint64_t value) {
	for (int shift = 0; shift < 64; shift += 8) {
		bytes_.push_back(static_cast<std::uint8_t>((value >> shift) & 0xffU));
	}
}

void ByteWriter::f64(double value) {
	u64(std::bit_cast<std::uint64_t>(value));
}

void ByteWriter::f64s(std::span<const double> values) {
	bytes_.reserve(bytes_.size() + values.size() * 8);
	for (const double v : values) {
		f64(v);
	}
}

void ByteWriter::string(std::string_view text) {
	u64(text.size());
	bytes_.insert(bytes_.end(), text.begin(), text.end());
}

void ByteWriter::save(const std::filesystem::path &path) const {
	if (path.has_parent_path()) {
		std::filesystem::create_directories(path.parent_path());
	}
	auto tmp = path;
	tmp += ".tmp";
	{
		std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
		if (!out) {
			throw DataError(fmt::format("cannot open '{}' for writing", tmp.string()));
		}
		out.write(reinterpret_cast<const char *>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
		if (!out) {
			throw DataError(fmt::format("write to '{}' failed", tmp.string()));
		}
	}
	std::filesystem::rename(tmp, path);
}

ByteReader::ByteReader(std::vector<std::uint8_t> bytes, std::string origin)
    : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

ByteReader ByteReader::open(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw DataError(fmt::format("cannot open '{}'", path.string()));
	}
	std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
	return ByteReader(std::move(bytes), path.string());
}

void ByteReader::need(std::size_t count) const {
	if (bytes_.size() - pos_ < count) {
		throw FormatError(fmt::format("'{}' is truncated at byte {}", origin_, pos_));
	}
}

void ByteReader::expect_magic(std::string_view tag) {
	need(tag.size());
	const std::string_view found(reinterpret_cast<const char *>(bytes_.data() + pos_), tag.size());
	if (found != tag) {
		throw FormatError(fmt::format("'{}' has wrong magic (expected {})", origin_, tag));
	}
	pos_ += tag.size();
}

std::uint8_t ByteReader::u8() {
	need(1);
	return bytes_[pos_++];
}

std::uint64_t ByteReader::u64() {
	need(8);
	std::uint64_t value = 0;
	for (int i = 0; i < 8; ++i) {
		value |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
	}
	pos_ += 8;
	return value;
}

double ByteReader::f64() {
	return std::bit_cast<double>(u64());
}

std::vector<double> ByteReader::f64s(std::size_t count) {
	need(count * 8);
	std::vector<double> out(count);
	for (auto &v : out) {
		v = f64();
	}
	return out;
}

std::vector<std::uint8_t> ByteReader::bytes(std::size_t count) {
	need(count);
	std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
	                              bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + count));
	pos_ += count;
	return out;
}

std::string ByteReader::string() {
	const auto size = u64();
	need(size);
	std::string out(reinterpret_cast<const char *>(bytes_.data() + pos_), size);
	pos_ += size;
	return out;
}

void ByteReader::expect_end() const {
	if (!at_end()) {
		throw FormatError(fmt::format("'{}' has {} trailing bytes", origin_, bytes_.size() - pos_));
	}
}

void write_text(const std::filesystem::path &path, std::string_view text) {
	if (path.has_parent_path()) {
		std::filesystem::create_directories(path.parent_path());
	}
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out) {
		throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
	}
	out << text;
}

std::string read_text(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw DataError(fmt::format("cannot open '{}'", path.string()));
	}
	return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace loadcast::io
