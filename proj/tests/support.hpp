#pragma once

#include "loadcast/features.hpp"
#include "loadcast/ingest.hpp"
#include "loadcast/preprocess.hpp"
#include "loadcast/synthetic.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace test_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
	explicit TempDir(const std::string &tag) {
		static std::atomic<int> counter{0};
		path_ = std::filesystem::temp_directory_path() /
		        ("loadcast-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
		std::filesystem::remove_all(path_);
		std::filesystem::create_directories(path_);
	}
	~TempDir() {
		std::error_code ec;
		std::filesystem::remove_all(path_, ec);
	}
	TempDir(const TempDir &) = delete;
	TempDir &operator=(const TempDir &) = delete;

	const std::filesystem::path &path() const { return path_; }

private:
	std::filesystem::path path_;
};

inline loadcast::HourlyTable synthetic_merged(std::size_t days, std::uint64_t seed) {
	const auto s = loadcast::synthetic::generate_synthetic(days, seed);
	return loadcast::ingest::merge_sources(s.span, s.weather, s.satellite, s.demand, s.calendar, s.population);
}

inline loadcast::features::Dataset synthetic_dataset(std::size_t days, std::uint64_t seed,
                                                     loadcast::features::FeatureSet set =
                                                         loadcast::features::FeatureSet::full,
                                                     std::size_t window = 24) {
	const auto clean = loadcast::preprocess::clean_table(synthetic_merged(days, seed));
	const auto frame = loadcast::features::build_frame(clean.table, set);
	return loadcast::features::split_and_window(frame, window);
}

} // namespace test_support
