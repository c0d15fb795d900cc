#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace gad {

// On-disk model state. The file layout is: the 8 magic bytes "GADCKPT1",
// a little-endian u64 byte length, that many bytes of UTF-8 JSON metadata,
// then each segment's values as little-endian IEEE-754 doubles in metadata
// order. Identical data serializes to identical bytes.
struct CheckpointData {
    int version = 1;
    std::string label;
    std::int64_t step = 0;
    std::string config_echo;
    std::uint64_t rng_seed = 0;
    std::uint64_t rng_counter = 0;
    std::string rng_algorithm;
    nlohmann::json extra = nlohmann::json::object();  // optimizer steps, phase, shapes
    std::vector<std::pair<std::string, Eigen::VectorXd>> segments;

    const Eigen::VectorXd& segment(const std::string& name) const;
    bool has_segment(const std::string& name) const;
    std::int64_t total_parameters() const;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointData& data);

// IntegrityError on truncation or corruption, VersionError on an
// unrecognized format version, IoError if unreadable.
CheckpointData load_checkpoint(const std::filesystem::path& path);

// Human-readable summary: version, label, step, segment table, config echo.
std::string describe_checkpoint(const CheckpointData& data);

}  // namespace gad
