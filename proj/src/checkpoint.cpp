#include "gad/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "gad/error.hpp"
#include "gad/io_util.hpp"

namespace gad {

namespace {

constexpr char kMagic[8] = {'G', 'A', 'D', 'C', 'K', 'P', 'T', '1'};

void append_u64_le(std::string& out, std::uint64_t value) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
    }
}

void append_f64_le(std::string& out, double value) {
    append_u64_le(out, std::bit_cast<std::uint64_t>(value));
}

std::uint64_t read_u64_le(const std::string& data, std::size_t offset) {
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) {
        value |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[offset + i])) << (8 * i);
    }
    return value;
}

}  // namespace

const Eigen::VectorXd& CheckpointData::segment(const std::string& name) const {
    for (const auto& [seg_name, values] : segments) {
        if (seg_name == name) {
            return values;
        }
    }
    throw ArgumentError("checkpoint has no segment named '" + name + "'");
}

bool CheckpointData::has_segment(const std::string& name) const {
    for (const auto& [seg_name, values] : segments) {
        if (seg_name == name) {
            return true;
        }
    }
    return false;
}

std::int64_t CheckpointData::total_parameters() const {
    std::int64_t total = 0;
    for (const auto& [name, values] : segments) {
        total += values.size();
    }
    return total;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
    nlohmann::json meta;
    meta["version"] = data.version;
    meta["label"] = data.label;
    meta["step"] = data.step;
    meta["config"] = data.config_echo;
    meta["rng"] = {{"seed", data.rng_seed},
                   {"counter", data.rng_counter},
                   {"algorithm", data.rng_algorithm}};
    nlohmann::json seg_list = nlohmann::json::array();
    for (const auto& [name, values] : data.segments) {
        seg_list.push_back({{"name", name}, {"length", values.size()}});
    }
    meta["segments"] = seg_list;
    meta["extra"] = data.extra;

    const std::string header = meta.dump();
    std::string blob;
    blob.reserve(sizeof(kMagic) + 8 + header.size() + 8 * static_cast<std::size_t>(data.total_parameters()));
    blob.append(kMagic, sizeof(kMagic));
    append_u64_le(blob, header.size());
    blob += header;
    for (const auto& [name, values] : data.segments) {
        for (Eigen::Index i = 0; i < values.size(); ++i) {
            append_f64_le(blob, values[i]);
        }
    }
    atomic_write_file(path, blob);
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
    const std::string blob = read_text_file(path);
    if (blob.size() < sizeof(kMagic) + 8 || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
        throw IntegrityError(path.string() + " is not a checkpoint file (bad magic)");
    }
    const std::uint64_t header_len = read_u64_le(blob, sizeof(kMagic));
    std::size_t offset = sizeof(kMagic) + 8;
    if (header_len > blob.size() - offset) {
        throw IntegrityError(path.string() + " is truncated inside the metadata header");
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(blob.substr(offset, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(path.string() + " has corrupt metadata: " + e.what());
    }
    offset += header_len;

    CheckpointData data;
    try {
        data.version = meta.at("version").get<int>();
        if (data.version != 1) {
            throw VersionError(path.string() + " has unsupported checkpoint version " +
                               std::to_string(data.version));
        }
        data.label = meta.at("label").get<std::string>();
        data.step = meta.at("step").get<std::int64_t>();
        data.config_echo = meta.at("config").get<std::string>();
        data.rng_seed = meta.at("rng").at("seed").get<std::uint64_t>();
        data.rng_counter = meta.at("rng").at("counter").get<std::uint64_t>();
        data.rng_algorithm = meta.at("rng").at("algorithm").get<std::string>();
        data.extra = meta.value("extra", nlohmann::json::object());
        for (const auto& seg : meta.at("segments")) {
            const std::string name = seg.at("name").get<std::string>();
            const std::int64_t length = seg.at("length").get<std::int64_t>();
            if (length < 0) {
                throw IntegrityError(path.string() + ": segment '" + name + "' has negative length");
            }
            const std::size_t bytes = static_cast<std::size_t>(length) * 8;
            if (bytes > blob.size() - offset) {
                throw IntegrityError(path.string() + " is truncated inside segment '" + name + "'");
            }
            Eigen::VectorXd values(length);
            for (std::int64_t i = 0; i < length; ++i) {
                values[i] = std::bit_cast<double>(read_u64_le(blob, offset + 8 * i));
            }
            offset += bytes;
            data.segments.emplace_back(name, std::move(values));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(path.string() + " has malformed metadata fields: " + e.what());
    }
    if (offset != blob.size()) {
        throw IntegrityError(path.string() + " has " + std::to_string(blob.size() - offset) +
                             " trailing bytes");
    }
    return data;
}

std::string describe_checkpoint(const CheckpointData& data) {
    std::string out;
    out += "checkpoint version " + std::to_string(data.version) + "\n";
    out += "label: " + data.label + "\n";
    out += "step: " + std::to_string(data.step) + "\n";
    out += "rng: " + data.rng_algorithm + " seed=" + std::to_string(data.rng_seed) +
           " counter=" + std::to_string(data.rng_counter) + "\n";
    out += "segments (" + std::to_string(data.segments.size()) + ", " +
           std::to_string(data.total_parameters()) + " parameters):\n";
    for (const auto& [name, values] : data.segments) {
        out += "  " + name + ": " + std::to_string(values.size()) + "\n";
    }
    if (!data.extra.empty()) {
        out += "extra: " + data.extra.dump() + "\n";
    }
    out += "config echo:\n";
    out += data.config_echo;
    if (!data.config_echo.empty() && data.config_echo.back() != '\n') {
        out += "\n";
    }
    return out;
}

}  // namespace gad
