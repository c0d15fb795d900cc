#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gad/teacher.hpp"
#include "gad/toy.hpp"
#include "gad/trainers.hpp"

namespace gad {

struct TeacherConfig {
    int vocab_size = 12;
    int order = 2;
    int classes = 2;
    double sharpness = 2.0;
    std::vector<double> hazard = {0.12};
    bool eos_in_table = false;
};

struct DataConfig {
    int train_prompts = 256;
    int eval_prompts = 64;
    int prompt_len_min = 2;
    int prompt_len_max = 6;
    int max_response_len = 24;
};

struct DiscConfig {
    int hidden = 16;
    int feature_dim = 256;
    std::vector<int> ngram_orders = {1, 2};
    double length_scale = 1.0;
};

struct EvalConfig {
    double temperature = 0.8;
    int ngram_max = 8;
};

// Everything a run needs, parsed from a flat key=value file. `seed` is the
// one key without a default.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string label = "run";
    std::string out_dir;  // empty: the harness derives runs/<label>
    TrainConfig train;
    TeacherConfig teacher;
    DataConfig data;
    int student_order = 2;
    DiscConfig disc;
    EvalConfig eval;
    ToyConfig toy;
    int toy_support = 10;
    std::vector<MixtureComponent> toy_components = {
        {0.40, 1.5, 0.35}, {0.35, 5.0, 0.35}, {0.25, 8.0, 0.35}};

    void validate() const;  // cross-field invariants, ConfigError on failure
};

// Strict parse: unknown keys, duplicate keys, malformed values, and a
// missing seed are all distinct ConfigError kinds carrying the key name
// and line number.
RunConfig parse_config_text(const std::string& text);

// parse_config_text over the file's content; IoError if unreadable.
RunConfig parse_config(const std::filesystem::path& path);

// Every effective key in sorted order; parsing it back yields the same
// RunConfig. This is the form embedded in checkpoints.
std::string canonical_echo(const RunConfig& config);

}  // namespace gad
