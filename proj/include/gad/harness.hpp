#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gad/checkpoint.hpp"
#include "gad/config.hpp"
#include "gad/discriminator.hpp"
#include "gad/metrics.hpp"
#include "gad/policy.hpp"
#include "gad/teacher.hpp"
#include "gad/trainers.hpp"

namespace gad {

// Everything a run works on, derived deterministically from the config:
// the sampled teacher process, the train/eval datasets it generated, and
// freshly initialized student and discriminator.
struct World {
    Vocab vocab;
    std::shared_ptr<const MarkovTeacherSpec> teacher_spec;
    Dataset train_data;
    Dataset eval_data;
    AutoregressivePolicy policy;
    Discriminator disc;

    TeacherHandle black_box() const { return TeacherHandle::black_box(teacher_spec); }
    TeacherHandle oracle() const { return TeacherHandle::oracle(teacher_spec); }
};

World build_world(const RunConfig& cfg);

// Uniform random prompts without EOS, lengths in [len_min, len_max].
std::vector<Sequence> make_prompts(int count, int len_min, int len_max, const Vocab& vocab, Rng rng);

// Greedy and temperature-sampled student rollouts on the eval split:
// n-gram F1 against the teacher responses, teacher-oracle log-probability,
// and length statistics, under "greedy." / "sampled." key prefixes.
EvalReport evaluate_policy(const AutoregressivePolicy& policy, const Dataset& eval_data,
                           const TeacherHandle& oracle, const EvalConfig& eval_cfg,
                           int max_response_len, const Rng& rng);

// Fixed metrics CSV schema; numbers are 17-significant-digit decimals.
std::string metrics_csv_header();
std::string metrics_csv_row(const StepReport& report);

enum class RunMode { kSeqKd, kGad, kOffPolicy };

RunMode parse_run_mode(const std::string& name);
std::string run_mode_name(RunMode mode);

// Runs the selected pipeline; the run directory ends up with config.txt,
// metrics.csv, report.json, and interval checkpoints. On a numeric
// failure the partial artifacts are kept next to a FAILED marker and the
// error is rethrown. Returns the run directory.
std::filesystem::path cmd_train(const RunConfig& cfg, RunMode mode);

// Re-evaluates a checkpoint in the world rebuilt from its embedded config
// echo; reproduces the in-run numbers for that step. Writes the report as
// JSON when out_path is nonempty and always returns it.
nlohmann::json cmd_eval(const std::filesystem::path& checkpoint_path,
                        const std::filesystem::path& out_path);

// Per-n overlap table for two token-sequence files (one sequence per
// line, space-separated ids). `macro` switches the corpus column from
// pooled counts to the per-pair mean.
std::string cmd_ngram(const std::filesystem::path& candidate_file,
                      const std::filesystem::path& reference_file, int n_min, int n_max, bool macro);

// Toy study: figure CSV, reward trace CSV, and a JSON summary with the
// mode/KL comparison. Returns the run directory.
std::filesystem::path cmd_toy(const RunConfig& cfg);

// Text description of a checkpoint; never modifies the file.
std::string cmd_inspect(const std::filesystem::path& checkpoint_path);

}  // namespace gad
