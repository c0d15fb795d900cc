#include "gad/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "gad/error.hpp"
#include "gad/io_util.hpp"
#include "gad/toy.hpp"

namespace gad {

std::vector<Sequence> make_prompts(int count, int len_min, int len_max, const Vocab& vocab,
                                   Rng rng) {
    if (count < 1 || len_min < 1 || len_max < len_min) {
        throw ArgumentError("prompt generation needs count >= 1 and 1 <= len_min <= len_max");
    }
    std::vector<Sequence> prompts;
    prompts.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng stream = rng_fork(rng, "prompt/" + std::to_string(i));
        const int len = len_min + stream.next_index(len_max - len_min + 1);
        std::vector<TokenId> tokens(len);
        for (int j = 0; j < len; ++j) {
            // EOS never appears inside a prompt.
            tokens[j] = static_cast<TokenId>(stream.next_index(vocab.size - 1));
        }
        prompts.emplace_back(std::move(tokens));
    }
    return prompts;
}

World build_world(const RunConfig& cfg) {
    cfg.validate();
    const Vocab vocab{cfg.teacher.vocab_size};
    const Rng root(cfg.seed);

    auto spec = std::make_shared<const MarkovTeacherSpec>(
        make_random_markov_spec(vocab, cfg.teacher.order, cfg.teacher.classes, cfg.teacher.sharpness,
                                cfg.teacher.hazard, cfg.teacher.eos_in_table,
                                rng_fork(root, "teacher-spec")));
    const TeacherHandle teacher = TeacherHandle::black_box(spec);

    const std::vector<Sequence> train_prompts =
        make_prompts(cfg.data.train_prompts, cfg.data.prompt_len_min, cfg.data.prompt_len_max, vocab,
                     rng_fork(root, "prompts/train"));
    const std::vector<Sequence> eval_prompts =
        make_prompts(cfg.data.eval_prompts, cfg.data.prompt_len_min, cfg.data.prompt_len_max, vocab,
                     rng_fork(root, "prompts/eval"));
    Rng train_rng = rng_fork(root, "data/train");
    Dataset train_data = build_dataset(teacher, train_prompts, train_rng, cfg.data.max_response_len);
    Rng eval_rng = rng_fork(root, "data/eval");
    Dataset eval_data = build_dataset(teacher, eval_prompts, eval_rng, cfg.data.max_response_len);

    AutoregressivePolicy policy(vocab, cfg.student_order);
    FeatureSpec features{vocab, cfg.disc.ngram_orders, cfg.disc.feature_dim, cfg.disc.length_scale,
                         cfg.data.max_response_len};
    Rng disc_rng = rng_fork(root, "disc-init");
    Discriminator disc(features, cfg.disc.hidden, disc_rng);

    return World{vocab,
                 std::move(spec),
                 std::move(train_data),
                 std::move(eval_data),
                 std::move(policy),
                 std::move(disc)};
}

EvalReport evaluate_policy(const AutoregressivePolicy& policy, const Dataset& eval_data,
                           const TeacherHandle& oracle, const EvalConfig& eval_cfg,
                           int max_response_len, const Rng& rng) {
    oracle.require_oracle("evaluate_policy");
    EvalReport report;
    report.dataset_id = eval_data.meta().spec_id + "#" + std::to_string(eval_data.meta().seed);
    report.seed = rng.seed();

    std::vector<Sequence> teacher_responses;
    teacher_responses.reserve(eval_data.size());
    for (const auto& episode : eval_data.episodes()) {
        teacher_responses.push_back(episode.teacher_response);
    }
    const SummaryStats teacher_len = length_stats(teacher_responses);
    report.set("teacher.len_mean", teacher_len.mean);
    report.set("teacher.len_std", teacher_len.std_dev);

    struct Variant {
        const char* name;
        double temperature;
    };
    for (const Variant& variant : {Variant{"greedy", kGreedyTemperature},
                                   Variant{"sampled", eval_cfg.temperature}}) {
        const std::string prefix = variant.name;
        std::vector<Sequence> responses;
        responses.reserve(eval_data.size());
        std::vector<SequencePair> pairs;
        pairs.reserve(eval_data.size());
        double logprob_sum = 0.0;
        double token_sum = 0.0;
        for (std::size_t i = 0; i < eval_data.size(); ++i) {
            const Episode& episode = eval_data.episode(i);
            Rng stream = rng_fork(rng, prefix + "/" + std::to_string(i));
            Sequence response =
                policy_sample(policy, episode.prompt, variant.temperature, max_response_len, stream);
            logprob_sum += seq_teacher_logprob(oracle, episode.prompt, response);
            token_sum += static_cast<double>(response.size());
            pairs.push_back({response, episode.teacher_response});
            responses.push_back(std::move(response));
        }
        const double n = static_cast<double>(eval_data.size());
        report.set(prefix + ".oracle_logprob", logprob_sum / n);
        report.set(prefix + ".oracle_logprob_per_token", logprob_sum / token_sum);
        const SummaryStats len = length_stats(responses);
        report.set(prefix + ".len_mean", len.mean);
        report.set(prefix + ".len_std", len.std_dev);
        report.set(prefix + ".len_min", len.min);
        report.set(prefix + ".len_max", len.max);
        for (int order = 1; order <= eval_cfg.ngram_max; ++order) {
            report.set(prefix + ".ngram_f1." + std::to_string(order), corpus_ngram_f1(pairs, order));
        }
    }
    return report;
}

std::string metrics_csv_header() {
    return "step,phase,gen_loss,mean_reward,mean_abs_advantage,disc_loss,disc_accuracy,"
           "mean_response_length,kl_to_ref,gen_grad_norm,disc_grad_norm,rollout_count\n";
}

std::string metrics_csv_row(const StepReport& r) {
    std::string row = std::to_string(r.step) + "," + r.phase;
    for (double value : {r.gen_loss, r.mean_reward, r.mean_abs_advantage, r.disc_loss,
                         r.disc_accuracy, r.mean_response_length, r.kl_to_ref, r.gen_grad_norm,
                         r.disc_grad_norm}) {
        row += "," + format_double(value);
    }
    row += "," + std::to_string(r.rollout_count) + "\n";
    return row;
}

RunMode parse_run_mode(const std::string& name) {
    if (name == "seqkd") return RunMode::kSeqKd;
    if (name == "gad") return RunMode::kGad;
    if (name == "offpolicy") return RunMode::kOffPolicy;
    throw ConfigError(ConfigError::Kind::kParse,
                      "mode must be seqkd, gad, or offpolicy, got '" + name + "'");
}

std::string run_mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::kSeqKd: return "seqkd";
        case RunMode::kGad: return "gad";
        case RunMode::kOffPolicy: return "offpolicy";
    }
    throw ArgumentError("unhandled run mode");
}

namespace {

std::vector<std::vector<int>> slice_batches(const std::vector<int>& order, int batch_size) {
    std::vector<std::vector<int>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t stop = std::min(order.size(), start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + stop);
    }
    return batches;
}

nlohmann::json eval_report_json(const EvalReport& report) {
    nlohmann::json j;
    j["checkpoint_id"] = report.checkpoint_id;
    j["dataset_id"] = report.dataset_id;
    j["seed"] = report.seed;
    j["values"] = report.values;  // std::map keeps key order stable
    return j;
}

std::string checkpoint_file_name(std::int64_t step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt-%06lld.gadckpt", static_cast<long long>(step));
    return buf;
}

void create_run_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
    }
}

}  // namespace

std::filesystem::path cmd_train(const RunConfig& cfg, RunMode mode) {
    const std::filesystem::path dir =
        cfg.out_dir.empty() ? std::filesystem::path("runs") / (cfg.label + "-" + run_mode_name(mode))
                            : std::filesystem::path(cfg.out_dir);
    create_run_dir(dir);
    // The echo captures the experiment, not its placement: two runs of the
    // same config into different directories stay byte-identical.
    RunConfig echo_cfg = cfg;
    echo_cfg.out_dir.clear();
    const std::string echo = canonical_echo(echo_cfg);
    atomic_write_file(dir / "config.txt", echo);

    World world = build_world(cfg);
    const TeacherHandle oracle = world.oracle();
    const Rng root(cfg.seed);

    std::vector<StepReport> reports;
    nlohmann::json checkpoints = nlohmann::json::array();
    nlohmann::json checkpoint_evals = nlohmann::json::object();
    std::int64_t count = 0;
    std::string phase = "init";
    AdamState* live_gen_adam = nullptr;
    AdamState* live_disc_adam = nullptr;

    const auto write_metrics = [&]() {
        std::string csv = metrics_csv_header();
        for (const auto& r : reports) {
            csv += metrics_csv_row(r);
        }
        atomic_write_file(dir / "metrics.csv", csv);
    };

    const auto save_point = [&](std::int64_t step) {
        CheckpointData data;
        data.label = cfg.label;
        data.step = step;
        data.config_echo = echo;
        data.rng_seed = cfg.seed;
        data.rng_counter = 0;
        data.rng_algorithm = Rng::kAlgorithmId;
        for (const auto& seg : world.policy.params().segments()) {
            data.segments.emplace_back(seg.name,
                                       Eigen::VectorXd(world.policy.params().segment(seg.name)));
        }
        for (const auto& seg : world.disc.params().segments()) {
            data.segments.emplace_back(seg.name,
                                       Eigen::VectorXd(world.disc.params().segment(seg.name)));
        }
        const Eigen::Index gen_size = world.policy.params().size();
        const Eigen::Index disc_size = world.disc.params().size();
        data.segments.emplace_back("adam.gen.m", live_gen_adam != nullptr
                                                     ? live_gen_adam->first_moment()
                                                     : Eigen::VectorXd::Zero(gen_size).eval());
        data.segments.emplace_back("adam.gen.v", live_gen_adam != nullptr
                                                     ? live_gen_adam->second_moment()
                                                     : Eigen::VectorXd::Zero(gen_size).eval());
        data.segments.emplace_back("adam.disc.m", live_disc_adam != nullptr
                                                      ? live_disc_adam->first_moment()
                                                      : Eigen::VectorXd::Zero(disc_size).eval());
        data.segments.emplace_back("adam.disc.v", live_disc_adam != nullptr
                                                      ? live_disc_adam->second_moment()
                                                      : Eigen::VectorXd::Zero(disc_size).eval());
        data.extra = {{"mode", run_mode_name(mode)},
                      {"phase", phase},
                      {"adam_gen_steps", live_gen_adam != nullptr ? live_gen_adam->step_count() : 0},
                      {"adam_disc_steps",
                       live_disc_adam != nullptr ? live_disc_adam->step_count() : 0}};

        const std::string file = checkpoint_file_name(step);
        save_checkpoint(dir / file, data);
        checkpoints.push_back({{"step", step}, {"file", file}});

        EvalReport eval_report =
            evaluate_policy(world.policy, world.eval_data, oracle, cfg.eval,
                            cfg.data.max_response_len,
                            rng_fork(root, "eval/step/" + std::to_string(step)));
        eval_report.checkpoint_id = cfg.label + "@" + std::to_string(step);
        checkpoint_evals[std::to_string(step)] = eval_report_json(eval_report);
    };

    const StepCallback on_step = [&](const StepReport& report) {
        reports.push_back(report);
        ++count;
        if (count % cfg.train.checkpoint_interval == 0) {
            save_point(count);
        }
    };

    try {
        save_point(0);
        switch (mode) {
            case RunMode::kSeqKd: {
                phase = "seqkd";
                AdamState gen_adam(world.policy.params().size(), AdamConfig{.lr = cfg.train.gen_lr});
                live_gen_adam = &gen_adam;
                for (int epoch = 0; epoch < cfg.train.seqkd_epochs; ++epoch) {
                    seqkd_epoch(world.policy, world.train_data, gen_adam, cfg.train,
                                rng_fork(root, "seqkd/epoch/" + std::to_string(epoch)), count,
                                on_step);
                }
                if (count % cfg.train.checkpoint_interval != 0) {
                    save_point(count);
                }
                live_gen_adam = nullptr;
                break;
            }
            case RunMode::kGad: {
                phase = "warmup";
                warmup(world.policy, world.disc, world.train_data, cfg.train,
                       rng_fork(root, "warmup"), count, on_step);
                phase = "gad";
                const PolicySnapshot reference(world.policy);
                AdamState gen_adam(world.policy.params().size(),
                                   AdamConfig{.lr = cfg.train.gad_gen_lr});
                AdamState disc_adam(world.disc.params().size(), AdamConfig{.lr = cfg.train.disc_lr});
                live_gen_adam = &gen_adam;
                live_disc_adam = &disc_adam;
                for (int epoch = 0; epoch < cfg.train.gad_epochs; ++epoch) {
                    const Rng epoch_rng = rng_fork(root, "gad/epoch/" + std::to_string(epoch));
                    Rng shuffle_rng = rng_fork(epoch_rng, "shuffle");
                    const auto batches = slice_batches(
                        shuffled_indices(static_cast<int>(world.train_data.size()), shuffle_rng),
                        cfg.train.batch_size);
                    for (const auto& batch : batches) {
                        const StepReport report = gad_step(
                            world.policy, reference, world.disc, world.train_data, batch, gen_adam,
                            disc_adam, cfg.train,
                            rng_fork(root, "gad/step/" + std::to_string(count)), count);
                        on_step(report);
                    }
                }
                if (count % cfg.train.checkpoint_interval != 0) {
                    save_point(count);
                }
                live_gen_adam = nullptr;
                live_disc_adam = nullptr;
                break;
            }
            case RunMode::kOffPolicy: {
                phase = "offpolicy";
                offpolicy_protocol(world.policy, world.disc, world.train_data, cfg.train,
                                   rng_fork(root, "offpolicy"), on_step);
                if (count % cfg.train.checkpoint_interval != 0) {
                    save_point(count);
                }
                break;
            }
        }
    } catch (const std::exception& e) {
        write_metrics();
        nlohmann::json failed;
        failed["label"] = cfg.label;
        failed["mode"] = run_mode_name(mode);
        failed["seed"] = cfg.seed;
        failed["failed"] = e.what();
        failed["completed_steps"] = count;
        failed["checkpoints"] = checkpoints;
        failed["checkpoint_evals"] = checkpoint_evals;
        atomic_write_file(dir / "report.json", failed.dump(2) + "\n");
        atomic_write_file(dir / "FAILED", std::string(e.what()) + "\n");
        throw;
    }

    write_metrics();

    // Checkpoint selection: best greedy oracle log-probability among the
    // checkpoints whose mean greedy response length stays within
    // [0.5x, 2x] of the teacher's mean; ties go to the earliest step.
    std::vector<Sequence> teacher_responses;
    for (const auto& episode : world.eval_data.episodes()) {
        teacher_responses.push_back(episode.teacher_response);
    }
    const double teacher_len_mean = length_stats(teacher_responses).mean;
    nlohmann::json selected;
    bool have_selection = false;
    double best_logprob = 0.0;
    std::int64_t best_step = 0;
    for (const auto& entry : checkpoints) {
        const std::int64_t step = entry.at("step").get<std::int64_t>();
        const auto& values = checkpoint_evals.at(std::to_string(step)).at("values");
        const double logprob = values.at("greedy.oracle_logprob").get<double>();
        const double len_mean = values.at("greedy.len_mean").get<double>();
        if (len_mean < 0.5 * teacher_len_mean || len_mean > 2.0 * teacher_len_mean) {
            continue;
        }
        if (!have_selection || logprob > best_logprob) {
            have_selection = true;
            best_logprob = logprob;
            best_step = step;
            selected = entry;
        }
    }

    nlohmann::json report;
    report["label"] = cfg.label;
    report["mode"] = run_mode_name(mode);
    report["seed"] = cfg.seed;
    report["total_steps"] = count;
    report["teacher_eval_len_mean"] = teacher_len_mean;
    report["checkpoints"] = checkpoints;
    report["checkpoint_evals"] = checkpoint_evals;
    report["selected_checkpoint"] = have_selection ? selected : nlohmann::json();
    report["final_eval"] = checkpoint_evals.at(std::to_string(count));
    atomic_write_file(dir / "report.json", report.dump(2) + "\n");
    return dir;
}

nlohmann::json cmd_eval(const std::filesystem::path& checkpoint_path,
                        const std::filesystem::path& out_path) {
    const CheckpointData data = load_checkpoint(checkpoint_path);
    const RunConfig cfg = parse_config_text(data.config_echo);
    World world = build_world(cfg);

    const Eigen::VectorXd& gen = data.segment("gen.logits");
    if (gen.size() != world.policy.params().size()) {
        throw IntegrityError("checkpoint generator has " + std::to_string(gen.size()) +
                             " parameters but the embedded config builds " +
                             std::to_string(world.policy.params().size()));
    }
    world.policy.params().values() = gen;

    EvalReport report = evaluate_policy(
        world.policy, world.eval_data, world.oracle(), cfg.eval, cfg.data.max_response_len,
        rng_fork(Rng(cfg.seed), "eval/step/" + std::to_string(data.step)));
    report.checkpoint_id = data.label + "@" + std::to_string(data.step);
    nlohmann::json j = eval_report_json(report);
    if (!out_path.empty()) {
        atomic_write_file(out_path, j.dump(2) + "\n");
    }
    return j;
}

namespace {

std::vector<Sequence> parse_token_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    std::vector<Sequence> sequences;
    std::vector<TokenId> tokens;
    std::string token;
    int line_no = 1;
    std::size_t pos = 0;
    const auto flush_token = [&]() {
        if (token.empty()) {
            return;
        }
        char* end = nullptr;
        const long parsed = std::strtol(token.c_str(), &end, 10);
        if (end != token.c_str() + token.size()) {
            throw IntegrityError(path.string() + " line " + std::to_string(line_no) +
                                 ": bad token '" + token + "'");
        }
        tokens.push_back(static_cast<TokenId>(parsed));
        token.clear();
    };
    while (pos <= text.size()) {
        const char c = pos < text.size() ? text[pos] : '\n';
        if (c == '\n') {
            flush_token();
            if (pos < text.size() || !tokens.empty()) {
                sequences.emplace_back(std::move(tokens));
                tokens = {};
                ++line_no;
            }
        } else if (c == ' ' || c == '\t' || c == '\r') {
            flush_token();
        } else {
            token += c;
        }
        ++pos;
    }
    return sequences;
}

}  // namespace

std::string cmd_ngram(const std::filesystem::path& candidate_file,
                      const std::filesystem::path& reference_file, int n_min, int n_max,
                      bool macro) {
    if (n_min < 1 || n_max < n_min) {
        throw ArgumentError("n-gram range must satisfy 1 <= n_min <= n_max");
    }
    const std::vector<Sequence> candidates = parse_token_file(candidate_file);
    const std::vector<Sequence> references = parse_token_file(reference_file);
    if (candidates.size() != references.size()) {
        throw IntegrityError(candidate_file.string() + " has " + std::to_string(candidates.size()) +
                             " sequences but " + reference_file.string() + " has " +
                             std::to_string(references.size()));
    }
    if (candidates.empty()) {
        throw ArgumentError("token files are empty");
    }
    std::vector<SequencePair> pairs;
    pairs.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        pairs.push_back({candidates[i], references[i]});
    }

    std::string out = "n,corpus_f1,per_sample_min,per_sample_median,per_sample_max\n";
    for (int n = n_min; n <= n_max; ++n) {
        const double corpus = macro ? corpus_ngram_f1_macro(pairs, n) : corpus_ngram_f1(pairs, n);
        std::vector<double> per_pair;
        per_pair.reserve(pairs.size());
        for (const auto& pair : pairs) {
            per_pair.push_back(ngram_f1(pair.candidate, pair.reference, n));
        }
        std::sort(per_pair.begin(), per_pair.end());
        const std::size_t m = per_pair.size();
        const double median =
            m % 2 == 1 ? per_pair[m / 2] : 0.5 * (per_pair[m / 2 - 1] + per_pair[m / 2]);
        out += std::to_string(n) + "," + format_double(corpus) + "," +
               format_double(per_pair.front()) + "," + format_double(median) + "," +
               format_double(per_pair.back()) + "\n";
    }
    return out;
}

std::filesystem::path cmd_toy(const RunConfig& cfg) {
    const std::filesystem::path dir = cfg.out_dir.empty()
                                          ? std::filesystem::path("runs") / (cfg.label + "-toy")
                                          : std::filesystem::path(cfg.out_dir);
    create_run_dir(dir);
    RunConfig echo_cfg = cfg;
    echo_cfg.out_dir.clear();
    atomic_write_file(dir / "config.txt", canonical_echo(echo_cfg));

    const MixtureSpec spec(cfg.toy_components, cfg.toy_support);
    const ToyRunResult result = run_toy_gad(spec, cfg.toy, rng_fork(Rng(cfg.seed), "toy"));

    emit_toy_figure_data(result, dir / "toy_distributions.csv");

    std::string rewards_csv = "step,mean_reward\n";
    for (std::size_t i = 0; i < result.reward_trace.size(); ++i) {
        rewards_csv += std::to_string(i) + "," + format_double(result.reward_trace[i]) + "\n";
    }
    atomic_write_file(dir / "toy_rewards.csv", rewards_csv);

    nlohmann::json teacher;
    teacher["support"] = spec.support_size();
    teacher["entropy"] = entropy(result.teacher_pmf);
    nlohmann::json components = nlohmann::json::array();
    for (const auto& c : spec.components()) {
        components.push_back({{"weight", c.weight}, {"mean", c.mean}, {"std", c.std}});
    }
    teacher["components"] = components;

    const auto student_json = [](double mu, double sigma, const ModeMass& mode, double fkl,
                                 double rkl, const Eigen::VectorXd& pmf) {
        nlohmann::json j;
        j["mu"] = mu;
        j["sigma"] = sigma;
        j["mode_index"] = mode.mode_index;
        j["mode_mass"] = mode.mass;
        j["forward_kl"] = fkl;
        j["reverse_kl"] = rkl;
        j["entropy"] = entropy(pmf);
        return j;
    };

    nlohmann::json summary;
    summary["label"] = cfg.label;
    summary["seed"] = cfg.seed;
    summary["teacher"] = teacher;
    summary["seqkd"] = student_json(result.seqkd_mu, result.seqkd_sigma, result.seqkd_mode,
                                    result.seqkd_forward_kl, result.seqkd_reverse_kl,
                                    result.seqkd_pmf);
    summary["gad"] = student_json(result.gad_mu, result.gad_sigma, result.gad_mode,
                                  result.gad_forward_kl, result.gad_reverse_kl, result.gad_pmf);
    summary["reverse_kl_gad_lt_seqkd"] = result.gad_reverse_kl < result.seqkd_reverse_kl;
    atomic_write_file(dir / "toy_summary.json", summary.dump(2) + "\n");
    return dir;
}

std::string cmd_inspect(const std::filesystem::path& checkpoint_path) {
    return describe_checkpoint(load_checkpoint(checkpoint_path));
}

}  // namespace gad
