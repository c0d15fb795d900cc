#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gad/config.hpp"
#include "gad/error.hpp"
#include "gad/harness.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string mode_name = "gad";
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir;
};

gad::RunConfig load_run_config(const CommonFlags& flags, bool config_required) {
    gad::RunConfig cfg;
    if (!flags.config_path.empty()) {
        cfg = gad::parse_config(flags.config_path);
    } else if (config_required) {
        throw gad::ConfigError(gad::ConfigError::Kind::kMissingKey, "--config is required");
    } else if (!flags.seed_given) {
        throw gad::ConfigError(gad::ConfigError::Kind::kMissingKey,
                               "either --config or --seed is required");
    }
    if (flags.seed_given) {
        cfg.seed = flags.seed;
        cfg.train.seed = flags.seed;  // keep the derived mirror consistent
    }
    if (!flags.out_dir.empty()) {
        cfg.out_dir = flags.out_dir;
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale lab for black-box distillation of sequence models"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string checkpoint_path;
    std::string eval_out;
    std::string candidate_file;
    std::string reference_file;
    int n_min = 1;
    int n_max = 4;
    bool macro = false;

    CLI::App* train = app.add_subcommand("train", "run a training pipeline into a run directory");
    train->add_option("--config", flags.config_path, "key=value config file")->required();
    train->add_option("--mode", flags.mode_name, "seqkd | gad | offpolicy");
    train->add_option("--seed", flags.seed, "override the config seed");
    train->add_option("--out", flags.out_dir, "run directory (default runs/<label>-<mode>)");

    CLI::App* eval_cmd = app.add_subcommand("eval", "re-evaluate a checkpoint");
    eval_cmd->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
    eval_cmd->add_option("--out", eval_out, "also write the report JSON here");

    CLI::App* ngram = app.add_subcommand("ngram", "n-gram F1 between two token files");
    ngram->add_option("candidate", candidate_file, "one sequence per line, space-separated ids")
        ->required();
    ngram->add_option("reference", reference_file, "same line count as candidate")->required();
    ngram->add_option("--n-min", n_min, "smallest order");
    ngram->add_option("--n-max", n_max, "largest order");
    ngram->add_flag("--macro", macro, "per-pair mean instead of pooled counts");

    CLI::App* toy = app.add_subcommand("toy", "category-level mixture study");
    toy->add_option("--config", flags.config_path, "key=value config file");
    toy->add_option("--seed", flags.seed, "seed (required without --config)");
    toy->add_option("--out", flags.out_dir, "run directory (default runs/<label>-toy)");

    CLI::App* inspect = app.add_subcommand("inspect", "describe a checkpoint");
    inspect->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    flags.seed_given = train->count("--seed") > 0 || toy->count("--seed") > 0;

    try {
        if (train->parsed()) {
            const gad::RunMode mode = gad::parse_run_mode(flags.mode_name);
            const gad::RunConfig cfg = load_run_config(flags, /*config_required=*/true);
            const std::filesystem::path dir = gad::cmd_train(cfg, mode);
            std::cout << dir.string() << "\n";
        } else if (eval_cmd->parsed()) {
            const nlohmann::json report = gad::cmd_eval(checkpoint_path, eval_out);
            std::cout << report.dump(2) << "\n";
        } else if (ngram->parsed()) {
            std::cout << gad::cmd_ngram(candidate_file, reference_file, n_min, n_max, macro);
        } else if (toy->parsed()) {
            const gad::RunConfig cfg = load_run_config(flags, /*config_required=*/false);
            const std::filesystem::path dir = gad::cmd_toy(cfg);
            std::cout << dir.string() << "\n";
        } else if (inspect->parsed()) {
            std::cout << gad::cmd_inspect(checkpoint_path);
        }
        return 0;
    } catch (const gad::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gad::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const gad::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const gad::ArgumentError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
