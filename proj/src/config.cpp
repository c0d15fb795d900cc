#include "gad/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "gad/error.hpp"
#include "gad/io_util.hpp"

namespace gad {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void parse_fail(int line, const std::string& what) {
    throw ConfigError(ConfigError::Kind::kParse, "line " + std::to_string(line) + ": " + what);
}

// Raw key/value table with strict consumption tracking: every key must be
// recognized, and the one required key must be present.
class KeyReader {
public:
    explicit KeyReader(const std::string& text) {
        std::istringstream stream(text);
        std::string raw;
        int line_no = 0;
        while (std::getline(stream, raw)) {
            ++line_no;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) {
                raw.erase(hash);
            }
            const std::string line = trim(raw);
            if (line.empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                parse_fail(line_no, "expected key=value, got '" + line + "'");
            }
            const std::string key = trim(line.substr(0, eq));
            if (key.empty()) {
                parse_fail(line_no, "empty key");
            }
            if (entries_.count(key) != 0) {
                parse_fail(line_no, "duplicate key '" + key + "'");
            }
            entries_[key] = {trim(line.substr(eq + 1)), line_no};
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string take_string(const std::string& key, const std::string& fallback) {
        const Entry* e = take(key);
        return e == nullptr ? fallback : e->value;
    }

    std::int64_t take_int(const std::string& key, std::int64_t fallback) {
        const Entry* e = take(key);
        if (e == nullptr) {
            return fallback;
        }
        return parse_int(key, e->value, e->line);
    }

    std::uint64_t take_u64_required(const std::string& key) {
        const Entry* e = take(key);
        if (e == nullptr) {
            throw ConfigError(ConfigError::Kind::kMissingKey, "missing required key '" + key + "'");
        }
        char* end = nullptr;
        const std::string& v = e->value;
        const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
        if (v.empty() || end != v.c_str() + v.size() || v[0] == '-') {
            parse_fail(e->line, "key '" + key + "': bad unsigned integer '" + v + "'");
        }
        return parsed;
    }

    double take_double(const std::string& key, double fallback) {
        const Entry* e = take(key);
        if (e == nullptr) {
            return fallback;
        }
        return parse_double(key, e->value, e->line);
    }

    bool take_bool(const std::string& key, bool fallback) {
        const Entry* e = take(key);
        if (e == nullptr) {
            return fallback;
        }
        if (e->value == "true" || e->value == "1") {
            return true;
        }
        if (e->value == "false" || e->value == "0") {
            return false;
        }
        parse_fail(e->line, "key '" + key + "': bad boolean '" + e->value + "'");
    }

    std::vector<double> take_double_list(const std::string& key, std::vector<double> fallback) {
        const Entry* e = take(key);
        if (e == nullptr) {
            return fallback;
        }
        std::vector<double> out;
        for (const std::string& part : split(e->value, ',')) {
            out.push_back(parse_double(key, trim(part), e->line));
        }
        return out;
    }

    std::vector<int> take_int_list(const std::string& key, std::vector<int> fallback) {
        const Entry* e = take(key);
        if (e == nullptr) {
            return fallback;
        }
        std::vector<int> out;
        for (const std::string& part : split(e->value, ',')) {
            out.push_back(static_cast<int>(parse_int(key, trim(part), e->line)));
        }
        return out;
    }

    // weight:mean:std triples, comma-separated.
    std::vector<MixtureComponent> take_components(const std::string& key,
                                                  std::vector<MixtureComponent> fallback) {
        const Entry* e = take(key);
        if (e == nullptr) {
            return fallback;
        }
        std::vector<MixtureComponent> out;
        for (const std::string& part : split(e->value, ',')) {
            const std::vector<std::string> fields = split(trim(part), ':');
            if (fields.size() != 3) {
                parse_fail(e->line, "key '" + key + "': component '" + part +
                                        "' is not weight:mean:std");
            }
            out.push_back({parse_double(key, trim(fields[0]), e->line),
                           parse_double(key, trim(fields[1]), e->line),
                           parse_double(key, trim(fields[2]), e->line)});
        }
        return out;
    }

    // All keys consumed? Otherwise name the first stray one.
    void finish() const {
        for (const auto& [key, entry] : entries_) {
            if (consumed_.count(key) == 0) {
                throw ConfigError(ConfigError::Kind::kUnknownKey,
                                  "unknown key '" + key + "' (line " +
                                      std::to_string(entry.line) + ")");
            }
        }
    }

private:
    struct Entry {
        std::string value;
        int line = 0;
    };

    const Entry* take(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            return nullptr;
        }
        consumed_.insert(key);
        return &it->second;
    }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string::size_type start = 0;
        while (true) {
            const auto pos = s.find(sep, start);
            if (pos == std::string::npos) {
                out.push_back(s.substr(start));
                return out;
            }
            out.push_back(s.substr(start, pos - start));
            start = pos + 1;
        }
    }

    static std::int64_t parse_int(const std::string& key, const std::string& v, int line) {
        char* end = nullptr;
        const long long parsed = std::strtoll(v.c_str(), &end, 10);
        if (v.empty() || end != v.c_str() + v.size()) {
            parse_fail(line, "key '" + key + "': bad integer '" + v + "'");
        }
        return parsed;
    }

    static double parse_double(const std::string& key, const std::string& v, int line) {
        char* end = nullptr;
        const double parsed = std::strtod(v.c_str(), &end);
        if (v.empty() || end != v.c_str() + v.size()) {
            parse_fail(line, "key '" + key + "': bad number '" + v + "'");
        }
        return parsed;
    }

    std::map<std::string, Entry> entries_;
    std::set<std::string> consumed_;
};

}  // namespace

void RunConfig::validate() const {
    const auto fail = [](const std::string& what) {
        throw ConfigError(ConfigError::Kind::kInvariant, what);
    };
    train.validate();
    toy.validate();
    if (teacher.vocab_size < 2) fail("teacher.vocab_size must be >= 2 (one symbol plus EOS)");
    if (teacher.order < 0) fail("teacher.order must be >= 0");
    if (teacher.classes < 1) fail("teacher.classes must be >= 1");
    if (!(teacher.sharpness >= 0.0)) fail("teacher.sharpness must be >= 0");
    for (double h : teacher.hazard) {
        if (!(h >= 0.0 && h <= 1.0)) fail("teacher.hazard entries must lie in [0, 1]");
    }
    if (data.train_prompts < 1 || data.eval_prompts < 1) fail("prompt counts must be >= 1");
    if (data.prompt_len_min < 1 || data.prompt_len_max < data.prompt_len_min) {
        fail("prompt length range must satisfy 1 <= min <= max");
    }
    if (data.max_response_len < 1) fail("data.max_response_len must be >= 1");
    if (student_order < 0) fail("student.order must be >= 0");
    if (disc.hidden < 1) fail("disc.hidden must be >= 1");
    if (disc.feature_dim < teacher.vocab_size) {
        fail("disc.feature_dim must be >= teacher.vocab_size");
    }
    if (disc.ngram_orders.empty()) fail("disc.ngram_orders must be nonempty");
    for (int n : disc.ngram_orders) {
        if (n < 1) fail("disc.ngram_orders entries must be >= 1");
    }
    if (!(disc.length_scale >= 0.0)) fail("disc.length_scale must be >= 0");
    if (!(eval.temperature > 0.0)) fail("eval.temperature must be > 0");
    if (eval.ngram_max < 1) fail("eval.ngram_max must be >= 1");
    if (toy_support < 2) fail("toy.support must be >= 2");
    if (toy_components.empty()) fail("toy.components must be nonempty");
    for (const auto& c : toy_components) {
        if (!(c.weight > 0.0) || !(c.std > 0.0)) {
            fail("toy.components need positive weights and stds");
        }
    }
    if (label.empty()) fail("label must be nonempty");
}

RunConfig parse_config_text(const std::string& text) {
    KeyReader keys(text);
    RunConfig cfg;

    cfg.seed = keys.take_u64_required("seed");
    cfg.label = keys.take_string("label", cfg.label);
    cfg.out_dir = keys.take_string("out_dir", cfg.out_dir);

    TrainConfig& t = cfg.train;
    t.group_size = static_cast<int>(keys.take_int("train.group_size", t.group_size));
    t.kl_weight = keys.take_double("train.kl_weight", t.kl_weight);
    t.clip = keys.take_double("train.clip", t.clip);
    t.inner_epochs = static_cast<int>(keys.take_int("train.inner_epochs", t.inner_epochs));
    t.temperature = keys.take_double("train.temperature", t.temperature);
    t.batch_size = static_cast<int>(keys.take_int("train.batch_size", t.batch_size));
    t.gen_lr = keys.take_double("train.gen_lr", t.gen_lr);
    t.gad_gen_lr = keys.take_double("train.gad_gen_lr", t.gad_gen_lr);
    t.disc_lr = keys.take_double("train.disc_lr", t.disc_lr);
    t.warmup_epochs = static_cast<int>(keys.take_int("train.warmup_epochs", t.warmup_epochs));
    t.gad_epochs = static_cast<int>(keys.take_int("train.gad_epochs", t.gad_epochs));
    t.seqkd_epochs = static_cast<int>(keys.take_int("train.seqkd_epochs", t.seqkd_epochs));
    t.disc_pretrain_steps =
        static_cast<int>(keys.take_int("train.disc_pretrain_steps", t.disc_pretrain_steps));
    t.checkpoint_interval =
        static_cast<int>(keys.take_int("train.checkpoint_interval", t.checkpoint_interval));
    t.adv_std_floor = keys.take_double("train.adv_std_floor", t.adv_std_floor);
    {
        const std::string loss = keys.take_string("train.disc_loss", "bt");
        if (loss == "bt") {
            t.disc_loss = DiscLossKind::kBradleyTerry;
        } else if (loss == "ce") {
            t.disc_loss = DiscLossKind::kCrossEntropy;
        } else {
            throw ConfigError(ConfigError::Kind::kParse,
                              "train.disc_loss must be 'bt' or 'ce', got '" + loss + "'");
        }
        const std::string mode = keys.take_string("train.disc_mode", "onpolicy");
        if (mode == "onpolicy") {
            t.disc_mode = DiscMode::kOnPolicy;
        } else if (mode == "frozen") {
            t.disc_mode = DiscMode::kFrozen;
        } else {
            throw ConfigError(ConfigError::Kind::kParse,
                              "train.disc_mode must be 'onpolicy' or 'frozen', got '" + mode + "'");
        }
    }

    TeacherConfig& teacher = cfg.teacher;
    teacher.vocab_size = static_cast<int>(keys.take_int("teacher.vocab_size", teacher.vocab_size));
    teacher.order = static_cast<int>(keys.take_int("teacher.order", teacher.order));
    teacher.classes = static_cast<int>(keys.take_int("teacher.classes", teacher.classes));
    teacher.sharpness = keys.take_double("teacher.sharpness", teacher.sharpness);
    teacher.hazard = keys.take_double_list("teacher.hazard", teacher.hazard);
    teacher.eos_in_table = keys.take_bool("teacher.eos_in_table", teacher.eos_in_table);

    DataConfig& data = cfg.data;
    data.train_prompts = static_cast<int>(keys.take_int("data.train_prompts", data.train_prompts));
    data.eval_prompts = static_cast<int>(keys.take_int("data.eval_prompts", data.eval_prompts));
    data.prompt_len_min = static_cast<int>(keys.take_int("data.prompt_len_min", data.prompt_len_min));
    data.prompt_len_max = static_cast<int>(keys.take_int("data.prompt_len_max", data.prompt_len_max));
    data.max_response_len =
        static_cast<int>(keys.take_int("data.max_response_len", data.max_response_len));

    cfg.student_order = static_cast<int>(keys.take_int("student.order", cfg.student_order));

    DiscConfig& disc = cfg.disc;
    disc.hidden = static_cast<int>(keys.take_int("disc.hidden", disc.hidden));
    disc.feature_dim = static_cast<int>(keys.take_int("disc.feature_dim", disc.feature_dim));
    disc.ngram_orders = keys.take_int_list("disc.ngram_orders", disc.ngram_orders);
    disc.length_scale = keys.take_double("disc.length_scale", disc.length_scale);

    EvalConfig& eval = cfg.eval;
    eval.temperature = keys.take_double("eval.temperature", eval.temperature);
    eval.ngram_max = static_cast<int>(keys.take_int("eval.ngram_max", eval.ngram_max));

    ToyConfig& toy = cfg.toy;
    toy.steps = static_cast<int>(keys.take_int("toy.steps", toy.steps));
    toy.batch_size = static_cast<int>(keys.take_int("toy.batch_size", toy.batch_size));
    toy.student_lr = keys.take_double("toy.student_lr", toy.student_lr);
    toy.disc_lr = keys.take_double("toy.disc_lr", toy.disc_lr);
    toy.disc_pretrain_steps =
        static_cast<int>(keys.take_int("toy.disc_pretrain_steps", toy.disc_pretrain_steps));
    toy.disc_pretrain_lr = keys.take_double("toy.disc_pretrain_lr", toy.disc_pretrain_lr);
    toy.disc_hidden = static_cast<int>(keys.take_int("toy.disc_hidden", toy.disc_hidden));
    toy.init_mu = keys.take_double("toy.init_mu", toy.init_mu);
    toy.init_log_sigma = keys.take_double("toy.init_log_sigma", toy.init_log_sigma);
    toy.seqkd_samples = static_cast<int>(keys.take_int("toy.seqkd_samples", toy.seqkd_samples));
    toy.seqkd_lr = keys.take_double("toy.seqkd_lr", toy.seqkd_lr);
    toy.seqkd_max_steps =
        static_cast<int>(keys.take_int("toy.seqkd_max_steps", toy.seqkd_max_steps));
    toy.seqkd_grad_tol = keys.take_double("toy.seqkd_grad_tol", toy.seqkd_grad_tol);
    cfg.toy_support = static_cast<int>(keys.take_int("toy.support", cfg.toy_support));
    cfg.toy_components = keys.take_components("toy.components", cfg.toy_components);

    keys.finish();

    // Derived mirrors: the run seed feeds the trainers, and the rollout
    // cap matches the data cap.
    cfg.train.seed = cfg.seed;
    cfg.train.max_response_len = cfg.data.max_response_len;

    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    return parse_config_text(read_text_file(path));
}

std::string canonical_echo(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv;
    const auto add = [&kv](const std::string& key, const std::string& value) {
        kv.emplace_back(key, value);
    };
    const auto add_int = [&add](const std::string& key, std::int64_t v) {
        add(key, std::to_string(v));
    };
    const auto add_dbl = [&add](const std::string& key, double v) { add(key, format_double(v)); };
    const auto add_bool = [&add](const std::string& key, bool v) { add(key, v ? "true" : "false"); };

    add_int("seed", static_cast<std::int64_t>(cfg.seed));
    add("label", cfg.label);
    add("out_dir", cfg.out_dir);
    add_int("train.group_size", cfg.train.group_size);
    add_dbl("train.kl_weight", cfg.train.kl_weight);
    add_dbl("train.clip", cfg.train.clip);
    add_int("train.inner_epochs", cfg.train.inner_epochs);
    add_dbl("train.temperature", cfg.train.temperature);
    add_int("train.batch_size", cfg.train.batch_size);
    add_dbl("train.gen_lr", cfg.train.gen_lr);
    add_dbl("train.gad_gen_lr", cfg.train.gad_gen_lr);
    add_dbl("train.disc_lr", cfg.train.disc_lr);
    add_int("train.warmup_epochs", cfg.train.warmup_epochs);
    add_int("train.gad_epochs", cfg.train.gad_epochs);
    add_int("train.seqkd_epochs", cfg.train.seqkd_epochs);
    add_int("train.disc_pretrain_steps", cfg.train.disc_pretrain_steps);
    add_int("train.checkpoint_interval", cfg.train.checkpoint_interval);
    add_dbl("train.adv_std_floor", cfg.train.adv_std_floor);
    add("train.disc_loss", cfg.train.disc_loss == DiscLossKind::kBradleyTerry ? "bt" : "ce");
    add("train.disc_mode", cfg.train.disc_mode == DiscMode::kOnPolicy ? "onpolicy" : "frozen");
    add_int("teacher.vocab_size", cfg.teacher.vocab_size);
    add_int("teacher.order", cfg.teacher.order);
    add_int("teacher.classes", cfg.teacher.classes);
    add_dbl("teacher.sharpness", cfg.teacher.sharpness);
    {
        std::string hz;
        for (std::size_t i = 0; i < cfg.teacher.hazard.size(); ++i) {
            hz += (i == 0 ? "" : ",") + format_double(cfg.teacher.hazard[i]);
        }
        add("teacher.hazard", hz);
    }
    add_bool("teacher.eos_in_table", cfg.teacher.eos_in_table);
    add_int("data.train_prompts", cfg.data.train_prompts);
    add_int("data.eval_prompts", cfg.data.eval_prompts);
    add_int("data.prompt_len_min", cfg.data.prompt_len_min);
    add_int("data.prompt_len_max", cfg.data.prompt_len_max);
    add_int("data.max_response_len", cfg.data.max_response_len);
    add_int("student.order", cfg.student_order);
    add_int("disc.hidden", cfg.disc.hidden);
    add_int("disc.feature_dim", cfg.disc.feature_dim);
    {
        std::string orders;
        for (std::size_t i = 0; i < cfg.disc.ngram_orders.size(); ++i) {
            orders += (i == 0 ? "" : ",") + std::to_string(cfg.disc.ngram_orders[i]);
        }
        add("disc.ngram_orders", orders);
    }
    add_dbl("disc.length_scale", cfg.disc.length_scale);
    add_dbl("eval.temperature", cfg.eval.temperature);
    add_int("eval.ngram_max", cfg.eval.ngram_max);
    add_int("toy.steps", cfg.toy.steps);
    add_int("toy.batch_size", cfg.toy.batch_size);
    add_dbl("toy.student_lr", cfg.toy.student_lr);
    add_dbl("toy.disc_lr", cfg.toy.disc_lr);
    add_int("toy.disc_pretrain_steps", cfg.toy.disc_pretrain_steps);
    add_dbl("toy.disc_pretrain_lr", cfg.toy.disc_pretrain_lr);
    add_int("toy.disc_hidden", cfg.toy.disc_hidden);
    add_dbl("toy.init_mu", cfg.toy.init_mu);
    add_dbl("toy.init_log_sigma", cfg.toy.init_log_sigma);
    add_int("toy.seqkd_samples", cfg.toy.seqkd_samples);
    add_dbl("toy.seqkd_lr", cfg.toy.seqkd_lr);
    add_int("toy.seqkd_max_steps", cfg.toy.seqkd_max_steps);
    add_dbl("toy.seqkd_grad_tol", cfg.toy.seqkd_grad_tol);
    add_int("toy.support", cfg.toy_support);
    {
        std::string comps;
        for (std::size_t i = 0; i < cfg.toy_components.size(); ++i) {
            const auto& c = cfg.toy_components[i];
            comps += (i == 0 ? "" : ",") + format_double(c.weight) + ":" + format_double(c.mean) +
                     ":" + format_double(c.std);
        }
        add("toy.components", comps);
    }

    std::sort(kv.begin(), kv.end());
    std::string echo;
    for (const auto& [key, value] : kv) {
        echo += key + "=" + value + "\n";
    }
    return echo;
}

}  // namespace gad
