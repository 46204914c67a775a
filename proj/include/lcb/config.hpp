#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcb/error.hpp"
#include "lcb/format.hpp"

namespace lcb {

struct DataConfig {
    std::string source = "blobs";  // blobs | csv
    std::string path;              // csv: training file
    std::string test_path;         // csv: optional test file
    int num_classes = 4;           // blobs: class count; csv: 0 = infer
    int per_class = 1000;
    int test_per_class = 250;
    int dim = 16;
    double separation = 6.0;
    double noise_sigma = 1.0;
};

struct NoiseConfig {
    std::string family = "symmetric";  // symmetric | asymmetric
    double eta = 0.0;
    std::vector<std::pair<int, int>> mapping;
};

struct Schedule {
    int total_epochs = 60;
    int warmup_epochs = 5;
    int batch_size = 64;
    double learning_rate = 0.02;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int lr_decay_epoch = 0;  // 0 = no decay
    double lr_decay_factor = 0.1;
};

struct LossWeights {
    double lambda_u = 25.0;
    double lambda_r = 1.0;
    std::vector<double> prior;  // empty = uniform
};

struct RecoConfig {
    bool enabled = true;
    int epoch = 30;
    double tau_ps = 0.8;
    std::vector<int> extra_epochs;  // further corrections, off by default
};

struct AugConfig {
    // Multipliers of the per-feature standard deviation of the training set.
    double weak_sigma = 0.05;
    double strong_sigma = 0.2;
    double mask_prob = 0.2;
    bool strong_enabled = true;
};

struct MixConfig {
    double alpha = 4.0;
    bool fold_lambda = true;
};

struct RunConfig {
    DataConfig data;
    NoiseConfig noise;
    std::vector<int> hidden{64, 64};
    Schedule schedule;
    LossWeights loss;
    std::string method = "lcbooster";  // lcbooster | ce
    double tau_c = 0.5;
    int gmm_max_iter = 100;
    double gmm_tol = 1e-6;
    RecoConfig reco;
    AugConfig aug;
    MixConfig mix;
    std::uint64_t seed = 1;
    std::string out_dir = "runs/default";
    int checkpoint_every = 0;
    bool dump_losses = false;
    bool dump_division = false;
    bool record_wall_clock = false;
};

namespace detail {

inline std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}
inline std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

inline std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    s = trim(s);
    if (s.empty()) return out;
    while (true) {
        auto comma = s.find(',');
        out.push_back(trim(s.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

using Setter = std::function<std::optional<std::string>(RunConfig&, std::string_view)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeyDef {
    std::string key;
    Setter set;
    Getter get;
};

template <class T>
KeyDef int_key(std::string key, T RunConfig::*outer, int T::*field) {
    return {key,
            [outer, field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                auto x = parse_int(v);
                if (!x || *x < INT32_MIN || *x > INT32_MAX) return "expected an integer, got '" + std::string(v) + "'";
                c.*outer.*field = static_cast<int>(*x);
                return std::nullopt;
            },
            [outer, field](const RunConfig& c) { return std::to_string(c.*outer.*field); }};
}

template <class T>
KeyDef real_key(std::string key, T RunConfig::*outer, double T::*field) {
    return {key,
            [outer, field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                auto x = parse_double(v);
                if (!x) return "expected a real number, got '" + std::string(v) + "'";
                c.*outer.*field = *x;
                return std::nullopt;
            },
            [outer, field](const RunConfig& c) { return format_double(c.*outer.*field); }};
}

inline std::optional<bool> parse_bool(std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    return std::nullopt;
}

template <class T>
KeyDef bool_key(std::string key, T RunConfig::*outer, bool T::*field) {
    return {key,
            [outer, field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                auto x = parse_bool(v);
                if (!x) return "expected a boolean, got '" + std::string(v) + "'";
                c.*outer.*field = *x;
                return std::nullopt;
            },
            [outer, field](const RunConfig& c) { return std::string(c.*outer.*field ? "true" : "false"); }};
}

template <class T>
KeyDef string_key(std::string key, T RunConfig::*outer, std::string T::*field) {
    return {key,
            [outer, field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                c.*outer.*field = std::string(trim(v));
                return std::nullopt;
            },
            [outer, field](const RunConfig& c) { return c.*outer.*field; }};
}

inline std::optional<std::string> parse_int_list(std::string_view v, std::vector<int>& out) {
    std::vector<int> tmp;
    for (auto cell : split_list(v)) {
        auto x = parse_int(cell);
        if (!x) return "expected a comma list of integers, got '" + std::string(v) + "'";
        tmp.push_back(static_cast<int>(*x));
    }
    out = std::move(tmp);
    return std::nullopt;
}

inline std::optional<std::string> parse_real_list(std::string_view v, std::vector<double>& out) {
    std::vector<double> tmp;
    for (auto cell : split_list(v)) {
        auto x = parse_double(cell);
        if (!x) return "expected a comma list of reals, got '" + std::string(v) + "'";
        tmp.push_back(*x);
    }
    out = std::move(tmp);
    return std::nullopt;
}

inline std::optional<std::string> parse_pairs(std::string_view v, std::vector<std::pair<int, int>>& out) {
    std::vector<std::pair<int, int>> tmp;
    for (auto cell : split_list(v)) {
        auto colon = cell.find(':');
        if (colon == std::string_view::npos) return "expected src:dst pairs, got '" + std::string(cell) + "'";
        auto a = parse_int(cell.substr(0, colon));
        auto b = parse_int(cell.substr(colon + 1));
        if (!a || !b) return "expected src:dst pairs, got '" + std::string(cell) + "'";
        tmp.emplace_back(static_cast<int>(*a), static_cast<int>(*b));
    }
    out = std::move(tmp);
    return std::nullopt;
}

inline const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> table = [] {
        std::vector<KeyDef> t;
        t.push_back(string_key("data.source", &RunConfig::data, &DataConfig::source));
        t.push_back(string_key("data.path", &RunConfig::data, &DataConfig::path));
        t.push_back(string_key("data.test_path", &RunConfig::data, &DataConfig::test_path));
        t.push_back(int_key("data.num_classes", &RunConfig::data, &DataConfig::num_classes));
        t.push_back(int_key("data.per_class", &RunConfig::data, &DataConfig::per_class));
        t.push_back(int_key("data.test_per_class", &RunConfig::data, &DataConfig::test_per_class));
        t.push_back(int_key("data.dim", &RunConfig::data, &DataConfig::dim));
        t.push_back(real_key("data.separation", &RunConfig::data, &DataConfig::separation));
        t.push_back(real_key("data.noise_sigma", &RunConfig::data, &DataConfig::noise_sigma));

        t.push_back(string_key("noise.family", &RunConfig::noise, &NoiseConfig::family));
        t.push_back(real_key("noise.eta", &RunConfig::noise, &NoiseConfig::eta));
        t.push_back({"noise.mapping",
                     [](RunConfig& c, std::string_view v) { return parse_pairs(v, c.noise.mapping); },
                     [](const RunConfig& c) {
                         std::string s;
                         for (std::size_t i = 0; i < c.noise.mapping.size(); ++i)
                             s += (i ? "," : "") + std::to_string(c.noise.mapping[i].first) + ":" +
                                  std::to_string(c.noise.mapping[i].second);
                         return s;
                     }});

        t.push_back({"net.hidden", [](RunConfig& c, std::string_view v) { return parse_int_list(v, c.hidden); },
                     [](const RunConfig& c) { return join_ints(c.hidden); }});

        t.push_back(int_key("train.epochs", &RunConfig::schedule, &Schedule::total_epochs));
        t.push_back(int_key("train.warmup", &RunConfig::schedule, &Schedule::warmup_epochs));
        t.push_back(int_key("train.batch_size", &RunConfig::schedule, &Schedule::batch_size));
        t.push_back(real_key("train.lr", &RunConfig::schedule, &Schedule::learning_rate));
        t.push_back(real_key("train.momentum", &RunConfig::schedule, &Schedule::momentum));
        t.push_back(real_key("train.weight_decay", &RunConfig::schedule, &Schedule::weight_decay));
        t.push_back(int_key("train.lr_decay_epoch", &RunConfig::schedule, &Schedule::lr_decay_epoch));
        t.push_back(real_key("train.lr_decay_factor", &RunConfig::schedule, &Schedule::lr_decay_factor));
        t.push_back({"train.method",
                     [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                         c.method = std::string(trim(v));
                         return std::nullopt;
                     },
                     [](const RunConfig& c) { return c.method; }});

        t.push_back(real_key("loss.lambda_u", &RunConfig::loss, &LossWeights::lambda_u));
        t.push_back(real_key("loss.lambda_r", &RunConfig::loss, &LossWeights::lambda_r));
        t.push_back({"loss.prior", [](RunConfig& c, std::string_view v) { return parse_real_list(v, c.loss.prior); },
                     [](const RunConfig& c) { return join_doubles(c.loss.prior); }});

        t.push_back({"select.tau_c",
                     [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                         auto x = parse_double(v);
                         if (!x) return "expected a real number, got '" + std::string(v) + "'";
                         c.tau_c = *x;
                         return std::nullopt;
                     },
                     [](const RunConfig& c) { return format_double(c.tau_c); }});
        t.push_back({"gmm.max_iter",
                     [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                         auto x = parse_int(v);
                         if (!x) return "expected an integer, got '" + std::string(v) + "'";
                         c.gmm_max_iter = static_cast<int>(*x);
                         return std::nullopt;
                     },
                     [](const RunConfig& c) { return std::to_string(c.gmm_max_iter); }});
        t.push_back({"gmm.tol",
                     [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                         auto x = parse_double(v);
                         if (!x) return "expected a real number, got '" + std::string(v) + "'";
                         c.gmm_tol = *x;
                         return std::nullopt;
                     },
                     [](const RunConfig& c) { return format_double(c.gmm_tol); }});

        t.push_back(bool_key("reco.enabled", &RunConfig::reco, &RecoConfig::enabled));
        t.push_back(int_key("reco.epoch", &RunConfig::reco, &RecoConfig::epoch));
        t.push_back(real_key("reco.tau_ps", &RunConfig::reco, &RecoConfig::tau_ps));
        t.push_back({"reco.extra_epochs",
                     [](RunConfig& c, std::string_view v) { return parse_int_list(v, c.reco.extra_epochs); },
                     [](const RunConfig& c) { return join_ints(c.reco.extra_epochs); }});

        t.push_back(real_key("aug.weak_sigma", &RunConfig::aug, &AugConfig::weak_sigma));
        t.push_back(real_key("aug.strong_sigma", &RunConfig::aug, &AugConfig::strong_sigma));
        t.push_back(real_key("aug.mask_prob", &RunConfig::aug, &AugConfig::mask_prob));
        t.push_back(bool_key("aug.strong_enabled", &RunConfig::aug, &AugConfig::strong_enabled));

        t.push_back(real_key("mix.alpha", &RunConfig::mix, &MixConfig::alpha));
        t.push_back(bool_key("mix.fold_lambda", &RunConfig::mix, &MixConfig::fold_lambda));

        t.push_back({"run.seed",
                     [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                         auto x = parse_int(v);
                         if (!x || *x < 0) return "expected a non-negative integer, got '" + std::string(v) + "'";
                         c.seed = static_cast<std::uint64_t>(*x);
                         return std::nullopt;
                     },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});
        t.push_back({"run.out",
                     [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                         c.out_dir = std::string(trim(v));
                         return std::nullopt;
                     },
                     [](const RunConfig& c) { return c.out_dir; }});
        t.push_back({"run.checkpoint_every",
                     [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                         auto x = parse_int(v);
                         if (!x) return "expected an integer, got '" + std::string(v) + "'";
                         c.checkpoint_every = static_cast<int>(*x);
                         return std::nullopt;
                     },
                     [](const RunConfig& c) { return std::to_string(c.checkpoint_every); }});
        auto flag = [](std::string key, bool RunConfig::*field) {
            return KeyDef{key,
                          [field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                              auto x = parse_bool(v);
                              if (!x) return "expected a boolean, got '" + std::string(v) + "'";
                              c.*field = *x;
                              return std::nullopt;
                          },
                          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
        };
        t.push_back(flag("run.dump_losses", &RunConfig::dump_losses));
        t.push_back(flag("run.dump_division", &RunConfig::dump_division));
        t.push_back(flag("run.wall_clock", &RunConfig::record_wall_clock));
        return t;
    }();
    return table;
}

inline const KeyDef* find_key(std::string_view key) {
    for (const auto& k : key_table())
        if (k.key == key) return &k;
    return nullptr;
}

}  // namespace detail

/// Every documented key, in canonical order.
inline std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : detail::key_table()) out.push_back(k.key);
    return out;
}

/// Sets one key from its text form. Returns an error message on failure.
inline std::optional<std::string> set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
    const auto* def = detail::find_key(trim(key));
    if (!def) return "unknown key '" + std::string(trim(key)) + "'";
    if (auto err = def->set(cfg, value)) return std::string(trim(key)) + ": " + *err;
    return std::nullopt;
}

inline std::string get_config_value(const RunConfig& cfg, std::string_view key) {
    const auto* def = detail::find_key(key);
    if (!def) throw ArgumentError("unknown key '" + std::string(key) + "'");
    return def->get(cfg);
}

/// All cross-field constraints; empty when the config is valid.
inline std::vector<std::string> config_problems(const RunConfig& c) {
    std::vector<std::string> p;
    auto need = [&p](bool ok, std::string msg) {
        if (!ok) p.push_back(std::move(msg));
    };
    need(c.data.source == "blobs" || c.data.source == "csv", "data.source must be 'blobs' or 'csv'");
    if (c.data.source == "csv") need(!c.data.path.empty(), "data.path is required when data.source = csv");
    if (c.data.source == "blobs") {
        need(c.data.num_classes >= 2, "data.num_classes must be >= 2 for blobs");
        need(c.data.per_class > 0, "data.per_class must be positive");
        need(c.data.test_per_class > 0, "data.test_per_class must be positive");
        need(c.data.dim > 0, "data.dim must be positive");
        need(c.data.separation > 0.0, "data.separation must be positive");
        need(c.data.noise_sigma >= 0.0, "data.noise_sigma must be >= 0");
    } else {
        need(c.data.num_classes >= 0, "data.num_classes must be >= 0 (0 = infer)");
    }
    need(c.noise.family == "symmetric" || c.noise.family == "asymmetric",
         "noise.family must be 'symmetric' or 'asymmetric'");
    need(c.noise.eta >= 0.0 && c.noise.eta <= 1.0, "noise.eta must lie in [0, 1]");
    if (c.data.num_classes > 0)
        for (auto [a, b] : c.noise.mapping)
            need(a >= 0 && a < c.data.num_classes && b >= 0 && b < c.data.num_classes,
                 "noise.mapping pair " + std::to_string(a) + ":" + std::to_string(b) + " out of class range");
    for (int h : c.hidden) need(h > 0, "net.hidden widths must be positive");

    const auto& s = c.schedule;
    need(s.total_epochs > 0, "train.epochs must be positive");
    need(s.warmup_epochs >= 0, "train.warmup must be >= 0");
    need(s.warmup_epochs < s.total_epochs, "train.warmup must be < train.epochs");
    need(s.batch_size > 0, "train.batch_size must be positive");
    need(s.learning_rate >= 0.0, "train.lr must be >= 0");
    need(s.momentum >= 0.0 && s.momentum < 1.0, "train.momentum must lie in [0, 1)");
    need(s.weight_decay >= 0.0, "train.weight_decay must be >= 0");
    need(s.lr_decay_epoch >= 0 && s.lr_decay_epoch <= s.total_epochs, "train.lr_decay_epoch must lie in [0, epochs]");
    need(s.lr_decay_factor > 0.0 && s.lr_decay_factor <= 1.0, "train.lr_decay_factor must lie in (0, 1]");
    need(c.method == "lcbooster" || c.method == "ce", "train.method must be 'lcbooster' or 'ce'");

    need(c.loss.lambda_u >= 0.0, "loss.lambda_u must be >= 0");
    need(c.loss.lambda_r >= 0.0, "loss.lambda_r must be >= 0");
    if (!c.loss.prior.empty()) {
        double sum = 0.0;
        bool nonneg = true;
        for (double v : c.loss.prior) {
            sum += v;
            nonneg = nonneg && v >= 0.0;
        }
        need(nonneg && std::abs(sum - 1.0) <= 1e-9, "loss.prior must be a distribution");
        if (c.data.num_classes > 0)
            need(c.loss.prior.size() == static_cast<std::size_t>(c.data.num_classes),
                 "loss.prior length must equal data.num_classes");
    }
    need(c.tau_c >= 0.0 && c.tau_c <= 1.0, "select.tau_c must lie in [0, 1]");
    need(c.gmm_max_iter > 0, "gmm.max_iter must be positive");
    need(c.gmm_tol > 0.0, "gmm.tol must be positive");

    need(c.reco.tau_ps >= 0.0 && c.reco.tau_ps <= 1.0, "reco.tau_ps must lie in [0, 1]");
    if (c.reco.enabled && c.method == "lcbooster") {
        need(s.warmup_epochs < c.reco.epoch && c.reco.epoch < s.total_epochs,
             "reco.epoch must satisfy train.warmup < reco.epoch < train.epochs");
        for (int e : c.reco.extra_epochs)
            need(s.warmup_epochs < e && e < s.total_epochs && e != c.reco.epoch,
                 "reco.extra_epochs entries must lie strictly between warmup and epochs and differ from reco.epoch");
    }
    need(c.aug.weak_sigma >= 0.0, "aug.weak_sigma must be >= 0");
    need(c.aug.weak_sigma <= c.aug.strong_sigma, "aug.weak_sigma must not exceed aug.strong_sigma");
    need(c.aug.mask_prob >= 0.0 && c.aug.mask_prob < 1.0, "aug.mask_prob must lie in [0, 1)");
    need(c.mix.alpha > 0.0, "mix.alpha must be positive");
    need(c.checkpoint_every >= 0, "run.checkpoint_every must be >= 0");
    return p;
}

/// Parses `section.key = value` lines ('#' starts a comment). Collects every
/// unknown key, type error and constraint violation before throwing.
inline RunConfig parse_config_text(std::string_view text,
                                   const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    RunConfig cfg;
    std::vector<std::string> problems;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> seen;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        std::string key(trim(line.substr(0, eq)));
        if (auto [it, fresh] = seen.emplace(key, lineno); !fresh)
            problems.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        if (auto err = set_config_value(cfg, key, line.substr(eq + 1)))
            problems.push_back("line " + std::to_string(lineno) + ": " + *err);
    }
    for (const auto& [k, v] : overrides)
        if (auto err = set_config_value(cfg, k, v)) problems.push_back("override: " + *err);
    if (problems.empty()) problems = config_problems(cfg);
    if (!problems.empty()) throw ConfigError(problems);
    return cfg;
}

/// Canonical `key = value` text with every default materialized.
inline std::string resolved_config_text(const RunConfig& cfg) {
    std::string out;
    for (const auto& k : detail::key_table()) out += k.key + " = " + k.get(cfg) + "\n";
    return out;
}

inline nlohmann::ordered_json resolved_config_json(const RunConfig& cfg) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& k : detail::key_table()) j[k.key] = k.get(cfg);
    return j;
}

/// Loads a config file, or the resolved config embedded in a run manifest
/// (any file whose first non-space character is '{').
inline RunConfig load_config(const std::string& path,
                             const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file " + path});
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (auto first = text.find_first_not_of(" \t\r\n"); first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError({"manifest " + path + " is not valid JSON: " + e.what()});
        }
        if (!j.contains("config") || !j["config"].is_object())
            throw ConfigError({"manifest " + path + " has no 'config' object"});
        std::string flat;
        for (auto& [k, v] : j["config"].items()) flat += k + " = " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
        return parse_config_text(flat, overrides);
    }
    return parse_config_text(text, overrides);
}

}  // namespace lcb
