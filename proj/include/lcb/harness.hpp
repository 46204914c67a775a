#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcb/config.hpp"
#include "lcb/metrics.hpp"
#include "lcb/reco.hpp"
#include "lcb/trainer.hpp"
#include "lcb/version.hpp"

namespace lcb {

namespace fs = std::filesystem;

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kMetricsFile = "metrics.csv";

inline std::string checkpoint_name(int net_index) { return "net" + std::to_string(net_index + 1) + ".ckpt"; }

inline nlohmann::ordered_json manifest_json(const RunConfig& cfg, const RunResult& r,
                                            const std::optional<nlohmann::ordered_json>& wall_clock) {
    using nlohmann::ordered_json;
    ordered_json m;
    m["format"] = "LCB-MANIFEST-1";
    m["version"] = kVersion;
    m["config"] = resolved_config_json(cfg);
    ordered_json summary;
    summary["epochs"] = r.records.size();
    summary["best_test_acc"] = r.best_test_acc;
    summary["last10_test_acc"] = r.last10_test_acc;
    summary["final_auc"] = r.final_auc ? ordered_json(*r.final_auc) : ordered_json(nullptr);
    if (!r.records.empty()) summary["final_test_acc"] = r.records.back().test_acc;
    m["summary"] = summary;
    ordered_json events = ordered_json::array();
    for (const auto& e : r.reco_events) {
        ordered_json j;
        j["epoch"] = e.epoch;
        j["tau_ps"] = e.tau_ps;
        j["size"] = e.size;
        j["precision"] = e.precision ? ordered_json(*e.precision) : ordered_json("NA");
        events.push_back(j);
    }
    m["reco_events"] = events;
    m["warnings"] = r.warnings;
    if (wall_clock) m["wall_clock"] = *wall_clock;
    return m;
}

namespace detail {

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + p.string());
}

inline void dump_division(const fs::path& dir, int epoch, const std::array<Division, 2>& divisions,
                          const std::array<LossVector, 2>& losses, const Trainer& t, bool want_losses,
                          bool want_division) {
    fs::create_directories(dir);
    // Ground truth of the label channel the divisions were built from.
    const auto& ch = t.channels();
    const auto& labels =
        ch.active_channel() == LabelChannel::Observed ? ch.observed_for_analysis() : ch.corrected_for_analysis();
    const std::vector<bool> truly_clean = eval::is_clean(t.train_set(), labels);
    for (std::size_t k = 0; k < 2; ++k) {
        const std::string tag = "e" + std::to_string(epoch) + "_net" + std::to_string(k + 1) + ".csv";
        const Division& d = divisions[k];
        if (want_losses) {
            std::string s = "id,raw_loss,norm_loss,p_clean\n";
            for (std::size_t i = 0; i < d.p_clean.size(); ++i)
                s += std::to_string(i) + ',' + format_double(losses[k].raw[i]) + ',' +
                     format_double(losses[k].normalized[i]) + ',' + format_double(d.p_clean[i]) + '\n';
            write_text(dir / ("losses_" + tag), s);
        }
        if (want_division) {
            std::string s = "id,p_clean,is_clean_pred,is_clean_true\n";
            for (std::size_t i = 0; i < d.p_clean.size(); ++i)
                s += std::to_string(i) + ',' + format_double(d.p_clean[i]) + ',' +
                     (d.p_clean[i] >= d.tau_c ? "1" : "0") + ',' + (truly_clean[i] ? "1" : "0") + '\n';
            write_text(dir / ("division_" + tag), s);
        }
    }
}

}  // namespace detail

/// Runs one experiment into `out_dir`: manifest.json, metrics.csv,
/// net1.ckpt, net2.ckpt, plus dumps/ when enabled.
inline RunResult run_experiment(const RunConfig& cfg, const fs::path& out_dir, bool verbose = false) {
    fs::create_directories(out_dir);
    const auto started = std::chrono::system_clock::now();
    MetricsSink sink((out_dir / kMetricsFile).string());
    const fs::path dumps = out_dir / "dumps";

    TrainerHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& rec, const Trainer& t) {
        sink.emit(rec);
        if (cfg.checkpoint_every > 0 && rec.epoch % cfg.checkpoint_every == 0) {
            fs::create_directories(dumps);
            for (int k = 0; k < 2; ++k)
                save_checkpoint(t.nets()[static_cast<std::size_t>(k)],
                                (dumps / ("e" + std::to_string(rec.epoch) + "_" + checkpoint_name(k))).string());
        }
        if (verbose) std::cerr << format_record(rec) << '\n';
    };
    if (cfg.dump_losses || cfg.dump_division) {
        hooks.on_division = [&](int epoch, const std::array<Division, 2>& d, const std::array<LossVector, 2>& l,
                                const Trainer& t) {
            detail::dump_division(dumps, epoch, d, l, t, cfg.dump_losses, cfg.dump_division);
        };
    }
    hooks.on_warning = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };

    Trainer trainer(cfg, make_run_data(cfg), hooks);
    RunResult result = trainer.run();
    for (int k = 0; k < 2; ++k)
        save_checkpoint(result.nets[static_cast<std::size_t>(k)], (out_dir / checkpoint_name(k)).string());

    std::optional<nlohmann::ordered_json> clock;
    if (cfg.record_wall_clock) {
        const auto finished = std::chrono::system_clock::now();
        nlohmann::ordered_json w;
        w["started_unix"] = std::chrono::duration_cast<std::chrono::seconds>(started.time_since_epoch()).count();
        w["elapsed_seconds"] = std::chrono::duration<double>(finished - started).count();
        clock = w;
    }
    detail::write_text(out_dir / kManifestFile, manifest_json(cfg, result, clock).dump(2) + "\n");
    return result;
}

struct SweepEntry {
    std::string value;
    fs::path dir;
    RunResult result;
};

/// One run directory per value of `axis`, named "<axis>=<value>".
inline std::vector<SweepEntry> run_sweep(const RunConfig& base, const std::string& axis,
                                         const std::vector<std::string>& values, const fs::path& out_dir,
                                         bool verbose = false) {
    if (values.empty()) throw ConfigError({"sweep: no values given"});
    std::vector<std::string> problems;
    std::vector<RunConfig> configs;
    for (const auto& v : values) {
        RunConfig c = base;
        if (auto err = set_config_value(c, axis, v)) {
            problems.push_back(*err);
            continue;
        }
        c.out_dir = (out_dir / (axis + "=" + v)).string();
        for (auto& p : config_problems(c)) problems.push_back(axis + "=" + v + ": " + p);
        configs.push_back(std::move(c));
    }
    if (!problems.empty()) throw ConfigError(problems);

    fs::create_directories(out_dir);
    std::vector<SweepEntry> out;
    std::string summary = "value,best_test_acc,last10_test_acc,final_auc,reco_size,reco_precision\n";
    for (std::size_t k = 0; k < configs.size(); ++k) {
        RunResult r = run_experiment(configs[k], configs[k].out_dir, verbose);
        summary += values[k] + ',' + format_double(r.best_test_acc) + ',' + format_double(r.last10_test_acc) + ',' +
                   (r.final_auc ? format_double(*r.final_auc) : "") + ',';
        if (!r.reco_events.empty()) {
            const auto& e = r.reco_events.front();
            summary += std::to_string(e.size) + ',' + (e.precision ? format_double(*e.precision) : "NA");
        } else {
            summary += ",";
        }
        summary += '\n';
        out.push_back({values[k], configs[k].out_dir, std::move(r)});
    }
    detail::write_text(out_dir / "sweep.csv", summary);
    return out;
}

/// Plain-CE training of a single fresh net (the re-train protocol).
inline Mlp train_plain_ce(const LabeledDataset& train, const RunConfig& cfg, std::uint64_t seed) {
    Mlp net = Mlp::glorot(net_widths(cfg, static_cast<int>(train.dim()), train.num_classes()),
                          derive_seed(seed, "retrain/init"));
    SgdState opt{cfg.schedule.learning_rate, cfg.schedule.momentum, cfg.schedule.weight_decay, {}};
    const auto classes = static_cast<std::size_t>(train.num_classes());
    Matrix targets(train.size(), classes, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) targets(i, static_cast<std::size_t>(train.observed(i))) = 1.0;
    std::vector<ItemRole> roles(train.size(), ItemRole::Supervised);
    for (int e = 1; e <= cfg.schedule.total_epochs; ++e) {
        const auto& s = cfg.schedule;
        opt.learning_rate =
            s.lr_decay_epoch > 0 && e >= s.lr_decay_epoch ? s.learning_rate * s.lr_decay_factor : s.learning_rate;
        Rng rng = make_rng(seed, "retrain/shuffle", {static_cast<std::uint64_t>(e)});
        train_items(net, opt, train.features(), targets, roles, LossSpec{}, s.batch_size, rng);
    }
    return net;
}

}  // namespace lcb
