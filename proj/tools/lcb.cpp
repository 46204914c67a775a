// lcb: experiment CLI for the label-correction / sample-selection pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcb/lcb.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> sets;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool need_config) {
    auto* opt = cmd->add_option("--config", a.config, "config file or run manifest");
    if (need_config) opt->required();
    cmd->add_option("--seed", a.seed, "overrides run.seed");
    cmd->add_option("--out", a.out, "output directory (overrides run.out)");
    cmd->add_option("--set", a.sets, "extra key=value override (repeatable)");
    cmd->add_flag("-v,--verbose", a.verbose, "print metrics rows while training");
}

lcb::RunConfig resolve(const CommonArgs& a) {
    std::vector<std::pair<std::string, std::string>> overrides;
    std::vector<std::string> problems;
    for (const auto& s : a.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            problems.push_back("--set expects key=value, got '" + s + "'");
            continue;
        }
        overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (a.seed) overrides.emplace_back("run.seed", std::to_string(*a.seed));
    if (!a.out.empty()) overrides.emplace_back("run.out", a.out);
    if (!problems.empty()) throw lcb::ConfigError(problems);
    if (a.config.empty()) return lcb::parse_config_text("", overrides);
    return lcb::load_config(a.config, overrides);
}

void print_summary(const lcb::RunResult& r, const fs::path& dir) {
    std::printf("run directory: %s\n", dir.string().c_str());
    std::printf("best test acc: %.4f\nlast-10 mean acc: %.4f\n", r.best_test_acc, r.last10_test_acc);
    if (r.final_auc) std::printf("final selection AUC: %.4f\n", *r.final_auc);
    for (const auto& e : r.reco_events)
        std::printf("correction @ epoch %d: tau_ps=%g relabeled=%zu precision=%s\n", e.epoch, e.tau_ps, e.size,
                    e.precision ? lcb::format_double(*e.precision).c_str() : "NA");
}

std::vector<std::string> split_values(const std::string& s) {
    std::vector<std::string> out;
    for (auto v : lcb::detail::split_list(s)) out.emplace_back(v);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy-label training lab: GMM sample selection, mixup co-training and label correction"};
    app.require_subcommand(1);

    CommonArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "train one configuration");
    add_common(run_cmd, run_args, false);

    CommonArgs sweep_args;
    std::string axis, values;
    auto* sweep_cmd = app.add_subcommand("sweep", "one run per value of a config key");
    add_common(sweep_cmd, sweep_args, false);
    sweep_cmd->add_option("--axis", axis, "config key to vary, e.g. reco.tau_ps")->required();
    sweep_cmd->add_option("--values", values, "comma-separated values")->required();

    std::size_t worlds = 1000;
    std::uint64_t theorem_seed = 1;
    auto* verify_cmd = app.add_subcommand("verify-theorem", "exhaustively check the correction threshold bound");
    verify_cmd->add_option("--worlds", worlds, "number of random discrete worlds");
    verify_cmd->add_option("--seed", theorem_seed, "generator seed");

    std::string run_dir, relabel_out;
    std::optional<double> relabel_tau;
    auto* relabel_cmd = app.add_subcommand("relabel", "export a corrected dataset from a finished run");
    relabel_cmd->add_option("--run", run_dir, "run directory (manifest + checkpoints)")->required();
    relabel_cmd->add_option("--tau", relabel_tau, "confidence threshold (default: reco.tau_ps of the run)");
    relabel_cmd->add_option("--out", relabel_out, "output CSV (default: <run>/relabeled.csv)");

    std::string retrain_run, retrain_data;
    std::optional<int> retrain_epochs;
    auto* retrain_cmd = app.add_subcommand("retrain", "train a fresh net from a relabeled CSV");
    retrain_cmd->add_option("--run", retrain_run, "run directory supplying the config and test split")->required();
    retrain_cmd->add_option("--data", retrain_data, "relabeled training CSV")->required();
    retrain_cmd->add_option("--epochs", retrain_epochs, "override the number of epochs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            lcb::RunConfig cfg = resolve(run_args);
            lcb::RunResult r = lcb::run_experiment(cfg, cfg.out_dir, run_args.verbose);
            print_summary(r, cfg.out_dir);
            return 0;
        }
        if (*sweep_cmd) {
            lcb::RunConfig cfg = resolve(sweep_args);
            auto entries = lcb::run_sweep(cfg, axis, split_values(values), cfg.out_dir, sweep_args.verbose);
            std::printf("%-12s %-10s %-10s %-10s %s\n", "value", "best_acc", "last10", "reco_size", "precision");
            for (const auto& e : entries) {
                std::string size = "-", prec = "-";
                if (!e.result.reco_events.empty()) {
                    size = std::to_string(e.result.reco_events.front().size);
                    prec = e.result.reco_events.front().precision
                               ? lcb::format_double(*e.result.reco_events.front().precision)
                               : "NA";
                }
                std::printf("%-12s %-10.4f %-10.4f %-10s %s\n", e.value.c_str(), e.result.best_test_acc,
                            e.result.last10_test_acc, size.c_str(), prec.c_str());
            }
            std::printf("summary: %s\n", (fs::path(cfg.out_dir) / "sweep.csv").string().c_str());
            return 0;
        }
        if (*verify_cmd) {
            lcb::Theorem1Report r = lcb::verify_random_worlds(worlds, theorem_seed);
            std::printf("worlds checked: %zu\n(input, class) pairs: %zu\npremise satisfied: %zu\ncounterexamples: %zu\n",
                        r.worlds, r.checks, r.premises_true, r.counterexamples);
            return r.counterexamples == 0 ? 0 : 1;
        }
        if (*relabel_cmd) {
            const fs::path dir(run_dir);
            lcb::RunConfig cfg = lcb::load_config((dir / lcb::kManifestFile).string());
            lcb::RunData data = lcb::make_run_data(cfg);
            lcb::Mlp a = lcb::load_checkpoint((dir / lcb::checkpoint_name(0)).string());
            lcb::Mlp b = lcb::load_checkpoint((dir / lcb::checkpoint_name(1)).string());
            const double tau = relabel_tau.value_or(cfg.reco.tau_ps);
            lcb::RelabelResult r = lcb::relabel_export(a, b, data.train, tau);
            const std::string out = relabel_out.empty() ? (dir / "relabeled.csv").string() : relabel_out;
            lcb::save_csv(out, r.relabeled.features(), r.relabeled.observed_labels());
            auto truth = lcb::eval::true_labels(data.train);
            std::size_t clean_before = 0, clean_after = 0;
            for (std::size_t i = 0; i < data.train.size(); ++i) {
                clean_before += data.train.observed(i) == truth[i] ? 1 : 0;
                clean_after += r.relabeled.observed(i) == truth[i] ? 1 : 0;
            }
            const double n = static_cast<double>(data.train.size());
            std::printf("relabeled: %zu of %zu (tau_ps=%g)\nrelabel precision: %s\n", r.corrected.relabeled_ids.size(),
                        data.train.size(), tau, r.precision ? lcb::format_double(*r.precision).c_str() : "NA");
            std::printf("label accuracy before: %.4f\nlabel accuracy after: %.4f\nwritten: %s\n", clean_before / n,
                        clean_after / n, out.c_str());
            return 0;
        }
        if (*retrain_cmd) {
            lcb::RunConfig cfg = lcb::load_config((fs::path(retrain_run) / lcb::kManifestFile).string());
            if (retrain_epochs) cfg.schedule.total_epochs = *retrain_epochs;
            lcb::RunData data = lcb::make_run_data(cfg);
            lcb::LabeledDataset train = lcb::load_csv(retrain_data, data.train.num_classes());
            lcb::Mlp net = lcb::train_plain_ce(train, cfg, cfg.seed);
            const double acc = lcb::accuracy_of(net.forward_batch(data.test.features()),
                                                lcb::eval::true_labels(data.test));
            std::printf("retrain test accuracy: %.4f\n", acc);
            return 0;
        }
    } catch (const lcb::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
