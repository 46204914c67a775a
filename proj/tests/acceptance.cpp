// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>

#include "support.hpp"

using namespace lcb;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

RunConfig desk_config() { return load_config(std::string(LCB_SOURCE_DIR) + "/configs/desk_sym80.cfg"); }

/// Desk runs shared by criteria 6-8, trained once.
struct DeskRuns {
    RunConfig cfg;
    std::map<std::string, RunResult> arms;
    std::map<std::string, double> seconds;

    const RunResult& get(const std::string& name, const std::function<void(RunConfig&)>& tweak) {
        if (auto it = arms.find(name); it != arms.end()) return it->second;
        RunConfig c = cfg;
        tweak(c);
        const auto t0 = Clock::now();
        RunResult r = run(c);
        seconds[name] = seconds_since(t0);
        return arms.emplace(name, std::move(r)).first->second;
    }
    const RunResult& full() { return get("full", [](RunConfig&) {}); }
};

double final_acc(const RunResult& r) { return r.records.back().test_acc; }

Outcome gradients() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> weight(0.0, 3.0);
    std::uniform_int_distribution<std::size_t> batch(1, 8);
    double worst = 0.0;
    std::size_t entries = 0;
    const int configs = 24;
    for (int k = 0; k < configs; ++k) {
        Mlp net = lcbtest::random_net(lcbtest::random_widths(rng), 1000 + static_cast<std::uint64_t>(k), rng);
        Batch b = lcbtest::random_batch(batch(rng), net.input_dim(), net.num_classes(), rng);
        auto g = lcbtest::check_gradients(net, b, LossSpec{weight(rng), weight(rng), {}}, 1e-5);
        worst = std::max(worst, g.worst_rel);
        entries += g.entries;
    }
    const double s = seconds_since(t0);
    return {worst <= 1e-4 && s < 10.0,
            fmt("%d nets, %zu entries, worst relative error %.2e (limit 1e-4), %.2f s", configs, entries, worst, s)};
}

Outcome gmm_recovery() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> a(0.1, 0.05), b(0.7, 0.1);
    std::vector<double> xs(5000);
    for (double& x : xs) x = unit(rng) < 0.2 ? a(rng) : b(rng);
    GmmFit f = fit_gmm(xs);
    bool monotone = true;
    for (std::size_t k = 1; k < f.log_likelihood.size(); ++k)
        monotone = monotone && f.log_likelihood[k] >= f.log_likelihood[k - 1];
    const double s = seconds_since(t0);
    const bool ok = std::abs(f.mean[0] - 0.1) <= 0.02 && std::abs(f.mean[1] - 0.7) <= 0.02 &&
                    std::abs(f.weight[0] - 0.2) <= 0.03 && std::abs(f.weight[1] - 0.8) <= 0.03 && monotone &&
                    s < 5.0;
    return {ok, fmt("means %.4f/%.4f weights %.4f/%.4f, %d iterations, log-likelihood %s, %.2f s", f.mean[0],
                    f.mean[1], f.weight[0], f.weight[1], f.iterations, monotone ? "monotone" : "NOT monotone", s)};
}

Outcome theorem() {
    const auto t0 = Clock::now();
    Theorem1Report r = verify_random_worlds(1000, 1);
    const double s = seconds_since(t0);
    return {r.counterexamples == 0 && s < 10.0,
            fmt("%zu worlds, %zu (input, class) checks, %zu premises true, %zu counterexamples, %.2f s", r.worlds,
                r.checks, r.premises_true, r.counterexamples, s)};
}

Outcome noise_statistics() {
    const auto t0 = Clock::now();
    LabeledDataset ds = make_blobs(10, 5000, 2, 1.0, 1.0, 3);
    std::size_t entries = 0, outside = 0;
    double worst_z = 0.0;
    auto check = [&](const NoiseSpec& spec, std::uint64_t seed) {
        NoiseReport r = measure(inject(ds, spec, seed));
        Matrix expect = expected_transition(spec);
        for (std::size_t i = 0; i < expect.rows(); ++i)
            for (std::size_t j = 0; j < expect.cols(); ++j) {
                const double p = expect(i, j);
                const double got = (*r.transition[i])[j];
                const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(r.class_counts[i]));
                ++entries;
                if (sigma == 0.0) {
                    outside += got == p ? 0 : 1;
                    continue;
                }
                const double z = std::abs(got - p) / sigma;
                worst_z = std::max(worst_z, z);
                outside += z <= 3.0 ? 0 : 1;
            }
    };
    std::uint64_t seed = 1;
    for (double eta : {0.2, 0.5, 0.9}) check({NoiseFamily::Symmetric, eta, {}, 10}, seed++);
    check({NoiseFamily::Asymmetric, 0.4, mapping_from_pairs({{0, 1}, {1, 0}}, 10), 10}, seed++);
    const double s = seconds_since(t0);
    return {outside == 0 && s < 5.0,
            fmt("%zu entries over 4 injections, %zu outside 3 sigma, largest |z| %.2f, %.2f s", entries, outside,
                worst_z, s)};
}

Outcome reco_monotonicity() {
    const auto t0 = Clock::now();
    RunConfig cfg = desk_config();
    cfg.schedule.total_epochs = cfg.reco.epoch - 1;
    cfg.schedule.lr_decay_epoch = 0;
    cfg.reco.enabled = false;
    Trainer t(cfg, make_run_data(cfg));
    t.run();
    std::string cells;
    bool sizes_ok = true, precision_ok = true;
    std::optional<std::size_t> prev_size;
    std::optional<double> prev_prec;
    for (double tau : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
        RelabelResult r = relabel_export(t.nets()[0], t.nets()[1], t.train_set(), tau);
        const std::size_t n = r.corrected.relabeled_ids.size();
        if (prev_size && n > *prev_size) sizes_ok = false;
        if (r.precision) {
            if (prev_prec && *r.precision < *prev_prec) precision_ok = false;
            prev_prec = r.precision;
        }
        prev_size = n;
        cells += fmt(" %.2f:%zu/%s", tau, n, r.precision ? fmt("%.4f", *r.precision).c_str() : "NA");
    }
    const double s = seconds_since(t0);
    return {sizes_ok && precision_ok && s < 120.0,
            fmt("tau:size/precision%s; sizes %s, precision %s, %.1f s", cells.c_str(),
                sizes_ok ? "non-increasing" : "NOT non-increasing", precision_ok ? "non-decreasing" : "NOT non-decreasing",
                s)};
}

Outcome end_to_end(DeskRuns& desk) {
    const RunResult& clean = desk.get("clean-ce", [](RunConfig& c) {
        c.method = "ce";
        c.noise.eta = 0.0;
    });
    const RunResult& base = desk.get("ce", [](RunConfig& c) { c.method = "ce"; });
    const RunResult& full = desk.full();
    auto mean_clean = [&](int from, int to) {
        double s = 0;
        for (int e = from; e <= to; ++e) s += *full.records[static_cast<std::size_t>(e - 1)].clean_size_mean();
        return s / (to - from + 1);
    };
    const double before = mean_clean(25, 29), after = mean_clean(31, 35);
    const double gap = final_acc(full) - final_acc(base);
    const double auc = full.final_auc.value_or(0.0);
    const double s = desk.seconds["clean-ce"] + desk.seconds["ce"] + desk.seconds["full"];
    const bool pre = final_acc(clean) >= 0.98;
    const bool ok = pre && gap >= 0.15 && auc >= 0.90 && after > before && s < 300.0;
    return {ok, fmt("clean-label MLP %.3f (needs >= 0.98); (a) pipeline %.3f vs CE %.3f, +%.1f points (needs 15); "
                    "(b) final AUC %.4f (needs 0.90); (c) clean size %.1f -> %.1f; %.1f s",
                    final_acc(clean), final_acc(full), final_acc(base), 100 * gap, auc, before, after, s)};
}

Outcome ablation(DeskRuns& desk) {
    const RunResult& full = desk.full();
    const RunResult& no_reco = desk.get("no-reco", [](RunConfig& c) { c.reco.enabled = false; });
    const RunResult& no_strong = desk.get("no-strong", [](RunConfig& c) { c.aug.strong_enabled = false; });
    const double s = desk.seconds["full"] + desk.seconds["no-reco"] + desk.seconds["no-strong"];
    const bool reco_helps = final_acc(full) > final_acc(no_reco);
    const bool strong_ok = final_acc(full) >= final_acc(no_strong) - 0.01;
    return {reco_helps && strong_ok && s < 600.0,
            fmt("full %.3f, ReCo off %.3f (%s), strong off %.3f (%s); %.1f s", final_acc(full), final_acc(no_reco),
                reco_helps ? "ReCo improves" : "ReCo does NOT improve", final_acc(no_strong),
                strong_ok ? "within 1 point" : "strong costs > 1 point", s)};
}

Outcome determinism() {
    lcbtest::TempDir dir;
    RunConfig cfg = desk_config();
    cfg.out_dir = dir.path().string();
    run_experiment(cfg, dir.path());
    const std::string metrics = lcbtest::read_file(dir.file(kMetricsFile));
    const std::string manifest = lcbtest::read_file(dir.file(kManifestFile));
    run_experiment(cfg, dir.path());
    const bool same_metrics = lcbtest::read_file(dir.file(kMetricsFile)) == metrics;
    const bool same_manifest = lcbtest::read_file(dir.file(kManifestFile)) == manifest;
    return {same_metrics && same_manifest && !metrics.empty(),
            fmt("metrics.csv %s (%zu bytes), manifest.json %s (%zu bytes)", same_metrics ? "identical" : "DIFFERS",
                metrics.size(), same_manifest ? "identical" : "DIFFERS", manifest.size())};
}

Outcome auc_oracle() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> size(2, 500), level(0, 20);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int equal = 0;
    for (int k = 0; k < 100; ++k) {
        const auto n = static_cast<std::size_t>(size(rng));
        std::vector<double> s(n);
        std::vector<bool> clean(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = k % 3 == 0 ? unit(rng) : level(rng) / 20.0;
            clean[i] = unit(rng) < 0.4;
        }
        clean[0] = true;
        clean[1] = false;
        equal += *selection_auc(s, clean) == lcbtest::pairwise_auc(s, clean) ? 1 : 0;
    }
    return {equal == 100, fmt("%d of 100 instances exactly equal", equal)};
}

}  // namespace

int main() {
    DeskRuns desk{desk_config(), {}, {}};
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 gradient correctness", gradients},
        {"2 GMM recovery", gmm_recovery},
        {"3 threshold theorem enumeration", theorem},
        {"4 noise statistics", noise_statistics},
        {"5 correction threshold monotonicity", reco_monotonicity},
        {"6 end-to-end desk experiment", [&] { return end_to_end(desk); }},
        {"7 ablation direction", [&] { return ablation(desk); }},
        {"8 determinism", determinism},
        {"9 AUC oracle equivalence", auc_oracle},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
