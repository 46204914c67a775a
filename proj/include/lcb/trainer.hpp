#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcb/config.hpp"
#include "lcb/data.hpp"
#include "lcb/divide.hpp"
#include "lcb/haug.hpp"
#include "lcb/loss_model.hpp"
#include "lcb/metrics.hpp"
#include "lcb/mixer.hpp"
#include "lcb/net.hpp"
#include "lcb/noise.hpp"
#include "lcb/reco.hpp"
#include "lcb/rng.hpp"

namespace lcb {

enum class LabelChannel { Observed, Corrected };

/// Holds the observed and (after correction) corrected label channels and
/// counts reads of each, so tests can assert which channel training used.
class LabelChannels {
public:
    explicit LabelChannels(std::vector<int> observed) : observed_(std::move(observed)) {}

    /// The channel training must use right now.
    std::span<const int> active() {
        if (active_ == LabelChannel::Observed) {
            ++reads_[0];
            return observed_;
        }
        ++reads_[1];
        return corrected_;
    }

    void apply_correction(std::vector<int> corrected) {
        if (corrected.size() != observed_.size()) throw ArgumentError("LabelChannels: size mismatch");
        corrected_ = std::move(corrected);
        active_ = LabelChannel::Corrected;
    }

    [[nodiscard]] LabelChannel active_channel() const noexcept { return active_; }
    [[nodiscard]] std::size_t reads(LabelChannel c) const noexcept {
        return reads_[c == LabelChannel::Observed ? 0 : 1];
    }
    void reset_counters() noexcept { reads_ = {0, 0}; }

    /// Untracked access for post-hoc analysis only.
    [[nodiscard]] const std::vector<int>& observed_for_analysis() const noexcept { return observed_; }
    [[nodiscard]] const std::vector<int>& corrected_for_analysis() const noexcept { return corrected_; }

private:
    std::vector<int> observed_;
    std::vector<int> corrected_;
    LabelChannel active_ = LabelChannel::Observed;
    std::array<std::size_t, 2> reads_{0, 0};
};

struct RunData {
    LabeledDataset train;  // observed channel carries injected noise
    LabeledDataset test;
};

inline NoiseSpec noise_spec_from(const RunConfig& cfg, int num_classes) {
    NoiseSpec spec;
    spec.family = cfg.noise.family == "asymmetric" ? NoiseFamily::Asymmetric : NoiseFamily::Symmetric;
    spec.eta = cfg.noise.eta;
    spec.num_classes = num_classes;
    if (spec.family == NoiseFamily::Asymmetric) spec.mapping = mapping_from_pairs(cfg.noise.mapping, num_classes);
    return spec;
}

/// Builds (or loads) the train/test split and injects label noise into train.
inline RunData make_run_data(const RunConfig& cfg) {
    if (cfg.data.source == "blobs") {
        const auto& d = cfg.data;
        LabeledDataset train = make_blobs(d.num_classes, d.per_class, d.dim, d.separation, d.noise_sigma, cfg.seed, 0);
        LabeledDataset test =
            make_blobs(d.num_classes, d.test_per_class, d.dim, d.separation, d.noise_sigma, cfg.seed, 1);
        train = inject(train, noise_spec_from(cfg, d.num_classes), derive_seed(cfg.seed, "noise"));
        return {std::move(train), std::move(test)};
    }
    if (cfg.data.test_path.empty()) throw ConfigError({"data.test_path is required when data.source = csv"});
    LabeledDataset train = load_csv(cfg.data.path, cfg.data.num_classes);
    LabeledDataset test = load_csv(cfg.data.test_path, train.num_classes());
    if (test.dim() != train.dim()) throw ConfigError({"train and test CSV files differ in feature count"});
    train = inject(train, noise_spec_from(cfg, train.num_classes()), derive_seed(cfg.seed, "noise"));
    return {std::move(train), std::move(test)};
}

inline std::vector<int> net_widths(const RunConfig& cfg, int dim, int num_classes) {
    std::vector<int> w{dim};
    w.insert(w.end(), cfg.hidden.begin(), cfg.hidden.end());
    w.push_back(num_classes);
    return w;
}

inline AugSpec aug_spec_from(const RunConfig& cfg, const Matrix& train_features) {
    AugSpec a;
    a.weak_sigma = cfg.aug.weak_sigma;
    a.strong_sigma = cfg.aug.strong_sigma;
    a.mask_prob = cfg.aug.mask_prob;
    a.strong_enabled = cfg.aug.strong_enabled;
    a.feature_scale = feature_std(train_features);
    a.validate();
    return a;
}

/// Two-net accuracy on raw test inputs.
inline double evaluate(const Mlp& a, const Mlp& b, const LabeledDataset& test) {
    return accuracy(a, b, test, LabelChannelKind::True);
}

struct LossTotals {
    double ce = 0.0, mse = 0.0, reg = 0.0;
    std::size_t steps = 0;
};

/// Shuffled minibatch SGD over prepared items.
inline LossTotals train_items(Mlp& net, SgdState& opt, const Matrix& inputs, const Matrix& targets,
                              const std::vector<ItemRole>& roles, const LossSpec& spec, int batch_size, Rng& rng) {
    LossTotals t;
    const std::size_t n = inputs.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto bs = static_cast<std::size_t>(batch_size);
    for (std::size_t start = 0; start < n; start += bs) {
        const std::size_t end = std::min(n, start + bs);
        Batch b{Matrix(0, inputs.cols()), Matrix(0, targets.cols()), {}};
        b.inputs.reserve_rows(end - start);
        b.targets.reserve_rows(end - start);
        for (std::size_t k = start; k < end; ++k) {
            b.inputs.append_row(inputs.row(order[k]));
            b.targets.append_row(targets.row(order[k]));
            b.roles.push_back(roles[order[k]]);
        }
        auto [loss, grads] = backward(net, b, spec);
        sgd_step(net, grads, opt);
        t.ce += loss.ce;
        t.mse += loss.mse;
        t.reg += loss.reg;
        ++t.steps;
    }
    return t;
}

struct RunResult {
    std::vector<EpochRecord> records;
    double best_test_acc = 0.0;
    double last10_test_acc = 0.0;
    std::optional<double> final_auc;
    std::vector<RecoEvent> reco_events;
    std::array<Mlp, 2> nets;
    std::vector<int> final_labels;  // active channel at the end of training
    std::vector<std::string> warnings;
};

class Trainer;

struct TrainerHooks {
    std::function<void(const EpochRecord&, const Trainer&)> on_epoch;
    /// Called each selection epoch with both divisions and the losses they came from.
    std::function<void(int epoch, const std::array<Division, 2>&, const std::array<LossVector, 2>&,
                       const Trainer&)>
        on_division;
    std::function<void(std::string_view)> on_warning;
};

/// Orchestrates warm-up, co-teaching selection epochs and label correction.
/// Net k always trains on the division produced from the other net's losses.
class Trainer {
public:
    Trainer(RunConfig cfg, RunData data, TrainerHooks hooks = {})
        : cfg_(std::move(cfg)),
          train_(std::move(data.train)),
          test_(std::move(data.test)),
          labels_(std::vector<int>(train_.observed_labels().begin(), train_.observed_labels().end())),
          aug_(aug_spec_from(cfg_, train_.features())),
          raw_(raw_view(train_.features())),
          hooks_(std::move(hooks)) {
        if (auto problems = config_problems(cfg_); !problems.empty()) throw ConfigError(problems);
        const auto widths = net_widths(cfg_, static_cast<int>(train_.dim()), train_.num_classes());
        for (int k = 0; k < 2; ++k) {
            nets_[k] = Mlp::glorot(widths, derive_seed(cfg_.seed, "net", {static_cast<std::uint64_t>(k)}));
            opts_[k].learning_rate = cfg_.schedule.learning_rate;
            opts_[k].momentum = cfg_.schedule.momentum;
            opts_[k].weight_decay = cfg_.schedule.weight_decay;
        }
        loss_spec_.lambda_u = cfg_.loss.lambda_u;
        loss_spec_.lambda_r = cfg_.loss.lambda_r;
        loss_spec_.prior = cfg_.loss.prior;
    }

    [[nodiscard]] const RunConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const std::array<Mlp, 2>& nets() const noexcept { return nets_; }
    [[nodiscard]] std::array<Mlp, 2>& nets() noexcept { return nets_; }
    [[nodiscard]] const LabeledDataset& train_set() const noexcept { return train_; }
    [[nodiscard]] const LabeledDataset& test_set() const noexcept { return test_; }
    [[nodiscard]] LabelChannels& channels() noexcept { return labels_; }
    [[nodiscard]] const LabelChannels& channels() const noexcept { return labels_; }
    [[nodiscard]] const std::vector<EpochRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const std::array<Division, 2>& last_divisions() const noexcept { return divisions_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    [[nodiscard]] int epochs_done() const noexcept { return epoch_; }
    [[nodiscard]] const AugSpec& aug() const noexcept { return aug_; }

    [[nodiscard]] bool is_selection_epoch(int e) const {
        return cfg_.method == "lcbooster" && e > cfg_.schedule.warmup_epochs;
    }
    [[nodiscard]] bool is_reco_epoch(int e) const {
        if (cfg_.method != "lcbooster" || !cfg_.reco.enabled) return false;
        if (e == cfg_.reco.epoch) return true;
        return std::find(cfg_.reco.extra_epochs.begin(), cfg_.reco.extra_epochs.end(), e) !=
               cfg_.reco.extra_epochs.end();
    }

    /// Runs the next epoch and returns its record.
    EpochRecord step() {
        const int e = ++epoch_;
        const double lr = learning_rate_for(e);
        for (auto& o : opts_) o.learning_rate = lr;

        EpochRecord rec;
        rec.epoch = e;
        if (is_reco_epoch(e)) rec.reco = relabel(e);

        LossTotals totals;
        if (is_selection_epoch(e)) {
            totals = selection_epoch(e, rec);
        } else {
            totals = warmup_epoch(e);
        }
        if (totals.steps > 0) {
            const double s = static_cast<double>(totals.steps);
            rec.loss_x = totals.ce / s;
            rec.loss_u = totals.mse / s;
            rec.loss_reg = totals.reg / s;
        }
        rec.test_acc = evaluate(nets_[0], nets_[1], test_);
        records_.push_back(rec);
        if (hooks_.on_epoch) hooks_.on_epoch(rec, *this);
        return rec;
    }

    RunResult run() {
        while (epoch_ < cfg_.schedule.total_epochs) step();
        return result();
    }

    [[nodiscard]] RunResult result() const {
        RunResult r;
        r.records = records_;
        r.nets = nets_;
        r.warnings = warnings_;
        r.final_labels = labels_.active_channel() == LabelChannel::Observed ? labels_.observed_for_analysis()
                                                                           : labels_.corrected_for_analysis();
        for (const auto& rec : records_) {
            r.best_test_acc = std::max(r.best_test_acc, rec.test_acc);
            if (rec.reco) r.reco_events.push_back(*rec.reco);
        }
        const std::size_t tail = std::min<std::size_t>(10, records_.size());
        for (std::size_t k = records_.size() - tail; k < records_.size(); ++k)
            r.last10_test_acc += records_[k].test_acc / static_cast<double>(tail);
        if (!records_.empty() && records_.back().auc_net1 && records_.back().auc_net2)
            r.final_auc = 0.5 * (*records_.back().auc_net1 + *records_.back().auc_net2);
        return r;
    }

    /// Plain CE on the active labels for both nets, independent shuffles.
    LossTotals warmup_epoch(int e) {
        EpochViews views = make_epoch_views(train_.features(), aug_, cfg_.seed, static_cast<std::uint64_t>(e));
        std::span<const int> labels = labels_.active();
        const auto classes = static_cast<std::size_t>(train_.num_classes());
        Matrix targets(labels.size(), classes, 0.0);
        for (std::size_t i = 0; i < labels.size(); ++i) targets(i, static_cast<std::size_t>(labels[i])) = 1.0;
        std::vector<ItemRole> roles(labels.size(), ItemRole::Supervised);
        LossSpec ce_only;  // no unsupervised or prior terms during warm-up
        LossTotals sum;
        for (std::size_t k = 0; k < 2; ++k) {
            Rng rng = make_rng(cfg_.seed, "shuffle/warmup", {k, static_cast<std::uint64_t>(e)});
            auto t = train_items(nets_[k], opts_[k], views.weak2.x, targets, roles, ce_only,
                                 cfg_.schedule.batch_size, rng);
            accumulate(sum, t);
        }
        return sum;
    }

private:
    double learning_rate_for(int e) const {
        const auto& s = cfg_.schedule;
        return s.lr_decay_epoch > 0 && e >= s.lr_decay_epoch ? s.learning_rate * s.lr_decay_factor : s.learning_rate;
    }

    static void accumulate(LossTotals& sum, const LossTotals& t) {
        sum.ce += t.ce;
        sum.mse += t.mse;
        sum.reg += t.reg;
        sum.steps += t.steps;
    }

    void warn(std::string msg) {
        if (hooks_.on_warning) hooks_.on_warning(msg);
        warnings_.push_back(std::move(msg));
    }

    RecoEvent relabel(int e) {
        Matrix preds = average_predictions(nets_[0], nets_[1], raw_.x);
        CorrectedDataset c = correct(labels_.active(), preds, cfg_.reco.tau_ps);
        RecoMetrics m = reco_metrics(c, train_);
        labels_.apply_correction(c.corrected_labels);
        return {e, cfg_.reco.tau_ps, m.relabeled, m.precision};
    }

    LossTotals selection_epoch(int e, EpochRecord& rec) {
        const auto ue = static_cast<std::uint64_t>(e);
        EpochViews views = make_epoch_views(train_.features(), aug_, cfg_.seed, ue);
        const GmmOptions gopt{cfg_.gmm_max_iter, cfg_.gmm_tol, 1e-6};

        // Divisions from start-of-epoch nets: division k feeds net k and
        // comes from net 1 - k.
        std::array<LossVector, 2> losses;
        for (int k = 0; k < 2; ++k) {
            const int src = 1 - k;
            losses[k] = per_sample_losses(nets_[src], raw_, labels_.active());
            GmmFit fit = fit_gmm(losses[k].normalized, gopt);
            std::vector<double> p = posterior_clean(losses[k].normalized, fit);
            divisions_[k] = split(p, cfg_.tau_c, labels_.active(), train_.num_classes(), src);
        }
        for (auto& d : divisions_) fill_pseudo_labels(d, nets_[0], nets_[1], views.weak1);
        if (hooks_.on_division) hooks_.on_division(e, divisions_, losses, *this);

        const std::vector<bool> truly_clean = eval::is_clean(train_, labels_.active());
        rec.clean_size_net1 = divisions_[0].clean_ids.size();
        rec.clean_size_net2 = divisions_[1].clean_ids.size();
        rec.auc_net1 = selection_auc(divisions_[0].p_clean, truly_clean);
        rec.auc_net2 = selection_auc(divisions_[1].p_clean, truly_clean);

        const MixOptions mopt{cfg_.mix.alpha, cfg_.mix.fold_lambda, std::nullopt};
        LossTotals sum;
        for (std::size_t k = 0; k < 2; ++k) {
            const Division& d = divisions_[k];
            if (d.source_net != static_cast<int>(1 - k)) throw std::logic_error("co-teaching wiring violated");
            if (d.clean_ids.empty())
                warn("epoch " + std::to_string(e) + ": empty clean set for net " + std::to_string(k + 1) +
                     "; training on unsupervised and regularization terms only");
            const auto classes = static_cast<std::size_t>(train_.num_classes());
            Matrix inputs(0, train_.dim()), targets(0, classes);
            std::vector<ItemRole> roles;
            inputs.reserve_rows(2 * train_.size());
            targets.reserve_rows(2 * train_.size());
            const std::array<const ViewMatrix*, 2> pools{&views.weak2, &views.strong};
            for (std::uint64_t v = 0; v < pools.size(); ++v) {
                MixedSets m = build_mixed_sets(d, pools[v]->x, mopt, derive_seed(cfg_.seed, "mix", {k, ue, v}));
                for (std::size_t i = 0; i < m.clean.size(); ++i) {
                    inputs.append_row(m.clean.inputs.row(i));
                    targets.append_row(m.clean.targets.row(i));
                    roles.push_back(ItemRole::Supervised);
                }
                for (std::size_t i = 0; i < m.noisy.size(); ++i) {
                    inputs.append_row(m.noisy.inputs.row(i));
                    targets.append_row(m.noisy.targets.row(i));
                    roles.push_back(ItemRole::Unsupervised);
                }
            }
            Rng rng = make_rng(cfg_.seed, "shuffle/select", {k, ue});
            auto t = train_items(nets_[k], opts_[k], inputs, targets, roles, loss_spec_, cfg_.schedule.batch_size,
                                 rng);
            accumulate(sum, t);
        }
        return sum;
    }

    RunConfig cfg_;
    LabeledDataset train_;
    LabeledDataset test_;
    LabelChannels labels_;
    AugSpec aug_;
    ViewMatrix raw_;
    TrainerHooks hooks_;
    std::array<Mlp, 2> nets_;
    std::array<SgdState, 2> opts_;
    LossSpec loss_spec_;
    std::array<Division, 2> divisions_;
    std::vector<EpochRecord> records_;
    std::vector<std::string> warnings_;
    int epoch_ = 0;
};

/// `epochs` rounds of plain CE warm-up on the trainer's nets.
inline void warmup(Trainer& trainer, int epochs) {
    if (epochs < 0) throw ArgumentError("warmup: epochs must be >= 0");
    for (int k = 0; k < epochs; ++k) trainer.warmup_epoch(k + 1);
}

inline RunResult run(const RunConfig& cfg, TrainerHooks hooks = {}) {
    Trainer t(cfg, make_run_data(cfg), std::move(hooks));
    return t.run();
}

}  // namespace lcb
