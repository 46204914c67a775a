#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcb/data.hpp"
#include "lcb/divide.hpp"
#include "lcb/error.hpp"
#include "lcb/format.hpp"
#include "lcb/haug.hpp"
#include "lcb/net.hpp"
#include "lcb/reco.hpp"

namespace lcb {

struct RecoEvent {
    int epoch = 0;
    double tau_ps = 0.0;
    std::size_t size = 0;
    std::optional<double> precision;

    friend bool operator==(const RecoEvent&, const RecoEvent&) = default;
};

struct EpochRecord {
    int epoch = 0;
    double loss_x = 0.0;
    double loss_u = 0.0;
    double loss_reg = 0.0;
    std::optional<std::size_t> clean_size_net1;
    std::optional<std::size_t> clean_size_net2;
    std::optional<double> auc_net1;
    std::optional<double> auc_net2;
    double test_acc = 0.0;
    std::optional<RecoEvent> reco;

    /// Mean of the two per-net clean-set sizes.
    [[nodiscard]] std::optional<double> clean_size_mean() const {
        if (!clean_size_net1 || !clean_size_net2) return std::nullopt;
        return 0.5 * (static_cast<double>(*clean_size_net1) + static_cast<double>(*clean_size_net2));
    }

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

inline constexpr const char* kMetricsHeader =
    "epoch,loss_x,loss_u,loss_reg,clean_size_net1,clean_size_net2,clean_size_mean,auc_net1,auc_net2,test_acc,"
    "reco_tau,reco_size,reco_precision";

inline std::string format_record(const EpochRecord& r) {
    auto opt_real = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    auto opt_size = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string(); };
    std::string s = std::to_string(r.epoch) + ',' + format_double(r.loss_x) + ',' + format_double(r.loss_u) + ',' +
                    format_double(r.loss_reg) + ',' + opt_size(r.clean_size_net1) + ',' +
                    opt_size(r.clean_size_net2) + ',' + opt_real(r.clean_size_mean()) + ',' + opt_real(r.auc_net1) +
                    ',' + opt_real(r.auc_net2) + ',' + format_double(r.test_acc) + ',';
    if (r.reco) {
        s += format_double(r.reco->tau_ps) + ',' + std::to_string(r.reco->size) + ',' +
             (r.reco->precision ? format_double(*r.reco->precision) : std::string("NA"));
    } else {
        s += ",,";
    }
    return s;
}

/// Append-only metrics CSV: header once, one flushed row per record.
class MetricsSink {
public:
    explicit MetricsSink(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot open metrics file " + path);
        out_ << kMetricsHeader << '\n';
        out_.flush();
        if (!out_) throw std::runtime_error("write failed: " + path);
    }

    void emit(const EpochRecord& r) {
        if (r.epoch <= last_epoch_) throw ArgumentError("MetricsSink: records must arrive in epoch order");
        out_ << format_record(r) << '\n';
        out_.flush();
        if (!out_) throw std::runtime_error("write failed: " + path_);
        last_epoch_ = r.epoch;
    }

private:
    std::string path_;
    std::ofstream out_;
    int last_epoch_ = -1;
};

inline std::vector<EpochRecord> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    std::string line;
    if (!std::getline(in, line) || trim(line) != kMetricsHeader) throw ParseError("bad metrics header", 1);
    std::vector<EpochRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::string_view rest = line;
        while (true) {
            auto comma = rest.find(',');
            cells.emplace_back(trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cells.size() != 13) throw ParseError("expected 13 columns", lineno);
        auto real = [&](const std::string& c) {
            auto v = parse_double(c);
            if (!v) throw ParseError("bad number '" + c + "'", lineno);
            return *v;
        };
        auto opt_real = [&](const std::string& c) -> std::optional<double> {
            if (c.empty()) return std::nullopt;
            return real(c);
        };
        auto opt_size = [&](const std::string& c) -> std::optional<std::size_t> {
            if (c.empty()) return std::nullopt;
            auto v = parse_int(c);
            if (!v || *v < 0) throw ParseError("bad count '" + c + "'", lineno);
            return static_cast<std::size_t>(*v);
        };
        EpochRecord r;
        r.epoch = static_cast<int>(real(cells[0]));
        r.loss_x = real(cells[1]);
        r.loss_u = real(cells[2]);
        r.loss_reg = real(cells[3]);
        r.clean_size_net1 = opt_size(cells[4]);
        r.clean_size_net2 = opt_size(cells[5]);
        r.auc_net1 = opt_real(cells[7]);
        r.auc_net2 = opt_real(cells[8]);
        r.test_acc = real(cells[9]);
        if (!cells[10].empty()) {
            RecoEvent e;
            e.epoch = r.epoch;
            e.tau_ps = real(cells[10]);
            e.size = *opt_size(cells[11]);
            if (cells[12] != "NA") e.precision = real(cells[12]);
            r.reco = e;
        }
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------

/// Mean of the two nets' softmax outputs.
inline Matrix average_predictions(const Mlp& a, const Mlp& b, const Matrix& x) {
    Matrix pa = a.forward_batch(x);
    Matrix pb = b.forward_batch(x);
    for (std::size_t k = 0; k < pa.data().size(); ++k) pa.data()[k] = 0.5 * (pa.data()[k] + pb.data()[k]);
    return pa;
}

/// Fraction of rows whose argmax (lowest index on ties) equals labels[i].
inline double accuracy_of(const Matrix& predictions, std::span<const int> labels) {
    if (predictions.rows() != labels.size()) throw ArgumentError("accuracy: length mismatch");
    if (labels.empty()) throw ArgumentError("accuracy: empty dataset");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += argmax(predictions.row(i)) == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

enum class LabelChannelKind { True, Observed, Corrected };

/// Two-net accuracy on raw inputs against the chosen label channel.
/// `corrected` must be supplied for the Corrected channel.
inline double accuracy(const Mlp& a, const Mlp& b, const LabeledDataset& ds, LabelChannelKind channel,
                       std::span<const int> corrected = {}) {
    std::span<const int> labels;
    switch (channel) {
        case LabelChannelKind::True: labels = eval::true_labels(ds); break;
        case LabelChannelKind::Observed: labels = ds.observed_labels(); break;
        case LabelChannelKind::Corrected:
            if (corrected.size() != ds.size()) throw ArgumentError("accuracy: corrected channel missing");
            labels = corrected;
            break;
    }
    return accuracy_of(average_predictions(a, b, ds.features()), labels);
}

struct RelabelResult {
    CorrectedDataset corrected;
    LabeledDataset relabeled;
    /// Agreement with ground truth over the relabeled ids (NA when none).
    std::optional<double> precision;
};

/// Applies correction with the trained pair and packages an exportable
/// dataset whose observed channel holds the corrected labels.
inline RelabelResult relabel_export(const Mlp& a, const Mlp& b, const LabeledDataset& ds, double tau_ps,
                                    std::span<const int> current_labels = {}) {
    std::span<const int> labels = current_labels.empty() ? ds.observed_labels() : current_labels;
    CorrectedDataset c = correct(labels, average_predictions(a, b, ds.features()), tau_ps);
    RecoMetrics m = reco_metrics(c, ds);
    LabeledDataset relabeled = ds.with_observed(c.corrected_labels);
    return {std::move(c), std::move(relabeled), m.precision};
}

}  // namespace lcb
