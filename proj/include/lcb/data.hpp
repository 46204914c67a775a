#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lcb/error.hpp"
#include "lcb/format.hpp"
#include "lcb/matrix.hpp"
#include "lcb/rng.hpp"

namespace lcb {

using Distribution = std::vector<double>;

struct Sample {
    std::vector<double> features;
    int true_label = 0;
    int observed_label = 0;
};

inline Distribution one_hot(int c, int num_classes) {
    if (num_classes <= 0 || c < 0 || c >= num_classes)
        throw ArgumentError("one_hot: class " + std::to_string(c) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    Distribution v(static_cast<std::size_t>(num_classes), 0.0);
    v[static_cast<std::size_t>(c)] = 1.0;
    return v;
}

/// Lowest index wins on ties.
inline int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline bool on_simplex(std::span<const double> v, double tol = 1e-9) {
    double s = 0.0;
    for (double x : v) {
        if (!(x >= -tol)) return false;
        s += x;
    }
    return std::abs(s - 1.0) <= tol;
}

class LabeledDataset;

namespace eval {
inline std::span<const int> true_labels(const LabeledDataset& ds);
}

/// Feature matrix plus two label channels. Ground truth is reachable only
/// through lcb::eval so training code cannot read it by accident. Sample i
/// keeps index i for the lifetime of the dataset.
class LabeledDataset {
public:
    LabeledDataset(Matrix features, std::vector<int> true_labels, std::vector<int> observed, int num_classes)
        : features_(std::move(features)),
          true_(std::move(true_labels)),
          observed_(std::move(observed)),
          num_classes_(num_classes) {
        validate();
    }

    static LabeledDataset from_samples(const std::vector<Sample>& samples, int num_classes) {
        if (samples.empty()) throw ArgumentError("LabeledDataset: no samples");
        Matrix x(0, samples.front().features.size());
        x.reserve_rows(samples.size());
        std::vector<int> t, o;
        for (const auto& s : samples) {
            x.append_row(s.features);
            t.push_back(s.true_label);
            o.push_back(s.observed_label);
        }
        return {std::move(x), std::move(t), std::move(o), num_classes};
    }

    [[nodiscard]] std::size_t size() const noexcept { return observed_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return features_.cols(); }
    [[nodiscard]] int num_classes() const noexcept { return num_classes_; }
    [[nodiscard]] const Matrix& features() const noexcept { return features_; }
    [[nodiscard]] std::span<const double> feature(std::size_t i) const noexcept { return features_.row(i); }
    [[nodiscard]] std::span<const int> observed_labels() const noexcept { return observed_; }
    [[nodiscard]] int observed(std::size_t i) const noexcept { return observed_[i]; }

    /// Same features and ground truth, new observed channel.
    [[nodiscard]] LabeledDataset with_observed(std::vector<int> observed) const {
        return {features_, true_, std::move(observed), num_classes_};
    }

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

private:
    friend std::span<const int> eval::true_labels(const LabeledDataset& ds);

    void validate() const {
        const std::size_t n = observed_.size();
        if (n == 0) throw ArgumentError("LabeledDataset: N must be >= 1");
        if (num_classes_ <= 0) throw ArgumentError("LabeledDataset: num_classes must be positive");
        if (features_.rows() != n || true_.size() != n)
            throw ArgumentError("LabeledDataset: channel lengths disagree");
        for (std::size_t i = 0; i < n; ++i) {
            if (true_[i] < 0 || true_[i] >= num_classes_ || observed_[i] < 0 || observed_[i] >= num_classes_)
                throw ArgumentError("LabeledDataset: label out of range at index " + std::to_string(i));
        }
        for (double v : features_.data())
            if (!std::isfinite(v)) throw ArgumentError("LabeledDataset: non-finite feature");
    }

    Matrix features_;
    std::vector<int> true_;
    std::vector<int> observed_;
    int num_classes_;
};

namespace eval {
/// Evaluation-only access to ground truth.
inline std::span<const int> true_labels(const LabeledDataset& ds) { return ds.true_; }
inline int true_label(const LabeledDataset& ds, std::size_t i) { return true_labels(ds)[i]; }

/// Per-id flag: does `labels[i]` agree with ground truth.
inline std::vector<bool> is_clean(const LabeledDataset& ds, std::span<const int> labels) {
    auto t = true_labels(ds);
    std::vector<bool> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out[i] = labels[i] == t[i];
    return out;
}
}  // namespace eval

/// Reads `f0,...,f{d-1},label`. Observed and true labels both take the
/// parsed value. `num_classes` = 0 infers C as 1 + max label.
inline LabeledDataset load_csv(const std::string& path, int num_classes = 0) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw ParseError("empty file: " + path, 0);

    std::vector<std::string> header;
    {
        std::stringstream ss{std::string(trim(line))};
        std::string cell;
        while (std::getline(ss, cell, ',')) header.emplace_back(trim(cell));
    }
    if (header.size() < 2 || header.back() != "label")
        throw ParseError("header must be f0,...,f{d-1},label", 1);
    const std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j)
        if (header[j] != "f" + std::to_string(j)) throw ParseError("unexpected header column '" + header[j] + "'", 1);

    Matrix x(0, d);
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view row = trim(line);
        if (row.empty()) continue;
        std::vector<double> values;
        values.reserve(d);
        std::size_t col = 0;
        long long label = -1;
        while (true) {
            auto comma = row.find(',');
            std::string_view cell = row.substr(0, comma);
            if (col < d) {
                auto v = parse_double(cell);
                if (!v || !std::isfinite(*v)) throw ParseError("non-numeric feature '" + std::string(cell) + "'", lineno);
                values.push_back(*v);
            } else if (col == d) {
                auto v = parse_int(cell);
                if (!v || *v < 0) throw ParseError("invalid label '" + std::string(cell) + "'", lineno);
                label = *v;
            } else {
                throw ParseError("too many columns", lineno);
            }
            ++col;
            if (comma == std::string_view::npos) break;
            row.remove_prefix(comma + 1);
        }
        if (col != d + 1) throw ParseError("expected " + std::to_string(d + 1) + " columns", lineno);
        if (num_classes > 0 && label >= num_classes)
            throw ParseError("label " + std::to_string(label) + " exceeds configured class count", lineno);
        x.append_row(values);
        labels.push_back(static_cast<int>(label));
    }
    if (labels.empty()) throw ParseError("no data rows: " + path, 0);
    int c = num_classes > 0 ? num_classes : 1 + *std::max_element(labels.begin(), labels.end());
    return {std::move(x), labels, labels, c};
}

/// Writes features with the given label channel in the load_csv format.
inline void save_csv(const std::string& path, const Matrix& features, std::span<const int> labels) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path, 0);
    for (std::size_t j = 0; j < features.cols(); ++j) out << 'f' << j << ',';
    out << "label\n";
    for (std::size_t i = 0; i < features.rows(); ++i) {
        for (double v : features.row(i)) out << format_double(v) << ',';
        out << labels[i] << '\n';
    }
    if (!out) throw ParseError("write failed: " + path, 0);
}

/// Class centers for make_blobs: orthonormal random directions scaled so
/// every pair of centers sits exactly `separation` apart (when C <= dim).
inline Matrix blob_centers(int num_classes, int dim, double separation, std::uint64_t seed) {
    Rng rng = make_rng(seed, "blobs/centers");
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix centers(static_cast<std::size_t>(num_classes), static_cast<std::size_t>(dim));
    for (int c = 0; c < num_classes; ++c) {
        auto row = centers.row(static_cast<std::size_t>(c));
        for (double& v : row) v = normal(rng);
        if (c < dim) {
            for (int p = 0; p < c; ++p) {
                auto prev = centers.row(static_cast<std::size_t>(p));
                double dot = 0.0;
                for (int j = 0; j < dim; ++j) dot += row[j] * prev[j];
                for (int j = 0; j < dim; ++j) row[j] -= dot * prev[j];
            }
        }
        double norm = 0.0;
        for (double v : row) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : row) v /= norm;
    }
    const double radius = separation / std::sqrt(2.0);
    for (double& v : centers.data()) v *= radius;
    return centers;
}

/// Gaussian blobs around seed-derived centers. `stream` selects an
/// independent draw around the same centers (e.g. 0 = train, 1 = test).
inline LabeledDataset make_blobs(int num_classes, int per_class, int dim, double separation, double noise_sigma,
                                 std::uint64_t seed, std::uint64_t stream = 0) {
    if (num_classes <= 0 || per_class <= 0 || dim <= 0) throw ArgumentError("make_blobs: counts must be positive");
    if (!(separation > 0.0)) throw ArgumentError("make_blobs: separation must be positive");
    if (!(noise_sigma >= 0.0)) throw ArgumentError("make_blobs: noise_sigma must be non-negative");
    Matrix centers = blob_centers(num_classes, dim, separation, seed);
    Rng rng = make_rng(seed, "blobs/sample", {stream});
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(per_class);
    Matrix x(n, static_cast<std::size_t>(dim));
    std::vector<int> labels(n);
    std::size_t i = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (int k = 0; k < per_class; ++k, ++i) {
            labels[i] = c;
            auto row = x.row(i);
            auto center = centers.row(static_cast<std::size_t>(c));
            for (int j = 0; j < dim; ++j) row[j] = center[j] + noise_sigma * normal(rng);
        }
    }
    return {std::move(x), labels, labels, num_classes};
}

}  // namespace lcb
