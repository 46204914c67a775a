#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lcb/data.hpp"
#include "lcb/error.hpp"
#include "lcb/matrix.hpp"
#include "lcb/rng.hpp"

namespace lcb {

enum class NoiseFamily { Symmetric, Asymmetric };

struct NoiseSpec {
    NoiseFamily family = NoiseFamily::Symmetric;
    double eta = 0.0;
    /// Asymmetric only: mapping[c] is the class that c flips to.
    std::vector<int> mapping;
    int num_classes = 0;

    void validate() const {
        if (num_classes <= 0) throw ArgumentError("NoiseSpec: num_classes must be positive");
        if (!(eta >= 0.0 && eta <= 1.0)) throw ArgumentError("NoiseSpec: eta must lie in [0, 1]");
        if (family == NoiseFamily::Asymmetric) {
            if (mapping.size() != static_cast<std::size_t>(num_classes))
                throw ArgumentError("NoiseSpec: asymmetric mapping must cover every class");
            for (int m : mapping)
                if (m < 0 || m >= num_classes) throw ArgumentError("NoiseSpec: mapping target out of range");
        }
    }
};

/// Asymmetric mapping from `src:dst` pairs; classes not listed map to themselves.
inline std::vector<int> mapping_from_pairs(const std::vector<std::pair<int, int>>& pairs, int num_classes) {
    std::vector<int> m(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) m[static_cast<std::size_t>(c)] = c;
    for (auto [src, dst] : pairs) {
        if (src < 0 || src >= num_classes || dst < 0 || dst >= num_classes)
            throw ArgumentError("noise mapping pair " + std::to_string(src) + ":" + std::to_string(dst) +
                                " out of range");
        m[static_cast<std::size_t>(src)] = dst;
    }
    return m;
}

/// Closed-form P(observed = j | true = i).
inline Matrix expected_transition(const NoiseSpec& spec) {
    spec.validate();
    const auto c = static_cast<std::size_t>(spec.num_classes);
    Matrix t(c, c, 0.0);
    if (spec.family == NoiseFamily::Symmetric) {
        const double off = spec.eta / static_cast<double>(c);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < c; ++j) t(i, j) = i == j ? 1.0 - spec.eta + off : off;
    } else {
        for (std::size_t i = 0; i < c; ++i) {
            const auto m = static_cast<std::size_t>(spec.mapping[i]);
            if (m == i) {
                t(i, i) = 1.0;
            } else {
                t(i, i) = 1.0 - spec.eta;
                t(i, m) = spec.eta;
            }
        }
    }
    return t;
}

/// Resamples observed labels from true labels. Symmetric noise redraws
/// uniformly over all C classes with probability eta, so self-flips occur.
inline LabeledDataset inject(const LabeledDataset& ds, const NoiseSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (spec.num_classes != ds.num_classes())
        throw ArgumentError("inject: dataset has " + std::to_string(ds.num_classes()) + " classes, spec has " +
                            std::to_string(spec.num_classes));
    Rng rng = make_rng(seed, "noise/inject");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> any_class(0, spec.num_classes - 1);
    auto truth = eval::true_labels(ds);
    std::vector<int> observed(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int y = truth[i];
        const bool flip = unit(rng) < spec.eta;
        if (spec.family == NoiseFamily::Symmetric) {
            const int draw = any_class(rng);
            observed[i] = flip ? draw : y;
        } else {
            observed[i] = flip ? spec.mapping[static_cast<std::size_t>(y)] : y;
        }
    }
    return ds.with_observed(std::move(observed));
}

struct NoiseReport {
    /// Row i is the empirical P(observed | true = i); nullopt when class i has no samples.
    std::vector<std::optional<std::vector<double>>> transition;
    /// Empirical P(observed = c | true != c); nullopt when no sample has true != c.
    std::vector<std::optional<double>> rho_per_class;
    /// Mean of the defined rho_per_class entries.
    std::optional<double> rho_overall;
    std::vector<std::size_t> class_counts;
};

inline NoiseReport measure(const LabeledDataset& ds) {
    const auto c = static_cast<std::size_t>(ds.num_classes());
    auto truth = eval::true_labels(ds);
    auto obs = ds.observed_labels();
    std::vector<std::vector<std::size_t>> counts(c, std::vector<std::size_t>(c, 0));
    std::vector<std::size_t> per_true(c, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ++counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(obs[i])];
        ++per_true[static_cast<std::size_t>(truth[i])];
    }
    NoiseReport r;
    r.class_counts = per_true;
    r.transition.resize(c);
    for (std::size_t i = 0; i < c; ++i) {
        if (per_true[i] == 0) continue;
        std::vector<double> row(c);
        for (std::size_t j = 0; j < c; ++j)
            row[j] = static_cast<double>(counts[i][j]) / static_cast<double>(per_true[i]);
        r.transition[i] = std::move(row);
    }
    r.rho_per_class.resize(c);
    double rho_sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t k = 0; k < c; ++k) {
        std::size_t others = 0, into_k = 0;
        for (std::size_t i = 0; i < c; ++i) {
            if (i == k) continue;
            others += per_true[i];
            into_k += counts[i][k];
        }
        if (others == 0) continue;
        const double rho = static_cast<double>(into_k) / static_cast<double>(others);
        r.rho_per_class[k] = rho;
        rho_sum += rho;
        ++defined;
    }
    if (defined > 0) r.rho_overall = rho_sum / static_cast<double>(defined);
    return r;
}

}  // namespace lcb
