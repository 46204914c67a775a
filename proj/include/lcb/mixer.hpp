#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "lcb/divide.hpp"
#include "lcb/error.hpp"
#include "lcb/matrix.hpp"
#include "lcb/rng.hpp"

namespace lcb {

/// lambda * a + (1 - lambda) * b.
inline std::vector<double> interpolate(std::span<const double> a, std::span<const double> b, double lambda) {
    if (a.size() != b.size()) throw ArgumentError("interpolate: dimension mismatch");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("interpolate: lambda must lie in [0, 1]");
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = lambda * a[k] + (1.0 - lambda) * b[k];
    return out;
}

/// Beta(alpha, alpha) through the ratio of two Gamma(alpha, 1) draws.
inline double sample_beta(double alpha, Rng& rng) {
    if (!(alpha > 0.0)) throw ArgumentError("sample_beta: alpha must be positive");
    std::gamma_distribution<double> gamma(alpha, 1.0);
    while (true) {
        const double x = gamma(rng);
        const double y = gamma(rng);
        const double s = x + y;
        if (s <= 0.0) continue;
        const double b = x / s;
        if (b > 0.0 && b < 1.0) return b;
    }
}

inline double sample_beta(double alpha, std::uint64_t seed) {
    Rng rng = make_rng(seed, "mix/beta");
    return sample_beta(alpha, rng);
}

enum class Origin { FromClean, FromNoisy };

struct MixedBatch {
    Matrix inputs;
    Matrix targets;
    std::vector<Origin> origin;
    std::vector<double> lambdas;
    std::vector<std::size_t> first_ids;
    std::vector<std::size_t> partner_ids;

    [[nodiscard]] std::size_t size() const noexcept { return origin.size(); }
};

struct MixOptions {
    double alpha = 4.0;
    bool fold_lambda = true;
    /// Forces every lambda (testing and limit cases).
    std::optional<double> fixed_lambda;
};

struct MixedSets {
    MixedBatch clean;
    MixedBatch noisy;
};

/// Mixes each clean item (with its label) and each noisy item (with its
/// pseudo-label) against a partner drawn uniformly with replacement from
/// clean + noisy. Sizes are preserved: |clean'| = |clean|, |noisy'| = |noisy|.
inline MixedSets build_mixed_sets(const Division& division, const Matrix& features, const MixOptions& opt,
                                  std::uint64_t seed) {
    if (division.clean_ids.empty() && division.noisy_ids.empty())
        throw ArgumentError("build_mixed_sets: clean and noisy sets are both empty");
    if (!division.pseudo_filled()) throw ArgumentError("build_mixed_sets: pseudo-labels not filled");
    if (opt.fixed_lambda && !(*opt.fixed_lambda >= 0.0 && *opt.fixed_lambda <= 1.0))
        throw ArgumentError("build_mixed_sets: fixed lambda outside [0, 1]");

    // Pool of (id, target) in clean-then-noisy order.
    std::vector<std::size_t> pool_ids;
    std::vector<const Distribution*> pool_targets;
    for (std::size_t k = 0; k < division.clean_ids.size(); ++k) {
        pool_ids.push_back(division.clean_ids[k]);
        pool_targets.push_back(&division.clean_labels[k]);
    }
    for (std::size_t k = 0; k < division.noisy_ids.size(); ++k) {
        pool_ids.push_back(division.noisy_ids[k]);
        pool_targets.push_back(&division.noisy_pseudo[k]);
    }
    const std::size_t classes = pool_targets.front()->size();

    Rng rng = make_rng(seed, "mix/build");
    std::uniform_int_distribution<std::size_t> pick(0, pool_ids.size() - 1);

    auto mix_into = [&](MixedBatch& out, Origin origin, std::span<const std::size_t> ids,
                        const std::vector<Distribution>& targets) {
        out.inputs = Matrix(0, features.cols());
        out.targets = Matrix(0, classes);
        out.inputs.reserve_rows(ids.size());
        out.targets.reserve_rows(ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k) {
            double lambda = opt.fixed_lambda ? *opt.fixed_lambda : sample_beta(opt.alpha, rng);
            if (opt.fold_lambda && !opt.fixed_lambda) lambda = std::max(lambda, 1.0 - lambda);
            const std::size_t j = pick(rng);
            out.inputs.append_row(interpolate(features.row(ids[k]), features.row(pool_ids[j]), lambda));
            out.targets.append_row(interpolate(targets[k], *pool_targets[j], lambda));
            out.origin.push_back(origin);
            out.lambdas.push_back(lambda);
            out.first_ids.push_back(ids[k]);
            out.partner_ids.push_back(pool_ids[j]);
        }
    };
    MixedSets sets;
    mix_into(sets.clean, Origin::FromClean, division.clean_ids, division.clean_labels);
    mix_into(sets.noisy, Origin::FromNoisy, division.noisy_ids, division.noisy_pseudo);
    return sets;
}

}  // namespace lcb
