#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lcb/error.hpp"
#include "lcb/matrix.hpp"
#include "lcb/rng.hpp"

namespace lcb {

/// Feature-space stand-ins for image augmentation: weak = Gaussian jitter,
/// strong = larger jitter followed by random coordinate masking.
struct AugSpec {
    double weak_sigma = 0.0;
    double strong_sigma = 0.0;
    double mask_prob = 0.0;
    bool strong_enabled = true;
    /// Per-coordinate multiplier on both sigmas (e.g. per-feature std). Empty = 1.
    std::vector<double> feature_scale;

    void validate() const {
        if (!(weak_sigma >= 0.0)) throw ArgumentError("AugSpec: weak_sigma must be >= 0");
        if (!(strong_sigma >= weak_sigma)) throw ArgumentError("AugSpec: strong_sigma must be >= weak_sigma");
        if (!(mask_prob >= 0.0 && mask_prob < 1.0)) throw ArgumentError("AugSpec: mask_prob must lie in [0, 1)");
    }
};

enum class ViewKind { Raw, Weak1, Weak2, Strong };

/// A matrix of views tagged with how it was produced, so consumers can
/// insist on the view they are allowed to see.
struct ViewMatrix {
    ViewKind kind = ViewKind::Raw;
    Matrix x;
};

inline void require_view(const ViewMatrix& v, ViewKind kind, const char* who) {
    if (v.kind != kind) throw ArgumentError(std::string(who) + ": wrong augmentation view");
}

inline std::vector<double> raw(std::span<const double> x) { return {x.begin(), x.end()}; }

namespace detail {
inline double scale_at(const AugSpec& spec, std::size_t j) {
    return spec.feature_scale.empty() ? 1.0 : spec.feature_scale[j];
}
}  // namespace detail

inline std::vector<double> weak(std::span<const double> x, const AugSpec& spec, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(x.begin(), x.end());
    if (spec.weak_sigma == 0.0) return out;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += spec.weak_sigma * detail::scale_at(spec, j) * normal(rng);
    return out;
}

/// With strong_enabled = false the strong slot degrades to a weak view.
inline std::vector<double> strong(std::span<const double> x, const AugSpec& spec, Rng& rng) {
    spec.validate();
    if (!spec.strong_enabled) return weak(x, spec, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (spec.strong_sigma != 0.0) out[j] += spec.strong_sigma * detail::scale_at(spec, j) * normal(rng);
        if (spec.mask_prob != 0.0 && unit(rng) < spec.mask_prob) out[j] = 0.0;
    }
    return out;
}

struct PairedViews {
    std::vector<double> weak1;  // pseudo-labeling
    std::vector<double> weak2;  // optimization, shares weak1's pseudo-label
    std::vector<double> strong;
};

/// Three views with independent streams keyed by (run seed, sample id, epoch).
inline PairedViews paired_views(std::span<const double> x, const AugSpec& spec, std::uint64_t seed,
                                std::uint64_t sample_id, std::uint64_t epoch) {
    const std::uint64_t base = derive_seed(seed, "aug/views", {sample_id, epoch});
    Rng r1 = make_rng(base, "weak1");
    Rng r2 = make_rng(base, "weak2");
    Rng r3 = make_rng(base, "strong");
    return {weak(x, spec, r1), weak(x, spec, r2), strong(x, spec, r3)};
}

struct EpochViews {
    ViewMatrix weak1;
    ViewMatrix weak2;
    ViewMatrix strong;
};

inline EpochViews make_epoch_views(const Matrix& x, const AugSpec& spec, std::uint64_t seed, std::uint64_t epoch) {
    spec.validate();
    EpochViews v{{ViewKind::Weak1, Matrix(x.rows(), x.cols())},
                 {ViewKind::Weak2, Matrix(x.rows(), x.cols())},
                 {ViewKind::Strong, Matrix(x.rows(), x.cols())}};
    for (std::size_t i = 0; i < x.rows(); ++i) {
        PairedViews p = paired_views(x.row(i), spec, seed, i, epoch);
        std::copy(p.weak1.begin(), p.weak1.end(), v.weak1.x.row(i).begin());
        std::copy(p.weak2.begin(), p.weak2.end(), v.weak2.x.row(i).begin());
        std::copy(p.strong.begin(), p.strong.end(), v.strong.x.row(i).begin());
    }
    return v;
}

inline ViewMatrix raw_view(const Matrix& x) { return {ViewKind::Raw, x}; }

/// Per-coordinate population standard deviation.
inline std::vector<double> feature_std(const Matrix& x) {
    std::vector<double> mean(x.cols(), 0.0), sd(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= static_cast<double>(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) sd[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
    for (double& s : sd) s = std::sqrt(s / static_cast<double>(x.rows()));
    return sd;
}

}  // namespace lcb
