#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "lcb/data.hpp"
#include "lcb/error.hpp"
#include "lcb/haug.hpp"
#include "lcb/net.hpp"

namespace lcb {

/// Per-sample CE losses, indexed by sample id, with min-max normalization.
struct LossVector {
    std::vector<double> raw;
    std::vector<double> normalized;
    double min = 0.0;
    double max = 0.0;
};

inline LossVector normalize_losses(std::vector<double> raw) {
    LossVector out;
    out.raw = std::move(raw);
    if (out.raw.empty()) return out;
    auto [lo, hi] = std::minmax_element(out.raw.begin(), out.raw.end());
    out.min = *lo;
    out.max = *hi;
    out.normalized.resize(out.raw.size());
    const double range = out.max - out.min;
    for (std::size_t i = 0; i < out.raw.size(); ++i)
        out.normalized[i] = range > 0.0 ? (out.raw[i] - out.min) / range : 0.5;
    return out;
}

/// Losses on raw inputs against `labels` (the active label channel).
inline LossVector per_sample_losses(const Mlp& net, const ViewMatrix& inputs, std::span<const int> labels) {
    require_view(inputs, ViewKind::Raw, "per_sample_losses");
    if (labels.size() != inputs.x.rows()) throw ArgumentError("per_sample_losses: label count mismatch");
    Matrix p = net.forward_batch(inputs.x);
    std::vector<double> raw(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        raw[i] = -std::log(std::max(p(i, static_cast<std::size_t>(labels[i])), kProbFloor));
    return normalize_losses(std::move(raw));
}

struct GmmOptions {
    int max_iter = 100;
    double tol = 1e-6;
    double variance_floor = 1e-6;
};

/// Two-component 1-D mixture; component 0 has the lower mean.
struct GmmFit {
    std::array<double, 2> weight{0.5, 0.5};
    std::array<double, 2> mean{0.0, 0.0};
    std::array<double, 2> variance{1.0, 1.0};
    bool converged = false;
    bool degenerate = false;
    int iterations = 0;
    /// Mean log-likelihood at the initial parameters and after each iteration.
    std::vector<double> log_likelihood;
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

inline double log_sum_exp(double a, double b) {
    const double m = std::max(a, b);
    if (m == -INFINITY) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Linear-interpolated percentile of sorted data, q in [0, 1].
inline double percentile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double mean_log_likelihood(std::span<const double> xs, const GmmFit& f) {
    double total = 0.0;
    for (double x : xs)
        total += log_sum_exp(std::log(f.weight[0]) + log_normal_pdf(x, f.mean[0], f.variance[0]),
                             std::log(f.weight[1]) + log_normal_pdf(x, f.mean[1], f.variance[1]));
    return total / static_cast<double>(xs.size());
}

}  // namespace detail

/// EM for a two-component 1-D Gaussian mixture. Initialized at the 10th/90th
/// percentiles with equal weights and the pooled sample variance, so the
/// result is a pure function of the input. Stops when the mean
/// log-likelihood improves by less than tol.
inline GmmFit fit_gmm(std::span<const double> xs, const GmmOptions& opt = {}) {
    if (xs.size() < 2) throw ArgumentError("fit_gmm: need at least two values");
    GmmFit fit;
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        fit.degenerate = true;
        fit.mean = {sorted.front(), sorted.front()};
        fit.variance = {opt.variance_floor, opt.variance_floor};
        return fit;
    }
    const double n = static_cast<double>(xs.size());
    double mu = 0.0;
    for (double x : xs) mu += x;
    mu /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mu) * (x - mu);
    var = std::max(var / n, opt.variance_floor);

    fit.mean = {detail::percentile(sorted, 0.1), detail::percentile(sorted, 0.9)};
    fit.variance = {var, var};
    fit.log_likelihood.push_back(detail::mean_log_likelihood(xs, fit));

    std::vector<double> resp(xs.size());
    for (int it = 0; it < opt.max_iter; ++it) {
        // E-step: responsibility of component 0.
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double l0 = std::log(fit.weight[0]) + detail::log_normal_pdf(xs[i], fit.mean[0], fit.variance[0]);
            const double l1 = std::log(fit.weight[1]) + detail::log_normal_pdf(xs[i], fit.mean[1], fit.variance[1]);
            resp[i] = std::exp(l0 - detail::log_sum_exp(l0, l1));
        }
        // M-step.
        std::array<double, 2> nk{0.0, 0.0}, sx{0.0, 0.0};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            nk[0] += resp[i];
            nk[1] += 1.0 - resp[i];
            sx[0] += resp[i] * xs[i];
            sx[1] += (1.0 - resp[i]) * xs[i];
        }
        GmmFit next = fit;
        for (int k = 0; k < 2; ++k) {
            if (nk[k] <= 0.0) continue;  // empty component keeps its parameters
            next.mean[k] = sx[k] / nk[k];
        }
        std::array<double, 2> sv{0.0, 0.0};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sv[0] += resp[i] * (xs[i] - next.mean[0]) * (xs[i] - next.mean[0]);
            sv[1] += (1.0 - resp[i]) * (xs[i] - next.mean[1]) * (xs[i] - next.mean[1]);
        }
        for (int k = 0; k < 2; ++k) {
            next.weight[k] = std::clamp(nk[k] / n, 1e-12, 1.0);
            if (nk[k] > 0.0) next.variance[k] = std::max(sv[k] / nk[k], opt.variance_floor);
        }
        const double wsum = next.weight[0] + next.weight[1];
        next.weight = {next.weight[0] / wsum, next.weight[1] / wsum};

        const double ll = detail::mean_log_likelihood(xs, next);
        const double gain = ll - fit.log_likelihood.back();
        next.log_likelihood.push_back(ll);
        next.iterations = it + 1;
        fit = std::move(next);
        if (gain < opt.tol) {
            fit.converged = true;
            break;
        }
    }
    if (fit.mean[0] > fit.mean[1]) {
        std::swap(fit.mean[0], fit.mean[1]);
        std::swap(fit.weight[0], fit.weight[1]);
        std::swap(fit.variance[0], fit.variance[1]);
    }
    return fit;
}

/// Posterior of the lower-mean component; 0.5 for degenerate fits.
inline double posterior_clean(double x, const GmmFit& fit) {
    if (fit.degenerate) return 0.5;
    const double l0 = std::log(fit.weight[0]) + detail::log_normal_pdf(x, fit.mean[0], fit.variance[0]);
    const double l1 = std::log(fit.weight[1]) + detail::log_normal_pdf(x, fit.mean[1], fit.variance[1]);
    return std::exp(l0 - detail::log_sum_exp(l0, l1));
}

inline std::vector<double> posterior_clean(std::span<const double> xs, const GmmFit& fit) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = posterior_clean(xs[i], fit);
    return out;
}

}  // namespace lcb
