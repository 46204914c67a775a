#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "lcb/data.hpp"
#include "lcb/error.hpp"
#include "lcb/matrix.hpp"
#include "lcb/rng.hpp"

namespace lcb {

// ---------------------------------------------------------------------------
// Label correction

/// Result of thresholded relabeling over the whole training set.
struct CorrectedDataset {
    std::vector<std::size_t> kept_ids;       // confidence < tau_ps
    std::vector<std::size_t> relabeled_ids;  // confidence >= tau_ps
    std::vector<int> corrected_labels;       // per id
    std::vector<double> confidence;          // per id, max_c p_i^c
    double tau_ps = 0.0;
};

/// Hard-relabels every id whose top predicted probability reaches tau_ps
/// to that argmax class (lowest index on ties); other ids keep `labels`.
inline CorrectedDataset correct(std::span<const int> labels, const Matrix& predictions, double tau_ps) {
    if (predictions.rows() != labels.size()) throw ArgumentError("correct: one prediction per id required");
    if (!(tau_ps >= 0.0 && tau_ps <= 1.0)) throw ArgumentError("correct: tau_ps must lie in [0, 1]");
    CorrectedDataset out;
    out.tau_ps = tau_ps;
    out.corrected_labels.assign(labels.begin(), labels.end());
    out.confidence.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto p = predictions.row(i);
        const int k = argmax(p);
        out.confidence[i] = p[static_cast<std::size_t>(k)];
        if (out.confidence[i] >= tau_ps) {
            out.relabeled_ids.push_back(i);
            out.corrected_labels[i] = k;
        } else {
            out.kept_ids.push_back(i);
        }
    }
    return out;
}

/// Threshold at which a noisy-posterior above it certifies the true class:
/// (1 + rho_c) / 2.
inline double theorem1_bound(double rho_c) {
    if (!(rho_c >= 0.0 && rho_c <= 1.0)) throw ArgumentError("theorem1_bound: rho_c must lie in [0, 1]");
    return (1.0 + rho_c) / 2.0;
}

struct RecoMetrics {
    std::size_t relabeled = 0;
    std::optional<double> precision;  // nullopt when nothing was relabeled
};

inline RecoMetrics reco_metrics(const CorrectedDataset& corrected, const LabeledDataset& ds) {
    auto truth = eval::true_labels(ds);
    RecoMetrics m;
    m.relabeled = corrected.relabeled_ids.size();
    if (m.relabeled == 0) return m;
    std::size_t hits = 0;
    for (std::size_t id : corrected.relabeled_ids) hits += corrected.corrected_labels[id] == truth[id] ? 1 : 0;
    m.precision = static_cast<double>(hits) / static_cast<double>(m.relabeled);
    return m;
}

// ---------------------------------------------------------------------------
// Exact discrete worlds for checking the threshold guarantee.

using Rational = boost::rational<long long>;

struct DiscreteNoisyWorld {
    int num_classes = 0;
    std::vector<Rational> input_weight;               // marginal over inputs
    std::vector<std::vector<Rational>> alpha;         // [x][c] = P(Y = c | x)
    std::vector<std::vector<Rational>> transition;    // [true][observed]
    std::vector<std::vector<Rational>> alpha_noisy;   // [x][c] = P(Ytilde = c | x)

    [[nodiscard]] std::size_t num_inputs() const noexcept { return input_weight.size(); }
};

/// Builds a world with the noisy conditional derived exactly from alpha and the transition.
inline DiscreteNoisyWorld make_world(std::vector<Rational> input_weight, std::vector<std::vector<Rational>> alpha,
                                     std::vector<std::vector<Rational>> transition) {
    DiscreteNoisyWorld w;
    w.num_classes = static_cast<int>(transition.size());
    w.input_weight = std::move(input_weight);
    w.alpha = std::move(alpha);
    w.transition = std::move(transition);
    const auto c = static_cast<std::size_t>(w.num_classes);
    for (const auto& a : w.alpha) {
        std::vector<Rational> noisy(c, Rational(0));
        for (std::size_t j = 0; j < c && j < a.size(); ++j)
            for (std::size_t k = 0; k < c && k < w.transition[j].size(); ++k) noisy[k] += a[j] * w.transition[j][k];
        w.alpha_noisy.push_back(std::move(noisy));
    }
    return w;
}

namespace detail {
inline bool is_distribution(const std::vector<Rational>& v, std::size_t n) {
    if (v.size() != n) return false;
    Rational s(0);
    for (const auto& x : v) {
        if (x < Rational(0)) return false;
        s += x;
    }
    return s == Rational(1);
}
}  // namespace detail

/// Throws ArgumentError listing the first inconsistency found.
inline void validate_world(const DiscreteNoisyWorld& w) {
    const auto c = static_cast<std::size_t>(w.num_classes);
    if (c < 1) throw ArgumentError("world: no classes");
    if (w.num_inputs() == 0) throw ArgumentError("world: no inputs");
    if (!detail::is_distribution(w.input_weight, w.num_inputs())) throw ArgumentError("world: input weights");
    for (const auto& x : w.input_weight)
        if (x <= Rational(0)) throw ArgumentError("world: input weights must be positive");
    if (w.transition.size() != c) throw ArgumentError("world: transition shape");
    for (const auto& row : w.transition)
        if (!detail::is_distribution(row, c)) throw ArgumentError("world: transition rows must be distributions");
    if (w.alpha.size() != w.num_inputs() || w.alpha_noisy.size() != w.num_inputs())
        throw ArgumentError("world: conditional tables shape");
    for (std::size_t x = 0; x < w.num_inputs(); ++x) {
        if (!detail::is_distribution(w.alpha[x], c)) throw ArgumentError("world: alpha(x) is not a distribution");
        for (std::size_t k = 0; k < c; ++k) {
            Rational expect(0);
            for (std::size_t j = 0; j < c; ++j) expect += w.alpha[x][j] * w.transition[j][k];
            if (w.alpha_noisy.at(x).size() != c || w.alpha_noisy[x][k] != expect)
                throw ArgumentError("world: noisy conditional inconsistent with alpha and transition at input " +
                                    std::to_string(x) + ", class " + std::to_string(k));
        }
    }
}

/// rho_c = P(Ytilde = c | Y != c) under the world's input marginal; 0 when P(Y != c) = 0.
inline Rational world_rho(const DiscreteNoisyWorld& w, int c) {
    const auto cc = static_cast<std::size_t>(c);
    Rational num(0), den(0);
    for (std::size_t x = 0; x < w.num_inputs(); ++x) {
        den += w.input_weight[x] * (Rational(1) - w.alpha[x][cc]);
        for (std::size_t j = 0; j < w.transition.size(); ++j)
            if (j != cc) num += w.input_weight[x] * w.alpha[x][j] * w.transition[j][cc];
    }
    return den == Rational(0) ? Rational(0) : num / den;
}

struct Theorem1Verdict {
    bool pass = true;
    std::optional<std::pair<std::size_t, int>> counterexample;  // (input, class)
    std::size_t checks = 0;
    std::size_t premises_true = 0;
};

/// Checks  alpha_noisy_c(x) > (1 + rho_c)/2  =>  alpha_c(x) > 1/2  for every
/// (x, c) in exact rational arithmetic.
inline Theorem1Verdict verify_theorem1(const DiscreteNoisyWorld& w) {
    validate_world(w);
    Theorem1Verdict v;
    const Rational half(1, 2);
    for (int c = 0; c < w.num_classes; ++c) {
        const Rational bound = (Rational(1) + world_rho(w, c)) / Rational(2);
        for (std::size_t x = 0; x < w.num_inputs(); ++x) {
            ++v.checks;
            const auto cc = static_cast<std::size_t>(c);
            if (w.alpha_noisy[x][cc] > bound) {
                ++v.premises_true;
                if (!(w.alpha[x][cc] > half) && v.pass) {
                    v.pass = false;
                    v.counterexample = std::make_pair(x, c);
                }
            }
        }
    }
    return v;
}

namespace detail {
/// Random composition of `total` into `parts` non-negative integers.
inline std::vector<long long> composition(long long total, std::size_t parts, Rng& rng) {
    std::uniform_int_distribution<long long> cut(0, total);
    std::vector<long long> cuts(parts - 1);
    for (auto& x : cuts) x = cut(rng);
    std::sort(cuts.begin(), cuts.end());
    std::vector<long long> out(parts);
    long long prev = 0;
    for (std::size_t k = 0; k + 1 < parts; ++k) {
        out[k] = cuts[k] - prev;
        prev = cuts[k];
    }
    out[parts - 1] = total - prev;
    return out;
}
}  // namespace detail

/// Random consistent world whose off-diagonal noise into class c is the
/// same from every other class (so P(Ytilde = c | Y != c, x) = rho_c for
/// every x). Some inputs are pinned at alpha_c(x) = 1/2 to exercise the
/// boundary.
inline DiscreteNoisyWorld random_world(Rng& rng, int max_classes = 5, int max_inputs = 6,
                                       long long denominator = 60) {
    std::uniform_int_distribution<int> classes_d(2, max_classes);
    std::uniform_int_distribution<int> inputs_d(1, max_inputs);
    std::uniform_int_distribution<int> coin(0, 3);
    const auto c = static_cast<std::size_t>(classes_d(rng));
    const auto n = static_cast<std::size_t>(inputs_d(rng));
    const long long d = denominator;

    std::vector<Rational> weight;
    {
        std::uniform_int_distribution<long long> wd(1, 10);
        std::vector<long long> raw(n);
        long long total = 0;
        for (auto& r : raw) total += (r = wd(rng));
        for (auto r : raw) weight.emplace_back(r, total);
    }
    std::vector<std::vector<Rational>> alpha;
    for (std::size_t x = 0; x < n; ++x) {
        std::vector<long long> parts;
        if (coin(rng) == 0) {
            // alpha_k(x) = 1/2 exactly for a random k.
            std::uniform_int_distribution<std::size_t> pick(0, c - 1);
            const std::size_t k = pick(rng);
            auto rest = detail::composition(d / 2, c - 1, rng);
            parts.assign(c, 0);
            for (std::size_t j = 0, r = 0; j < c; ++j) parts[j] = j == k ? d / 2 : rest[r++];
        } else {
            parts = detail::composition(d, c, rng);
        }
        std::vector<Rational> row;
        for (auto p : parts) row.emplace_back(p, d);
        alpha.push_back(std::move(row));
    }
    // rho numerators: first c parts of a composition of d into c + 1, so every
    // diagonal 1 - sum_{k != j} rho_k stays non-negative.
    auto rho = detail::composition(d, c + 1, rng);
    std::vector<std::vector<Rational>> transition(c, std::vector<Rational>(c));
    for (std::size_t j = 0; j < c; ++j) {
        Rational off(0);
        for (std::size_t k = 0; k < c; ++k) {
            if (k == j) continue;
            transition[j][k] = Rational(rho[k], d);
            off += transition[j][k];
        }
        transition[j][j] = Rational(1) - off;
    }
    return make_world(std::move(weight), std::move(alpha), std::move(transition));
}

struct Theorem1Report {
    std::size_t worlds = 0;
    std::size_t counterexamples = 0;
    std::size_t checks = 0;
    std::size_t premises_true = 0;
};

inline Theorem1Report verify_random_worlds(std::size_t worlds, std::uint64_t seed, int max_classes = 5,
                                           int max_inputs = 6) {
    Rng rng = make_rng(seed, "reco/worlds");
    Theorem1Report r;
    for (std::size_t k = 0; k < worlds; ++k) {
        DiscreteNoisyWorld w = random_world(rng, max_classes, max_inputs);
        Theorem1Verdict v = verify_theorem1(w);
        ++r.worlds;
        r.counterexamples += v.pass ? 0 : 1;
        r.checks += v.checks;
        r.premises_true += v.premises_true;
    }
    return r;
}

}  // namespace lcb
