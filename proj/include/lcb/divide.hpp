#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "lcb/data.hpp"
#include "lcb/error.hpp"
#include "lcb/haug.hpp"
#include "lcb/net.hpp"

namespace lcb {

/// Clean/noisy partition of sample ids for one network's epoch.
struct Division {
    std::vector<std::size_t> clean_ids;
    std::vector<std::size_t> noisy_ids;
    std::vector<Distribution> clean_labels;  // aligned with clean_ids
    std::vector<Distribution> noisy_pseudo;  // aligned with noisy_ids; empty until filled
    std::vector<double> p_clean;             // per id
    double tau_c = 0.5;
    /// Index of the network whose losses produced this division (-1 = unknown).
    int source_net = -1;

    [[nodiscard]] std::size_t size() const noexcept { return clean_ids.size() + noisy_ids.size(); }
    [[nodiscard]] bool pseudo_filled() const noexcept { return noisy_pseudo.size() == noisy_ids.size(); }
};

/// id -> clean iff p_clean[id] >= tau_c. Clean labels come from `labels`,
/// the active channel (observed before correction, corrected after).
inline Division split(std::span<const double> p_clean, double tau_c, std::span<const int> labels, int num_classes,
                      int source_net = -1) {
    if (p_clean.size() != labels.size()) throw ArgumentError("split: p_clean and labels differ in length");
    if (!(tau_c >= 0.0 && tau_c <= 1.0)) throw ArgumentError("split: tau_c must lie in [0, 1]");
    Division d;
    d.tau_c = tau_c;
    d.source_net = source_net;
    d.p_clean.assign(p_clean.begin(), p_clean.end());
    for (std::size_t i = 0; i < p_clean.size(); ++i) {
        if (p_clean[i] >= tau_c) {
            d.clean_ids.push_back(i);
            d.clean_labels.push_back(one_hot(labels[i], num_classes));
        } else {
            d.noisy_ids.push_back(i);
        }
    }
    return d;
}

/// Mean of the two nets' softmax outputs on the pseudo-labeling view.
inline std::vector<Distribution> co_pseudo_label(const Mlp& net_a, const Mlp& net_b, const ViewMatrix& weak1,
                                                 std::span<const std::size_t> ids) {
    require_view(weak1, ViewKind::Weak1, "co_pseudo_label");
    if (net_a.num_classes() != net_b.num_classes()) throw ArgumentError("co_pseudo_label: class counts differ");
    Matrix x(0, weak1.x.cols());
    x.reserve_rows(ids.size());
    for (std::size_t id : ids) x.append_row(weak1.x.row(id));
    std::vector<Distribution> out;
    out.reserve(ids.size());
    if (ids.empty()) return out;
    Matrix pa = net_a.forward_batch(x);
    Matrix pb = net_b.forward_batch(x);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        Distribution p(pa.cols());
        for (std::size_t c = 0; c < p.size(); ++c) p[c] = 0.5 * (pa(i, c) + pb(i, c));
        out.push_back(std::move(p));
    }
    return out;
}

inline void fill_pseudo_labels(Division& d, const Mlp& net_a, const Mlp& net_b, const ViewMatrix& weak1) {
    d.noisy_pseudo = co_pseudo_label(net_a, net_b, weak1, d.noisy_ids);
}

/// Rank-based AUC with mid-ranks for ties: the probability that a random
/// truly-clean id scores above a random truly-noisy one, ties counting 1/2.
/// nullopt when either class is absent.
inline std::optional<double> selection_auc(std::span<const double> scores, const std::vector<bool>& is_clean) {
    if (scores.size() != is_clean.size()) throw ArgumentError("selection_auc: length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool b : is_clean) n_pos += b ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Ranks are doubled to stay integral: tie groups get (first + last) in 1-based ranks.
    long double rank_sum_x2 = 0.0L;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const auto mid_x2 = static_cast<long double>((i + 1) + (j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (is_clean[order[k]]) rank_sum_x2 += mid_x2;
        i = j + 1;
    }
    const long double u_x2 = rank_sum_x2 - static_cast<long double>(n_pos) * static_cast<long double>(n_pos + 1);
    return static_cast<double>(u_x2 / 2.0L / (static_cast<long double>(n_pos) * static_cast<long double>(n_neg)));
}

}  // namespace lcb
