#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "lcb/lcb.hpp"

namespace lcbtest {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("lcb_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const fs::path& path() const noexcept { return path_; }
    [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// A run small enough for unit tests (a few hundred samples, a dozen epochs).
inline lcb::RunConfig tiny_config() {
    lcb::RunConfig c;
    c.data.num_classes = 3;
    c.data.per_class = 60;
    c.data.test_per_class = 30;
    c.data.dim = 6;
    c.data.separation = 5.0;
    c.noise.eta = 0.4;
    c.hidden = {12};
    c.schedule.total_epochs = 8;
    c.schedule.warmup_epochs = 2;
    c.schedule.batch_size = 32;
    c.reco.epoch = 5;
    c.seed = 11;
    return c;
}

/// O(N^2) AUC: fraction of (clean, noisy) pairs ordered correctly, ties 1/2.
inline double pairwise_auc(std::span<const double> scores, const std::vector<bool>& clean) {
    long long twice = 0, pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!clean[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (clean[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) twice += 2;
            else if (scores[i] == scores[j]) twice += 1;
        }
    }
    return static_cast<double>(twice) / 2.0 / static_cast<double>(pairs);
}

/// Scalar re-evaluation of the combined objective, written independently
/// of the library's batched code.
inline double combined_loss_oracle(const lcb::Mlp& net, const lcb::Batch& batch, const lcb::LossSpec& spec) {
    const std::size_t c = static_cast<std::size_t>(net.num_classes());
    double ce = 0.0, mse = 0.0;
    std::size_t nx = 0, nu = 0;
    std::vector<double> mean(c, 0.0);
    for (std::size_t i = 0; i < batch.inputs.rows(); ++i) {
        std::vector<double> a(batch.inputs.row(i).begin(), batch.inputs.row(i).end());
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            const auto& layer = net.layers()[l];
            std::vector<double> z(layer.bias);
            for (std::size_t o = 0; o < z.size(); ++o)
                for (std::size_t k = 0; k < a.size(); ++k) z[o] += layer.weights(o, k) * a[k];
            if (l + 1 < net.layers().size())
                for (double& v : z) v = std::max(v, 0.0);
            a = z;
        }
        double m = a[0];
        for (double v : a) m = std::max(m, v);
        double s = 0.0;
        for (double& v : a) s += (v = std::exp(v - m));
        for (double& v : a) v /= s;
        for (std::size_t k = 0; k < c; ++k) mean[k] += a[k];
        if (batch.roles[i] == lcb::ItemRole::Supervised) {
            ++nx;
            for (std::size_t k = 0; k < c; ++k)
                ce -= batch.targets(i, k) * std::log(std::max(a[k], lcb::kProbFloor));
        } else {
            ++nu;
            for (std::size_t k = 0; k < c; ++k) mse += (a[k] - batch.targets(i, k)) * (a[k] - batch.targets(i, k));
        }
    }
    double reg = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        const double m = mean[k] / static_cast<double>(batch.inputs.rows());
        const double pk = spec.prior.empty() ? 1.0 / static_cast<double>(c) : spec.prior[k];
        if (pk > 0.0) reg += pk * std::log(pk / std::max(m, lcb::kProbFloor));
    }
    return (nx ? ce / static_cast<double>(nx) : 0.0) + spec.lambda_u * (nu ? mse / static_cast<double>(nu) : 0.0) +
           spec.lambda_r * reg;
}

/// Random batch with mixed roles and soft simplex targets.
inline lcb::Batch random_batch(std::size_t n, int dim, int classes, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    lcb::Batch b{lcb::Matrix(n, static_cast<std::size_t>(dim)), lcb::Matrix(n, static_cast<std::size_t>(classes)),
                 {}};
    for (double& v : b.inputs.data()) v = normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < classes; ++k) s += (b.targets(i, static_cast<std::size_t>(k)) = unit(rng) + 1e-3);
        for (int k = 0; k < classes; ++k) b.targets(i, static_cast<std::size_t>(k)) /= s;
        b.roles.push_back(unit(rng) < 0.5 ? lcb::ItemRole::Supervised : lcb::ItemRole::Unsupervised);
    }
    return b;
}

struct GradCheck {
    double worst_rel = 0.0;
    std::size_t entries = 0;
};

/// Central differences against backward(); relative error uses
/// max(|analytic|, |numeric|, 1e-6) as denominator.
inline GradCheck check_gradients(lcb::Mlp net, const lcb::Batch& batch, const lcb::LossSpec& spec,
                                 double step = 1e-5) {
    auto [loss, grads] = lcb::backward(net, batch, spec);
    std::vector<double> analytic;
    for (const auto& l : grads) {
        analytic.insert(analytic.end(), l.weights.data().begin(), l.weights.data().end());
        analytic.insert(analytic.end(), l.bias.begin(), l.bias.end());
    }
    GradCheck out;
    auto params = net.param_pointers();
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = *params[k];
        *params[k] = saved + step;
        const double up = lcb::evaluate_loss(net, batch, spec).total;
        *params[k] = saved - step;
        const double down = lcb::evaluate_loss(net, batch, spec).total;
        *params[k] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
        out.worst_rel = std::max(out.worst_rel, std::abs(analytic[k] - numeric) / denom);
        ++out.entries;
    }
    return out;
}

/// Glorot net with small nonzero biases, so no ReLU input sits exactly on its kink.
inline lcb::Mlp random_net(const std::vector<int>& widths, std::uint64_t seed, std::mt19937_64& rng) {
    lcb::Mlp net = lcb::Mlp::glorot(widths, seed);
    std::uniform_real_distribution<double> bias(-0.2, 0.2);
    for (auto& layer : net.layers())
        for (double& b : layer.bias) b = bias(rng);
    return net;
}

/// Random widths within [8,16,8,4] (depth 2 to 4 layers of weights).
inline std::vector<int> random_widths(std::mt19937_64& rng) {
    const std::vector<int> cap{8, 16, 8, 4};
    std::uniform_int_distribution<int> depth(2, 4);
    const int n = depth(rng);
    std::vector<int> w;
    for (int i = 0; i < n; ++i) {
        const int limit = i == n - 1 ? 4 : cap[static_cast<std::size_t>(i)];
        std::uniform_int_distribution<int> pick(2, limit);
        w.push_back(pick(rng));
    }
    return w;
}

}  // namespace lcbtest
