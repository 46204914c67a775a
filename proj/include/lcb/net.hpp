#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lcb/data.hpp"
#include "lcb/error.hpp"
#include "lcb/format.hpp"
#include "lcb/matrix.hpp"
#include "lcb/rng.hpp"

namespace lcb {

inline constexpr double kProbFloor = 1e-12;

/// One affine layer; weights are (out x in).
struct Layer {
    Matrix weights;
    std::vector<double> bias;

    friend bool operator==(const Layer&, const Layer&) = default;
};

using Gradients = std::vector<Layer>;

/// Feed-forward classifier: ReLU hidden layers, softmax head.
class Mlp {
public:
    Mlp() = default;

    /// Zero-initialized net with the given widths [d, h1, ..., C].
    explicit Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
        if (widths_.size() < 2) throw ArgumentError("Mlp: need at least input and output widths");
        for (int w : widths_)
            if (w <= 0) throw ArgumentError("Mlp: widths must be positive");
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            layers_.push_back({Matrix(static_cast<std::size_t>(widths_[l + 1]), static_cast<std::size_t>(widths_[l])),
                               std::vector<double>(static_cast<std::size_t>(widths_[l + 1]), 0.0)});
        }
    }

    /// Glorot-uniform weights, zero biases.
    static Mlp glorot(std::vector<int> widths, std::uint64_t seed) {
        Mlp net(std::move(widths));
        Rng rng = make_rng(seed, "net/init");
        for (auto& layer : net.layers_) {
            const double fan = static_cast<double>(layer.weights.rows() + layer.weights.cols());
            const double limit = std::sqrt(6.0 / fan);
            std::uniform_real_distribution<double> u(-limit, limit);
            for (double& w : layer.weights.data()) w = u(rng);
        }
        return net;
    }

    [[nodiscard]] const std::vector<int>& widths() const noexcept { return widths_; }
    [[nodiscard]] int input_dim() const noexcept { return widths_.front(); }
    [[nodiscard]] int num_classes() const noexcept { return widths_.back(); }
    [[nodiscard]] std::vector<Layer>& layers() noexcept { return layers_; }
    [[nodiscard]] const std::vector<Layer>& layers() const noexcept { return layers_; }

    [[nodiscard]] std::size_t param_count() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.weights.data().size() + l.bias.size();
        return n;
    }

    /// Flat parameter view in layer order: weights row-major, then bias.
    [[nodiscard]] std::vector<double*> param_pointers() {
        std::vector<double*> out;
        out.reserve(param_count());
        for (auto& l : layers_) {
            for (double& w : l.weights.data()) out.push_back(&w);
            for (double& b : l.bias) out.push_back(&b);
        }
        return out;
    }

    [[nodiscard]] Gradients zero_like() const {
        Gradients g;
        for (const auto& l : layers_)
            g.push_back({Matrix(l.weights.rows(), l.weights.cols()), std::vector<double>(l.bias.size(), 0.0)});
        return g;
    }

    [[nodiscard]] Distribution forward(std::span<const double> x) const {
        if (x.size() != static_cast<std::size_t>(input_dim()))
            throw ArgumentError("Mlp::forward: expected dimension " + std::to_string(input_dim()) + ", got " +
                                std::to_string(x.size()));
        Matrix in(1, x.size());
        std::copy(x.begin(), x.end(), in.data().begin());
        Matrix p = forward_batch(in);
        return {p.data().begin(), p.data().end()};
    }

    /// Row-wise softmax outputs for a batch of inputs.
    [[nodiscard]] Matrix forward_batch(const Matrix& inputs) const {
        Matrix a = inputs;
        check_input(a);
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Matrix z = affine(layers_[l], a);
            if (l + 1 < layers_.size()) {
                for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
            } else {
                softmax_rows(z);
            }
            a = std::move(z);
        }
        return a;
    }

    friend bool operator==(const Mlp&, const Mlp&) = default;

    // Used by backward(); exposed for reuse by the loss module.
    void check_input(const Matrix& inputs) const {
        if (inputs.cols() != static_cast<std::size_t>(input_dim()))
            throw ArgumentError("Mlp: input dimension mismatch (expected " + std::to_string(input_dim()) + ", got " +
                                std::to_string(inputs.cols()) + ")");
    }

    static Matrix affine(const Layer& layer, const Matrix& a) {
        const std::size_t out = layer.weights.rows(), in = layer.weights.cols();
        Matrix z(a.rows(), out);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double* ai = a.row(i).data();
            double* zi = z.row(i).data();
            for (std::size_t o = 0; o < out; ++o) {
                const double* w = layer.weights.row(o).data();
                double s = 0.0;
                for (std::size_t k = 0; k < in; ++k) s += ai[k] * w[k];
                zi[o] = s + layer.bias[o];
            }
        }
        return z;
    }

    static void softmax_rows(Matrix& z) {
        for (std::size_t i = 0; i < z.rows(); ++i) {
            auto r = z.row(i);
            const double m = *std::max_element(r.begin(), r.end());
            double s = 0.0;
            for (double& v : r) {
                v = std::exp(v - m);
                s += v;
            }
            for (double& v : r) v /= s;
        }
    }

private:
    std::vector<int> widths_;
    std::vector<Layer> layers_;
};

// ---------------------------------------------------------------------------
// Loss terms. Predictions and targets are row-aligned matrices of
// distributions; every term is a batch mean.

inline double loss_ce(const Matrix& predictions, const Matrix& targets) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
        throw ArgumentError("loss_ce: shape mismatch");
    if (predictions.rows() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.rows(); ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < predictions.cols(); ++c)
            s -= targets(i, c) * std::log(std::max(predictions(i, c), kProbFloor));
        total += s;
    }
    return total / static_cast<double>(predictions.rows());
}

inline double loss_mse(const Matrix& predictions, const Matrix& targets) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
        throw ArgumentError("loss_mse: shape mismatch");
    if (predictions.rows() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.rows(); ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < predictions.cols(); ++c) {
            const double d = targets(i, c) - predictions(i, c);
            s += d * d;
        }
        total += s;
    }
    return total / static_cast<double>(predictions.rows());
}

/// KL(prior || mean_output); pushes the average prediction toward the prior.
inline double loss_reg(std::span<const double> mean_output, std::span<const double> prior) {
    if (mean_output.size() != prior.size()) throw ArgumentError("loss_reg: size mismatch");
    double s = 0.0;
    for (std::size_t c = 0; c < prior.size(); ++c) {
        if (prior[c] <= 0.0) continue;
        s += prior[c] * std::log(prior[c] / std::max(mean_output[c], kProbFloor));
    }
    return s;
}

inline Distribution uniform_prior(int num_classes) {
    return Distribution(static_cast<std::size_t>(num_classes), 1.0 / num_classes);
}

// ---------------------------------------------------------------------------
// Combined objective and its gradient.

enum class ItemRole { Supervised, Unsupervised };

/// A training batch. Supervised rows contribute CE, unsupervised rows MSE;
/// every row contributes to the mean output used by the regularizer.
struct Batch {
    Matrix inputs;
    Matrix targets;
    std::vector<ItemRole> roles;
};

struct LossSpec {
    double lambda_u = 0.0;
    double lambda_r = 0.0;
    Distribution prior;  // empty = uniform
};

struct LossBreakdown {
    double ce = 0.0;
    double mse = 0.0;
    double reg = 0.0;
    double total = 0.0;
};

namespace detail {

inline void split_by_role(const Matrix& probs, const Batch& batch, Matrix& p_x, Matrix& t_x, Matrix& p_u,
                          Matrix& t_u) {
    const std::size_t c = probs.cols();
    p_x = Matrix(0, c);
    t_x = Matrix(0, c);
    p_u = Matrix(0, c);
    t_u = Matrix(0, c);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        if (batch.roles[i] == ItemRole::Supervised) {
            p_x.append_row(probs.row(i));
            t_x.append_row(batch.targets.row(i));
        } else {
            p_u.append_row(probs.row(i));
            t_u.append_row(batch.targets.row(i));
        }
    }
}

inline Distribution column_mean(const Matrix& m) {
    Distribution mean(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += m(i, c);
    for (double& v : mean) v /= static_cast<double>(m.rows());
    return mean;
}

inline void check_batch(const Mlp& net, const Batch& batch) {
    net.check_input(batch.inputs);
    if (batch.targets.rows() != batch.inputs.rows() || batch.roles.size() != batch.inputs.rows())
        throw ArgumentError("Batch: row counts disagree");
    if (batch.targets.cols() != static_cast<std::size_t>(net.num_classes()))
        throw ArgumentError("Batch: target width must equal class count");
}

}  // namespace detail

inline LossBreakdown combine(const Matrix& probs, const Batch& batch, const LossSpec& spec) {
    Matrix p_x, t_x, p_u, t_u;
    detail::split_by_role(probs, batch, p_x, t_x, p_u, t_u);
    LossBreakdown out;
    out.ce = loss_ce(p_x, t_x);
    out.mse = loss_mse(p_u, t_u);
    if (probs.rows() > 0) {
        const Distribution prior =
            spec.prior.empty() ? uniform_prior(static_cast<int>(probs.cols())) : spec.prior;
        out.reg = loss_reg(detail::column_mean(probs), prior);
    }
    out.total = out.ce + spec.lambda_u * out.mse + spec.lambda_r * out.reg;
    return out;
}

inline LossBreakdown evaluate_loss(const Mlp& net, const Batch& batch, const LossSpec& spec) {
    detail::check_batch(net, batch);
    return combine(net.forward_batch(batch.inputs), batch, spec);
}

/// Exact gradient of ce + lambda_u * mse + lambda_r * reg over all parameters.
inline std::pair<LossBreakdown, Gradients> backward(const Mlp& net, const Batch& batch, const LossSpec& spec) {
    detail::check_batch(net, batch);
    const auto& layers = net.layers();
    const std::size_t depth = layers.size();
    const std::size_t n = batch.inputs.rows();
    const std::size_t classes = static_cast<std::size_t>(net.num_classes());

    // acts[l] is the input to layer l; acts[depth] holds the softmax output.
    std::vector<Matrix> acts;
    acts.reserve(depth + 1);
    acts.push_back(batch.inputs);
    for (std::size_t l = 0; l < depth; ++l) {
        Matrix z = Mlp::affine(layers[l], acts.back());
        if (l + 1 < depth) {
            for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
        } else {
            Mlp::softmax_rows(z);
        }
        acts.push_back(std::move(z));
    }
    const Matrix& probs = acts.back();
    LossBreakdown loss = combine(probs, batch, spec);

    std::size_t n_x = 0;
    for (auto r : batch.roles) n_x += r == ItemRole::Supervised ? 1 : 0;
    const std::size_t n_u = n - n_x;

    // dL/dp for every row.
    Matrix grad_p(n, classes, 0.0);
    if (n > 0 && spec.lambda_r != 0.0) {
        const Distribution prior = spec.prior.empty() ? uniform_prior(static_cast<int>(classes)) : spec.prior;
        const Distribution mean = detail::column_mean(probs);
        for (std::size_t c = 0; c < classes; ++c) {
            if (mean[c] < kProbFloor || prior[c] <= 0.0) continue;
            const double g = -spec.lambda_r * prior[c] / mean[c] / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) grad_p(i, c) += g;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (batch.roles[i] == ItemRole::Supervised) {
            const double scale = 1.0 / static_cast<double>(n_x);
            for (std::size_t c = 0; c < classes; ++c) {
                const double p = probs(i, c);
                if (p >= kProbFloor) grad_p(i, c) -= scale * batch.targets(i, c) / p;
            }
        } else if (spec.lambda_u != 0.0) {
            const double scale = 2.0 * spec.lambda_u / static_cast<double>(n_u);
            for (std::size_t c = 0; c < classes; ++c) grad_p(i, c) -= scale * (batch.targets(i, c) - probs(i, c));
        }
    }

    // Through the softmax: dz = p * (g - <g, p>).
    Matrix delta(n, classes);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t c = 0; c < classes; ++c) dot += grad_p(i, c) * probs(i, c);
        for (std::size_t c = 0; c < classes; ++c) delta(i, c) = probs(i, c) * (grad_p(i, c) - dot);
    }

    Gradients grads = net.zero_like();
    for (std::size_t l = depth; l-- > 0;) {
        const Matrix& a = acts[l];
        const Layer& layer = layers[l];
        const std::size_t out = layer.weights.rows(), in = layer.weights.cols();
        Layer& g = grads[l];
        for (std::size_t i = 0; i < n; ++i) {
            const double* ai = a.row(i).data();
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta(i, o);
                if (d == 0.0) continue;
                g.bias[o] += d;
                double* gw = g.weights.row(o).data();
                for (std::size_t k = 0; k < in; ++k) gw[k] += d * ai[k];
            }
        }
        if (l == 0) break;
        Matrix prev(n, in, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double* pi = prev.row(i).data();
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta(i, o);
                if (d == 0.0) continue;
                const double* w = layer.weights.row(o).data();
                for (std::size_t k = 0; k < in; ++k) pi[k] += d * w[k];
            }
            const double* ai = a.row(i).data();
            for (std::size_t k = 0; k < in; ++k)
                if (ai[k] <= 0.0) pi[k] = 0.0;
        }
        delta = std::move(prev);
    }
    return {loss, std::move(grads)};
}

// ---------------------------------------------------------------------------

struct SgdState {
    double learning_rate = 0.02;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    Gradients velocity;  // lazily shaped on first step
};

/// v = momentum * v + g + weight_decay * theta;  theta -= lr * v.
inline void sgd_step(Mlp& net, const Gradients& grads, SgdState& state) {
    auto& layers = net.layers();
    if (grads.size() != layers.size()) throw ArgumentError("sgd_step: gradient shape mismatch");
    if (state.velocity.empty()) state.velocity = net.zero_like();
    auto update = [&](std::vector<double>& theta, const std::vector<double>& g, std::vector<double>& v) {
        if (theta.size() != g.size() || theta.size() != v.size())
            throw ArgumentError("sgd_step: parameter shape mismatch");
        for (std::size_t k = 0; k < theta.size(); ++k) {
            v[k] = state.momentum * v[k] + g[k] + state.weight_decay * theta[k];
            theta[k] -= state.learning_rate * v[k];
        }
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weights.data(), grads[l].weights.data(), state.velocity[l].weights.data());
        update(layers[l].bias, grads[l].bias, state.velocity[l].bias);
    }
}

// ---------------------------------------------------------------------------
// Checkpoints: "LCB-NET-1", a widths line, then per layer one line per
// weight row followed by one bias line, in shortest round-trip decimal.

inline constexpr const char* kCheckpointMagic = "LCB-NET-1";

inline std::string checkpoint_text(const Mlp& net) {
    std::string out = std::string(kCheckpointMagic) + "\nwidths";
    for (int w : net.widths()) out += " " + std::to_string(w);
    out += "\n";
    auto emit = [&out](std::span<const double> values) {
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (k) out += ' ';
            out += format_double(values[k]);
        }
        out += '\n';
    };
    for (const auto& layer : net.layers()) {
        for (std::size_t o = 0; o < layer.weights.rows(); ++o) emit(layer.weights.row(o));
        emit(layer.bias);
    }
    return out;
}

inline Mlp parse_checkpoint(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != kCheckpointMagic) throw ParseError("not an LCB-NET-1 checkpoint", 1);
    if (!std::getline(in, line)) throw ParseError("missing widths line", 2);
    std::istringstream wl(line);
    std::string tag;
    wl >> tag;
    if (tag != "widths") throw ParseError("missing widths line", 2);
    std::vector<int> widths;
    int w = 0;
    while (wl >> w) widths.push_back(w);
    Mlp net(widths);
    std::string token;
    for (double* p : net.param_pointers()) {
        if (!(in >> token)) throw ParseError("checkpoint truncated", 0);
        auto v = parse_double(token);
        if (!v) throw ParseError("bad number '" + token + "' in checkpoint", 0);
        *p = *v;
    }
    if (in >> token) throw ParseError("trailing data in checkpoint", 0);
    return net;
}

inline void save_checkpoint(const Mlp& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    out << checkpoint_text(net);
    if (!out) throw ParseError("cannot write checkpoint " + path, 0);
}

inline Mlp load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint " + path, 0);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_checkpoint(ss.str());
}

}  // namespace lcb
