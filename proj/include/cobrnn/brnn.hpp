#pragma once

/*
 * Bidirectional recurrent classifier, built from scratch.
 *
 * Each direction runs the recurrence
 *     h_t = tanh(W_in x_t + W_rec h_{t-1} + bias),   h_0 = 0,
 * the backward direction over the reversed sequence. Per-step hidden
 * states are concatenated [fwd; bwd] and mean-pooled over time, and a
 * single affine layer plus softmax turns the pooled vector into class
 * probabilities. Training minimizes categorical cross-entropy plus an
 * optional L2 penalty on the weight matrices (never the biases) with
 * mini-batch SGD and exact backpropagation through time.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cobrnn/errors.hpp"
#include "cobrnn/mat.hpp"
#include "cobrnn/rng.hpp"

namespace cobrnn {

struct BrnnConfig {
    std::size_t input_dim = 1;
    std::size_t hidden_dim = 1;
    std::size_t n_classes = 2;
    std::size_t seq_len = 1;
    double learning_rate = 0.05;
    double l2 = 0.0;
    std::size_t epochs = 1;
    std::size_t batch = 8;
    double grad_clip = 5.0;
    double init_scale = 1.0;
    std::uint64_t seed = 0;
};

inline void validate(const BrnnConfig& cfg) {
    if (cfg.input_dim < 1 || cfg.hidden_dim < 1 || cfg.n_classes < 1 || cfg.seq_len < 1)
        throw UsageError("brnn: all dimensions must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw UsageError("brnn: learning_rate must be > 0");
    if (!(cfg.l2 >= 0.0)) throw UsageError("brnn: l2 must be >= 0");
    if (cfg.epochs < 1) throw UsageError("brnn: epochs must be >= 1");
    if (cfg.batch < 1) throw UsageError("brnn: batch must be >= 1");
    if (!(cfg.grad_clip > 0.0)) throw UsageError("brnn: grad_clip must be > 0");
    if (!(cfg.init_scale > 0.0)) throw UsageError("brnn: init_scale must be > 0");
}

/// One direction's recurrent parameters.
struct RnnDirection {
    Matd w_in;                 // hidden_dim x input_dim
    Matd w_rec;                // hidden_dim x hidden_dim
    std::vector<double> bias;  // hidden_dim
};

struct BrnnParams {
    RnnDirection fwd, bwd;
    Matd w_out;                 // n_classes x 2*hidden_dim
    std::vector<double> b_out;  // n_classes
};

/// Apply `fn` to every parameter array in the canonical order
/// (fwd.w_in, fwd.w_rec, fwd.bias, bwd.*, w_out, b_out). The same order
/// defines flattening, gradient clipping, and updates.
template <class Params, class F>
void visit_params(Params& p, F&& fn) {
    fn(p.fwd.w_in.data());
    fn(p.fwd.w_rec.data());
    fn(p.fwd.bias);
    fn(p.bwd.w_in.data());
    fn(p.bwd.w_rec.data());
    fn(p.bwd.bias);
    fn(p.w_out.data());
    fn(p.b_out);
}

inline BrnnParams zeros_like(const BrnnParams& p) {
    BrnnParams z;
    z.fwd.w_in = Matd(p.fwd.w_in.rows(), p.fwd.w_in.cols());
    z.fwd.w_rec = Matd(p.fwd.w_rec.rows(), p.fwd.w_rec.cols());
    z.fwd.bias.assign(p.fwd.bias.size(), 0.0);
    z.bwd = z.fwd;
    z.w_out = Matd(p.w_out.rows(), p.w_out.cols());
    z.b_out.assign(p.b_out.size(), 0.0);
    return z;
}

inline std::size_t param_count(const BrnnConfig& cfg) {
    const std::size_t m = cfg.hidden_dim, k = cfg.input_dim, c = cfg.n_classes;
    return 2 * (m * k + m * m + m) + c * 2 * m + c;
}

inline std::vector<double> flatten_params(const BrnnParams& p) {
    std::vector<double> out;
    visit_params(p, [&](const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); });
    return out;
}

inline BrnnParams unflatten_params(const BrnnConfig& cfg, const std::vector<double>& flat) {
    BrnnParams p;
    const std::size_t m = cfg.hidden_dim, k = cfg.input_dim, c = cfg.n_classes;
    p.fwd.w_in = Matd(m, k);
    p.fwd.w_rec = Matd(m, m);
    p.fwd.bias.assign(m, 0.0);
    p.bwd = p.fwd;
    p.w_out = Matd(c, 2 * m);
    p.b_out.assign(c, 0.0);
    if (flat.size() != param_count(cfg))
        throw UsageError("unflatten_params: length mismatch");
    std::size_t pos = 0;
    visit_params(p, [&](std::vector<double>& v) {
        std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
        pos += v.size();
    });
    return p;
}

/// Uniform init in (-init_scale/sqrt(fan_in), +init_scale/sqrt(fan_in));
/// biases start at zero. Fill order matches visit_params, row-major.
inline BrnnParams brnn_init(const BrnnConfig& cfg) {
    validate(cfg);
    Xoshiro256pp rng = derive_stream(cfg.seed, "brnn.init");
    const std::size_t m = cfg.hidden_dim, k = cfg.input_dim, c = cfg.n_classes;

    auto fill = [&](Matd& w, std::size_t fan_in) {
        const double a = cfg.init_scale / std::sqrt(double(fan_in));
        for (auto& x : w.data()) x = rng.uniform(-a, a);
    };
    BrnnParams p;
    p.fwd.w_in = Matd(m, k);
    p.fwd.w_rec = Matd(m, m);
    p.fwd.bias.assign(m, 0.0);
    p.bwd = p.fwd;
    p.w_out = Matd(c, 2 * m);
    p.b_out.assign(c, 0.0);
    fill(p.fwd.w_in, k);
    fill(p.fwd.w_rec, m);
    fill(p.bwd.w_in, k);
    fill(p.bwd.w_rec, m);
    fill(p.w_out, 2 * m);
    return p;
}

struct ForwardTrace {
    Matd inputs;                 // T x k
    Matd fwd_hidden;             // T x m, row s holds the forward state at step s
    Matd bwd_hidden;             // T x m, row s holds the backward state at step s
    std::vector<double> pooled;  // 2m, mean over steps of [fwd; bwd]
    std::vector<double> logits;  // C
    std::vector<double> probs;   // C, softmax of logits
};

namespace detail {

/// h_t = tanh(W_in x_t + W_rec h_{t-1} + bias) over rows of `inputs`
/// in storage order; returns the T x m state matrix in the same order.
inline Matd run_direction(const RnnDirection& dir, const Matd& inputs) {
    const std::size_t t_len = inputs.rows(), m = dir.bias.size(), k = inputs.cols();
    Matd hidden(t_len, m);
    std::vector<double> prev(m, 0.0);
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = dir.bias[j];
            for (std::size_t i = 0; i < k; ++i) acc += dir.w_in(j, i) * inputs(t, i);
            for (std::size_t i = 0; i < m; ++i) acc += dir.w_rec(j, i) * prev[i];
            hidden(t, j) = std::tanh(acc);
        }
        for (std::size_t j = 0; j < m; ++j) prev[j] = hidden(t, j);
    }
    return hidden;
}

/// BPTT for one direction run over `inputs` (in run order, states in
/// `hidden`). `dpool` is the per-step gradient on the hidden state, equal
/// at every step because of mean pooling. Accumulates into `grad`.
inline void accumulate_direction_grads(const RnnDirection& dir, const Matd& inputs,
                                       const Matd& hidden, const std::vector<double>& dpool,
                                       RnnDirection& grad) {
    const std::size_t t_len = inputs.rows(), m = dir.bias.size(), k = inputs.cols();
    std::vector<double> delta_next(m, 0.0), e(m), delta(m);
    for (std::size_t t = t_len; t-- > 0;) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = dpool[j];
            if (t + 1 < t_len)
                for (std::size_t i = 0; i < m; ++i) acc += dir.w_rec(i, j) * delta_next[i];
            e[j] = acc;
        }
        for (std::size_t j = 0; j < m; ++j) {
            const double h = hidden(t, j);
            delta[j] = e[j] * (1.0 - h * h);
        }
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < k; ++i) grad.w_in(j, i) += delta[j] * inputs(t, i);
            if (t > 0)
                for (std::size_t i = 0; i < m; ++i)
                    grad.w_rec(j, i) += delta[j] * hidden(t - 1, i);
            grad.bias[j] += delta[j];
        }
        delta_next = delta;
    }
}

inline Matd reverse_rows(const Matd& m) {
    Matd out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(m.rows() - 1 - r, c);
    return out;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

/// Sum of squared entries of the weight matrices (biases excluded).
inline double weight_sq_norm(const BrnnParams& p) {
    double s = 0.0;
    auto add = [&s](const Matd& w) {
        for (double x : w.data()) s += x * x;
    };
    add(p.fwd.w_in);
    add(p.fwd.w_rec);
    add(p.bwd.w_in);
    add(p.bwd.w_rec);
    add(p.w_out);
    return s;
}

}  // namespace detail

/// Run both directions over a T x k sequence and produce class probabilities.
inline ForwardTrace brnn_forward(const BrnnParams& params, const Matd& sequence) {
    const std::size_t t_len = sequence.rows(), m = params.fwd.bias.size();
    if (t_len < 1) throw UsageError("brnn_forward: empty sequence");
    if (sequence.cols() != params.fwd.w_in.cols())
        throw UsageError("brnn_forward: input width does not match input_dim");
    if (!all_finite(sequence)) throw NumericError("brnn_forward: non-finite input");

    ForwardTrace tr;
    tr.inputs = sequence;
    tr.fwd_hidden = detail::run_direction(params.fwd, sequence);
    // The backward pass is the same recurrence over the reversed sequence;
    // rows are flipped back so tr.bwd_hidden(s) aligns with input step s.
    tr.bwd_hidden =
        detail::reverse_rows(detail::run_direction(params.bwd, detail::reverse_rows(sequence)));

    tr.pooled.assign(2 * m, 0.0);
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t j = 0; j < m; ++j) {
            tr.pooled[j] += tr.fwd_hidden(t, j);
            tr.pooled[m + j] += tr.bwd_hidden(t, j);
        }
    for (double& v : tr.pooled) v /= double(t_len);

    const std::size_t n_classes = params.b_out.size();
    tr.logits.assign(n_classes, 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
        double acc = params.b_out[c];
        for (std::size_t j = 0; j < 2 * m; ++j) acc += params.w_out(c, j) * tr.pooled[j];
        tr.logits[c] = acc;
    }
    if (!all_finite(tr.logits)) throw NumericError("brnn_forward: non-finite logits");
    tr.probs = detail::softmax(tr.logits);
    return tr;
}

/// -ln p[label], with probabilities floored at 1e-12 before the log.
inline double cross_entropy(const std::vector<double>& probs, int label) {
    if (label < 0 || std::size_t(label) >= probs.size())
        throw UsageError("cross_entropy: label out of range");
    return -std::log(std::max(probs[std::size_t(label)], 1e-12));
}

/// Exact gradient of cross_entropy + (l2/2)*||weights||^2 with respect to
/// every parameter. `trace` must come from brnn_forward on `params`.
inline BrnnParams brnn_backward(const BrnnParams& params, const ForwardTrace& trace,
                                int label, double l2 = 0.0) {
    const std::size_t m = params.fwd.bias.size();
    const std::size_t n_classes = params.b_out.size();
    const std::size_t t_len = trace.inputs.rows();
    if (label < 0 || std::size_t(label) >= n_classes)
        throw UsageError("brnn_backward: label out of range");

    BrnnParams grad = zeros_like(params);

    // Softmax + cross-entropy collapses to probs - onehot.
    std::vector<double> dlogits = trace.probs;
    dlogits[std::size_t(label)] -= 1.0;

    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t j = 0; j < 2 * m; ++j)
            grad.w_out(c, j) += dlogits[c] * trace.pooled[j];
        grad.b_out[c] += dlogits[c];
    }

    std::vector<double> dpooled(2 * m, 0.0);
    for (std::size_t j = 0; j < 2 * m; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) acc += params.w_out(c, j) * dlogits[c];
        dpooled[j] = acc;
    }

    // Mean pooling hands 1/T of the pooled gradient to every step.
    std::vector<double> dpool_fwd(m), dpool_bwd(m);
    for (std::size_t j = 0; j < m; ++j) {
        dpool_fwd[j] = dpooled[j] / double(t_len);
        dpool_bwd[j] = dpooled[m + j] / double(t_len);
    }

    detail::accumulate_direction_grads(params.fwd, trace.inputs, trace.fwd_hidden,
                                       dpool_fwd, grad.fwd);
    detail::accumulate_direction_grads(params.bwd, detail::reverse_rows(trace.inputs),
                                       detail::reverse_rows(trace.bwd_hidden), dpool_bwd,
                                       grad.bwd);

    if (l2 > 0.0) {
        auto add_l2 = [l2](Matd& g, const Matd& w) {
            for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += l2 * w.data()[i];
        };
        add_l2(grad.fwd.w_in, params.fwd.w_in);
        add_l2(grad.fwd.w_rec, params.fwd.w_rec);
        add_l2(grad.bwd.w_in, params.bwd.w_in);
        add_l2(grad.bwd.w_rec, params.bwd.w_rec);
        add_l2(grad.w_out, params.w_out);
    }
    return grad;
}

/// Predicted class (argmax of probs, ties to the lowest index) and probs.
inline std::pair<int, std::vector<double>> brnn_predict(const BrnnParams& params,
                                                        const Matd& sequence) {
    ForwardTrace tr = brnn_forward(params, sequence);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < tr.probs.size(); ++c)
        if (tr.probs[c] > tr.probs[arg]) arg = c;
    return {static_cast<int>(arg), std::move(tr.probs)};
}

/// Training objective of one sample under the current parameters.
inline double sample_loss(const BrnnParams& params, const Matd& sequence, int label,
                          double l2) {
    const ForwardTrace tr = brnn_forward(params, sequence);
    return cross_entropy(tr.probs, label) + 0.5 * l2 * detail::weight_sq_norm(params);
}

struct SequenceSample {
    Matd seq;  // T x k
    int label = 0;
};

/// One epoch of mini-batch SGD. Shuffles with `rng`, accumulates batch
/// gradients in processing order, clips by global norm, and applies
/// theta <- theta - lr * grad. Returns the mean per-sample training loss
/// (cross-entropy plus L2 penalty, measured before each batch's update).
inline double sgd_epoch(BrnnParams& params, const std::vector<SequenceSample>& data,
                        const BrnnConfig& cfg, Xoshiro256pp& rng) {
    if (data.empty()) throw UsageError("sgd_epoch: empty dataset");

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    double total_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch, ++batch_index) {
        const std::size_t stop = std::min(start + cfg.batch, order.size());
        const double batch_n = double(stop - start);
        const double penalty = 0.5 * cfg.l2 * detail::weight_sq_norm(params);

        BrnnParams grad = zeros_like(params);
        for (std::size_t pos = start; pos < stop; ++pos) {
            const auto& sample = data[order[pos]];
            const ForwardTrace tr = brnn_forward(params, sample.seq);
            total_loss += cross_entropy(tr.probs, sample.label) + penalty;
            const BrnnParams g = brnn_backward(params, tr, sample.label, 0.0);
            auto acc = [](std::vector<double>& dst, const std::vector<double>& src) {
                for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
            };
            acc(grad.fwd.w_in.data(), g.fwd.w_in.data());
            acc(grad.fwd.w_rec.data(), g.fwd.w_rec.data());
            acc(grad.fwd.bias, g.fwd.bias);
            acc(grad.bwd.w_in.data(), g.bwd.w_in.data());
            acc(grad.bwd.w_rec.data(), g.bwd.w_rec.data());
            acc(grad.bwd.bias, g.bwd.bias);
            acc(grad.w_out.data(), g.w_out.data());
            acc(grad.b_out, g.b_out);
        }
        visit_params(grad, [&](std::vector<double>& v) {
            for (double& x : v) x /= batch_n;
        });
        if (cfg.l2 > 0.0) {
            auto add_l2 = [&](Matd& g, const Matd& w) {
                for (std::size_t i = 0; i < g.size(); ++i)
                    g.data()[i] += cfg.l2 * w.data()[i];
            };
            add_l2(grad.fwd.w_in, params.fwd.w_in);
            add_l2(grad.fwd.w_rec, params.fwd.w_rec);
            add_l2(grad.bwd.w_in, params.bwd.w_in);
            add_l2(grad.bwd.w_rec, params.bwd.w_rec);
            add_l2(grad.w_out, params.w_out);
        }

        double sq = 0.0;
        visit_params(grad, [&](const std::vector<double>& v) {
            for (double x : v) sq += x * x;
        });
        const double norm = std::sqrt(sq);
        const double scale = (norm > cfg.grad_clip) ? cfg.grad_clip / norm : 1.0;

        const double step = cfg.learning_rate * scale;
        auto apply = [step](std::vector<double>& dst, const std::vector<double>& src) {
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= step * src[i];
        };
        apply(params.fwd.w_in.data(), grad.fwd.w_in.data());
        apply(params.fwd.w_rec.data(), grad.fwd.w_rec.data());
        apply(params.fwd.bias, grad.fwd.bias);
        apply(params.bwd.w_in.data(), grad.bwd.w_in.data());
        apply(params.bwd.w_rec.data(), grad.bwd.w_rec.data());
        apply(params.bwd.bias, grad.bwd.bias);
        apply(params.w_out.data(), grad.w_out.data());
        apply(params.b_out, grad.b_out);

        if (!std::isfinite(total_loss))
            throw NumericError("sgd_epoch: non-finite loss in batch " +
                               std::to_string(batch_index));
    }
    return total_loss / double(data.size());
}

/// Single-epoch overload with the stream seeded from cfg.seed.
inline double sgd_epoch(BrnnParams& params, const std::vector<SequenceSample>& data,
                        const BrnnConfig& cfg) {
    Xoshiro256pp rng = derive_stream(cfg.seed, "brnn.sgd");
    return sgd_epoch(params, data, cfg, rng);
}

struct BrnnTrainResult {
    BrnnParams params;
    std::vector<double> epoch_losses;
};

/// Initialize and train for cfg.epochs epochs over one shuffle stream.
inline BrnnTrainResult brnn_train(const std::vector<SequenceSample>& data,
                                  const BrnnConfig& cfg) {
    validate(cfg);
    BrnnTrainResult res;
    res.params = brnn_init(cfg);
    Xoshiro256pp rng = derive_stream(cfg.seed, "brnn.sgd");
    res.epoch_losses.reserve(cfg.epochs);
    for (std::size_t e = 0; e < cfg.epochs; ++e)
        res.epoch_losses.push_back(sgd_epoch(res.params, data, cfg, rng));
    return res;
}

}  // namespace cobrnn
