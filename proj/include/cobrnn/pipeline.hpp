#pragma once

/*
 * Full training pipeline: per-patch preprocessing, row-wise PCA, and the
 * bidirectional recurrent classifier, with the cuttlefish optimizer
 * searching the training hyperparameters. Each image row becomes one
 * step of the input sequence after projection onto the leading principal
 * components.
 *
 * The search vector has four genes: log10 learning rate in [-3,-0.5],
 * hidden_dim in [2,64] (rounded), pca_k in [2,W] (rounded), and log10 of
 * the L2 strength in [-6,-1]. Fitness is the validation cross-entropy of
 * a briefly trained candidate; numeric failures score a large sentinel
 * instead of crashing the search. A direct-weight mode flattens a tiny
 * network's parameters into the search vector instead.
 */

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cobrnn/brnn.hpp"
#include "cobrnn/cuttlefish.hpp"
#include "cobrnn/dataset.hpp"
#include "cobrnn/errors.hpp"
#include "cobrnn/mat.hpp"
#include "cobrnn/metrics.hpp"
#include "cobrnn/pca.hpp"
#include "cobrnn/preprocess.hpp"
#include "cobrnn/rng.hpp"

namespace cobrnn {

/// Fitness assigned when an inner training run fails numerically.
constexpr double kFitnessSentinel = 1e9;

struct PipelineConfig {
    PreprocessConfig preprocess;
    std::size_t batch = 8;
    std::size_t search_epochs = 6;   // epochs per fitness evaluation
    std::size_t final_epochs = 40;   // epochs for the final retrain
    double grad_clip = 5.0;
    double init_scale = 1.0;
    std::uint64_t seed = 0;
    std::string config_sha;  // carried into model provenance
};

inline void validate(const PipelineConfig& cfg) {
    validate(cfg.preprocess);
    if (cfg.batch < 1) throw UsageError("pipeline: batch must be >= 1");
    if (cfg.search_epochs < 1) throw UsageError("pipeline: search_epochs must be >= 1");
    if (cfg.final_epochs < 1) throw UsageError("pipeline: final_epochs must be >= 1");
    if (!(cfg.grad_clip > 0.0)) throw UsageError("pipeline: grad_clip must be > 0");
    if (!(cfg.init_scale > 0.0)) throw UsageError("pipeline: init_scale must be > 0");
}

struct DecodedHyper {
    double learning_rate = 0.0;
    std::size_t hidden_dim = 0;
    std::size_t pca_k = 0;
    double l2 = 0.0;

    /// Canonical rendering; cache key and inner-seed derivation label.
    std::string key() const {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.17g|%zu|%zu|%.17g", learning_rate, hidden_dim,
                      pca_k, l2);
        return buf;
    }
};

/// Search box for the four genes given the patch width.
inline void hyper_bounds(std::size_t width, std::vector<double>& lower,
                         std::vector<double>& upper) {
    lower = {-3.0, 2.0, 2.0, -6.0};
    upper = {-0.5, 64.0, double(width), -1.0};
}

/// Genes -> concrete hyperparameters. Rounding is half-away-from-zero;
/// integer genes clamp into their ranges, so decoding is total.
inline DecodedHyper decode_hyper(const std::vector<double>& genes, std::size_t width) {
    if (genes.size() != 4) throw UsageError("decode_hyper: expected 4 genes");
    auto round_clamp = [](double g, long long lo, long long hi) {
        long long v = std::llround(g);
        if (v < lo) v = lo;
        if (v > hi) v = hi;
        return std::size_t(v);
    };
    DecodedHyper h;
    h.learning_rate = std::pow(10.0, genes[0]);
    h.hidden_dim = round_clamp(genes[1], 2, 64);
    h.pca_k = round_clamp(genes[2], 2, (long long)width);
    h.l2 = std::pow(10.0, genes[3]);
    return h;
}

/// Runs `fn`, mapping numeric failure (thrown or non-finite) to the
/// sentinel so a metaheuristic can keep searching.
inline double guarded_fitness(const std::function<double()>& fn) {
    try {
        const double v = fn();
        return std::isfinite(v) ? v : kFitnessSentinel;
    } catch (const NumericError&) {
        return kFitnessSentinel;
    }
}

struct Provenance {
    std::uint64_t seed = 0;
    std::string config_sha;
    std::size_t evals = 0;
};

struct TrainedModel {
    PreprocessConfig preprocess;
    PcaModel pca;
    BrnnConfig brnn_config;
    BrnnParams brnn;
    int n_classes = 0;
    Provenance provenance;
};

/// Component dimensions must agree: PCA output width feeds the recurrent
/// input, and the sequence length is the patch height.
inline void validate(const TrainedModel& m) {
    if (m.pca.components.rows() != m.brnn_config.input_dim)
        throw UsageError("model: pca_k != brnn input_dim");
    if (m.brnn.fwd.w_in.cols() != m.brnn_config.input_dim)
        throw UsageError("model: params do not match config");
    if (m.n_classes < 2 || std::size_t(m.n_classes) != m.brnn_config.n_classes)
        throw UsageError("model: class count mismatch");
}

namespace detail {

inline Matd patch_rows_double(const Matf& patch) {
    Matd rows(patch.rows(), patch.cols());
    for (std::size_t r = 0; r < patch.rows(); ++r)
        for (std::size_t c = 0; c < patch.cols(); ++c) rows(r, c) = double(patch(r, c));
    return rows;
}

inline std::vector<Matf> preprocess_all(const Dataset& ds, const PreprocessConfig& cfg) {
    std::vector<Matf> out;
    out.reserve(ds.samples.size());
    for (const Sample& s : ds.samples) out.push_back(preprocess_patch(s.pixels, cfg));
    return out;
}

/// Stack every patch's rows into one (N*H) x W matrix for a PCA fit.
inline Matd collect_rows(const std::vector<Matf>& patches) {
    if (patches.empty()) throw UsageError("pipeline: no patches to fit on");
    const std::size_t h = patches[0].rows(), w = patches[0].cols();
    Matd rows(patches.size() * h, w);
    for (std::size_t i = 0; i < patches.size(); ++i)
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c)
                rows(i * h + r, c) = double(patches[i](r, c));
    return rows;
}

inline std::vector<SequenceSample> to_sequences(const std::vector<Matf>& patches,
                                                const Dataset& ds, const PcaModel& pca) {
    std::vector<SequenceSample> seqs;
    seqs.reserve(patches.size());
    for (std::size_t i = 0; i < patches.size(); ++i) {
        SequenceSample s;
        s.seq = pca_transform(pca, patch_rows_double(patches[i]));
        s.label = ds.samples[i].label;
        seqs.push_back(std::move(s));
    }
    return seqs;
}

inline double mean_cross_entropy(const BrnnParams& params,
                                 const std::vector<SequenceSample>& seqs) {
    if (seqs.empty()) throw UsageError("pipeline: empty evaluation set");
    double sum = 0.0;
    for (const auto& s : seqs) sum += cross_entropy(brnn_forward(params, s.seq).probs, s.label);
    return sum / double(seqs.size());
}

}  // namespace detail

/// Precomputed state for hyperparameter fitness evaluations. The PCA is
/// fitted once at the largest usable component count; each candidate
/// truncates it, which yields the same model as refitting at that k.
class HyperFitness {
public:
    HyperFitness(const Dataset& train, const Dataset& val, const PipelineConfig& cfg)
        : cfg_(cfg),
          train_(train),
          val_(val),
          train_patches_(detail::preprocess_all(train, cfg.preprocess)),
          val_patches_(detail::preprocess_all(val, cfg.preprocess)) {
        if (val.samples.empty()) throw UsageError("fitness: validation set is empty");
        if (train.height != val.height || train.width != val.width ||
            train.n_classes != val.n_classes)
            throw UsageError("fitness: train and validation sets do not match");
        const Matd rows = detail::collect_rows(train_patches_);
        const std::size_t k_max = std::min(rows.rows() - 1, rows.cols());
        if (k_max < 2) throw UsageError("fitness: too little data for projection");
        full_pca_ = pca_fit(rows, k_max);
    }

    std::size_t max_k() const { return full_pca_.components.rows(); }

    /// Validation cross-entropy of a briefly trained candidate; cached by
    /// decoded hyperparameters, sentinel on numeric failure.
    double operator()(const std::vector<double>& genes) {
        const DecodedHyper h = decode_hyper(genes, train_.width);
        const std::string key = h.key();
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const double fit = guarded_fitness([&] { return evaluate(h); });
        cache_.emplace(key, fit);
        return fit;
    }

    /// Train a full model at the given hyperparameters (used for the final
    /// retrain on the merged train and validation sets).
    TrainedModel train_at(const DecodedHyper& h, const Dataset& data,
                          std::size_t epochs, std::uint64_t inner_seed) const {
        const std::vector<Matf> patches = detail::preprocess_all(data, cfg_.preprocess);
        const Matd rows = detail::collect_rows(patches);
        const std::size_t k = std::min(h.pca_k, std::min(rows.rows() - 1, rows.cols()));
        TrainedModel m;
        m.preprocess = cfg_.preprocess;
        m.pca = pca_fit(rows, k);
        m.brnn_config = make_brnn_config(h, k, data, epochs, inner_seed);
        m.brnn = brnn_train(detail::to_sequences(patches, data, m.pca), m.brnn_config).params;
        m.n_classes = data.n_classes;
        m.provenance.seed = cfg_.seed;
        m.provenance.config_sha = cfg_.config_sha;
        validate(m);
        return m;
    }

private:
    BrnnConfig make_brnn_config(const DecodedHyper& h, std::size_t k, const Dataset& data,
                                std::size_t epochs, std::uint64_t seed) const {
        BrnnConfig b;
        b.input_dim = k;
        b.hidden_dim = h.hidden_dim;
        b.n_classes = std::size_t(data.n_classes);
        b.seq_len = data.height;
        b.learning_rate = h.learning_rate;
        b.l2 = h.l2;
        b.epochs = epochs;
        b.batch = cfg_.batch;
        b.grad_clip = cfg_.grad_clip;
        b.init_scale = cfg_.init_scale;
        b.seed = seed;
        return b;
    }

    double evaluate(const DecodedHyper& h) {
        const std::size_t k = std::min(h.pca_k, max_k());
        const PcaModel pca = pca_truncate(full_pca_, k);
        const std::vector<SequenceSample> train_seqs =
            detail::to_sequences(train_patches_, train_, pca);
        const std::vector<SequenceSample> val_seqs =
            detail::to_sequences(val_patches_, val_, pca);
        const std::uint64_t inner_seed = derive_seed(cfg_.seed, "inner:" + h.key());
        const BrnnConfig b =
            make_brnn_config(h, k, train_, cfg_.search_epochs, inner_seed);
        const BrnnTrainResult r = brnn_train(train_seqs, b);
        return detail::mean_cross_entropy(r.params, val_seqs);
    }

    PipelineConfig cfg_;
    Dataset train_, val_;
    std::vector<Matf> train_patches_, val_patches_;
    PcaModel full_pca_;
    std::map<std::string, double> cache_;
};

/// One-off fitness query matching the search's definition exactly.
inline double fitness_of_hyper(const std::vector<double>& genes, const Dataset& train,
                               const Dataset& val, const PipelineConfig& cfg) {
    HyperFitness f(train, val, cfg);
    return f(genes);
}

struct TrainOutcome {
    TrainedModel model;
    OptimizeResult search;
    DecodedHyper best;
};

/// Search the hyperparameter box with the cuttlefish optimizer, then
/// retrain once at the best point on train and validation merged.
inline TrainOutcome train_co_brnn(const Dataset& train, const Dataset& val,
                                  CuttlefishConfig co_cfg, const PipelineConfig& cfg) {
    validate(cfg);
    HyperFitness fitness(train, val, cfg);

    co_cfg.dim = 4;
    hyper_bounds(train.width, co_cfg.lower, co_cfg.upper);
    co_cfg.seed = derive_seed(cfg.seed, "co.search");
    validate(co_cfg);

    TrainOutcome out;
    out.search = cf_optimize(co_cfg, [&](const std::vector<double>& g) { return fitness(g); });
    out.best = decode_hyper(out.search.best_point, train.width);

    const Dataset merged = concat(train, val);
    const std::uint64_t final_seed = derive_seed(cfg.seed, "pipeline.final");
    out.model = fitness.train_at(out.best, merged, cfg.final_epochs, final_seed);
    out.model.provenance.evals = co_cfg.budget;
    return out;
}

struct DirectTrainOutcome {
    BrnnParams params;
    OptimizeResult search;
};

/// Optimize a tiny network's weights directly: parameters flatten into the
/// search vector with bounds [-3,3], fitness is mean training
/// cross-entropy. Only networks with at most 200 parameters are accepted.
inline DirectTrainOutcome train_direct_weights(const BrnnConfig& cfg,
                                               const std::vector<SequenceSample>& train,
                                               CuttlefishConfig co_cfg) {
    validate(cfg);
    if (train.empty()) throw UsageError("train_direct_weights: empty training set");
    const std::size_t n = param_count(cfg);
    if (n > 200)
        throw UsageError("train_direct_weights: " + std::to_string(n) +
                         " parameters exceeds the direct-mode limit of 200");

    co_cfg.dim = n;
    co_cfg.lower.assign(n, -3.0);
    co_cfg.upper.assign(n, 3.0);
    co_cfg.seed = derive_seed(cfg.seed, "co.direct");
    validate(co_cfg);

    auto objective = [&](const std::vector<double>& flat) {
        return guarded_fitness([&] {
            const BrnnParams p = unflatten_params(cfg, flat);
            return detail::mean_cross_entropy(p, train);
        });
    };

    DirectTrainOutcome out;
    out.search = cf_optimize(co_cfg, objective);
    out.params = unflatten_params(cfg, out.search.best_point);
    return out;
}

/// Run the preprocess -> projection -> classify chain over a test set and
/// score it. The report carries RMSE and MAE because the per-sample
/// probability vectors are available here.
inline MetricsReport evaluate_model(const TrainedModel& model, const Dataset& test) {
    validate(model);
    if (test.samples.empty()) throw UsageError("evaluate_model: empty test set");
    if (test.height != model.brnn_config.seq_len)
        throw UsageError("evaluate_model: patch height does not match the model");
    if (test.width != model.pca.mean.size())
        throw UsageError("evaluate_model: patch width does not match the model");
    if (test.n_classes != model.n_classes)
        throw UsageError("evaluate_model: class count does not match the model");

    const std::size_t n = test.samples.size();
    std::vector<int> y_true(n), y_pred(n);
    Matd probs(n, std::size_t(model.n_classes));
    for (std::size_t i = 0; i < n; ++i) {
        const Matf patch = preprocess_patch(test.samples[i].pixels, model.preprocess);
        const Matd seq = pca_transform(model.pca, detail::patch_rows_double(patch));
        auto [label, p] = brnn_predict(model.brnn, seq);
        y_true[i] = test.samples[i].label;
        y_pred[i] = label;
        for (std::size_t c = 0; c < p.size(); ++c) probs(i, c) = p[c];
    }
    const ConfusionMatrix cm = confusion(y_true, y_pred, model.n_classes);
    return derive_metrics(cm, probs, y_true);
}

}  // namespace cobrnn
