#pragma once

/*
 * Confusion-matrix construction and multiclass scoring.
 *
 * Per class the one-vs-rest counts give sensitivity (= recall),
 * specificity, precision, and F1. Aggregates are unweighted macro
 * averages; the aggregate f_score is the harmonic mean of the macro
 * precision and macro recall. Any 0/0 ratio is reported as 0 and
 * flagged. When prediction distributions are supplied, RMSE and MAE
 * are computed entrywise against one-hot targets.
 */

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cobrnn/errors.hpp"
#include "cobrnn/mat.hpp"

namespace cobrnn {

struct ConfusionMatrix {
    Mat<std::uint64_t> counts;  // rows = true class, columns = predicted class

    std::size_t n_classes() const { return counts.rows(); }
    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (auto v : counts.data()) s += v;
        return s;
    }
    std::uint64_t trace() const {
        std::uint64_t s = 0;
        for (std::size_t i = 0; i < counts.rows(); ++i) s += counts(i, i);
        return s;
    }
};

inline ConfusionMatrix confusion(const std::vector<int>& y_true,
                                 const std::vector<int>& y_pred, int n_classes) {
    if (y_true.size() != y_pred.size())
        throw UsageError("confusion: label vectors differ in length");
    if (y_true.empty()) throw UsageError("confusion: no samples");
    if (n_classes < 1) throw UsageError("confusion: n_classes must be >= 1");
    ConfusionMatrix cm;
    cm.counts = Mat<std::uint64_t>(std::size_t(n_classes), std::size_t(n_classes));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
            throw UsageError("confusion: label out of range at sample " + std::to_string(i));
        ++cm.counts(std::size_t(t), std::size_t(p));
    }
    return cm;
}

/// One-vs-rest counts and ratios for a single class. A ratio whose
/// denominator is zero is reported as 0 with its `*_defined` flag false.
struct ClassStats {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    double sensitivity = 0.0, specificity = 0.0, precision = 0.0, f_score = 0.0;
    bool sensitivity_defined = false, specificity_defined = false;
    bool precision_defined = false, f_score_defined = false;
};

struct MetricsReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double sensitivity = 0.0;  // macro average over classes
    double specificity = 0.0;
    double precision = 0.0;
    double recall = 0.0;  // identical to sensitivity by definition
    double f_score = 0.0;
    bool has_error_terms = false;
    double rmse = 0.0, mae = 0.0;
    std::vector<ClassStats> per_class;
};

namespace detail {

inline double ratio_or_zero(std::uint64_t num, std::uint64_t den, bool& defined) {
    defined = den > 0;
    return defined ? double(num) / double(den) : 0.0;
}

inline MetricsReport derive_from_counts(const ConfusionMatrix& cm) {
    const std::size_t c = cm.n_classes();
    if (c == 0 || cm.total() == 0) throw UsageError("derive_metrics: empty confusion matrix");

    MetricsReport rep;
    rep.confusion = cm;
    rep.accuracy = double(cm.trace()) / double(cm.total());
    rep.per_class.resize(c);

    std::vector<std::uint64_t> row_sum(c, 0), col_sum(c, 0);
    for (std::size_t t = 0; t < c; ++t)
        for (std::size_t p = 0; p < c; ++p) {
            row_sum[t] += cm.counts(t, p);
            col_sum[p] += cm.counts(t, p);
        }
    const std::uint64_t total = cm.total();

    double sens_sum = 0, spec_sum = 0, prec_sum = 0;
    for (std::size_t k = 0; k < c; ++k) {
        ClassStats& s = rep.per_class[k];
        s.tp = cm.counts(k, k);
        s.fn = row_sum[k] - s.tp;
        s.fp = col_sum[k] - s.tp;
        s.tn = total - s.tp - s.fn - s.fp;
        s.sensitivity = ratio_or_zero(s.tp, s.tp + s.fn, s.sensitivity_defined);
        s.specificity = ratio_or_zero(s.tn, s.tn + s.fp, s.specificity_defined);
        s.precision = ratio_or_zero(s.tp, s.tp + s.fp, s.precision_defined);
        const double pr = s.precision + s.sensitivity;
        s.f_score_defined = pr > 0.0;
        s.f_score = s.f_score_defined ? 2.0 * s.precision * s.sensitivity / pr : 0.0;
        sens_sum += s.sensitivity;
        spec_sum += s.specificity;
        prec_sum += s.precision;
    }
    rep.sensitivity = sens_sum / double(c);
    rep.specificity = spec_sum / double(c);
    rep.precision = prec_sum / double(c);
    rep.recall = rep.sensitivity;
    const double pr = rep.precision + rep.recall;
    rep.f_score = pr > 0.0 ? 2.0 * rep.precision * rep.recall / pr : 0.0;
    return rep;
}

}  // namespace detail

inline MetricsReport derive_metrics(const ConfusionMatrix& cm) {
    return detail::derive_from_counts(cm);
}

/// Variant with prediction distributions: `probs` holds one row per scored
/// sample (same population as `cm`), each row a distribution over the C
/// classes; RMSE and MAE are taken over all N*C (prob - onehot) entries.
inline MetricsReport derive_metrics(const ConfusionMatrix& cm, const Matd& probs,
                                    const std::vector<int>& y_true) {
    MetricsReport rep = detail::derive_from_counts(cm);
    const std::size_t c = cm.n_classes();
    if (probs.cols() != c) throw UsageError("derive_metrics: probs width != class count");
    if (probs.rows() != y_true.size())
        throw UsageError("derive_metrics: probs rows != label count");
    if (probs.rows() != cm.total())
        throw UsageError("derive_metrics: probs rows != confusion total");

    double sq = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double p = probs(i, j);
            if (!std::isfinite(p) || p < 0.0)
                throw UsageError("derive_metrics: probs row " + std::to_string(i) +
                                 " is not a distribution");
            row_sum += p;
        }
        if (std::fabs(row_sum - 1.0) > 1e-6)
            throw UsageError("derive_metrics: probs row " + std::to_string(i) +
                             " does not sum to 1");
        const int t = y_true[i];
        if (t < 0 || std::size_t(t) >= c)
            throw UsageError("derive_metrics: label out of range at sample " +
                             std::to_string(i));
        for (std::size_t j = 0; j < c; ++j) {
            const double d = probs(i, j) - (std::size_t(t) == j ? 1.0 : 0.0);
            sq += d * d;
            abs_sum += std::fabs(d);
        }
    }
    const double n_entries = double(probs.rows()) * double(c);
    rep.has_error_terms = true;
    rep.rmse = std::sqrt(sq / n_entries);
    rep.mae = abs_sum / n_entries;
    return rep;
}

/// Published reference scores for this method on its original 30-class
/// aerial benchmark. Attached to evaluation reports for context only;
/// nothing in this artifact asserts against them.
struct ReferenceScores {
    double accuracy = 97.0;
    double sensitivity = 95.0;
    double specificity = 93.0;
    double rmse = 0.8;
    double mae = 0.9;
    double precision = 89.1;
    double recall = 94.03;
    double f_score = 92.61;
};

inline ReferenceScores reference_scores() { return {}; }

}  // namespace cobrnn
