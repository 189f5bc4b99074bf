#pragma once

/*
 * Principal component analysis by cyclic Jacobi rotation of the sample
 * covariance matrix. Dependency-free and deterministic: fixed sweep order,
 * fixed sign convention, stable eigenvalue ordering, so the same input
 * always produces the bit-identical model.
 */

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "cobrnn/errors.hpp"
#include "cobrnn/mat.hpp"

namespace cobrnn {

struct PcaModel {
    std::vector<double> mean;            // column means, length D
    Matd components;                     // k x D, rows orthonormal
    std::vector<double> explained_ratio; // k fractions of total variance
};

namespace detail {

/// Eigen-decomposition of a symmetric matrix by cyclic-by-rows Jacobi
/// sweeps. Returns eigenvalues in `values` and eigenvectors as columns of
/// `vectors`, unsorted. Convergence: largest off-diagonal magnitude below
/// 1e-12 relative to the Frobenius norm, at most 100 sweeps.
inline void jacobi_eigen_symmetric(Matd a, std::vector<double>& values, Matd& vectors) {
    const std::size_t n = a.rows();
    vectors = Matd(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vectors(i, i) = 1.0;

    double fro = 0.0;
    for (double x : a.data()) fro += x * x;
    const double tol = 1e-12 * std::max(1e-300, std::sqrt(fro));

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off_max = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off_max = std::max(off_max, std::abs(a(p, q)));
        if (off_max <= tol) break;

        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= tol) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                                     : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = vectors(i, p), viq = vectors(i, q);
                    vectors(i, p) = c * vip - s * viq;
                    vectors(i, q) = s * vip + c * viq;
                }
            }
    }
    values.resize(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
}

/// Flip a direction vector so its largest-magnitude entry is non-negative
/// (ties resolved toward the lowest index).
inline void apply_sign_convention(double* v, std::size_t n) {
    std::size_t arg = 0;
    double best = std::abs(v[0]);
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            arg = i;
        }
    if (v[arg] < 0.0)
        for (std::size_t i = 0; i < n; ++i) v[i] = -v[i];
}

}  // namespace detail

/// Fit a k-component PCA on N x D data. Covariance uses divisor N-1;
/// explained ratios are eigenvalue shares of the total variance.
inline PcaModel pca_fit(const Matd& rows, std::size_t k) {
    const std::size_t n = rows.rows(), d = rows.cols();
    if (n < 2) throw UsageError("pca_fit: need at least 2 rows");
    if (k < 1 || k > std::min(n - 1, d))
        throw UsageError("pca_fit: k must lie in [1, min(N-1, D)]");
    if (!all_finite(rows)) throw NumericError("pca_fit: non-finite input");

    PcaModel m;
    m.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) m.mean[j] += rows(i, j);
    for (double& x : m.mean) x /= double(n);

    Matd cov(d, d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = rows(i, a) - m.mean[a];
            for (std::size_t b = a; b < d; ++b)
                cov(a, b) += xa * (rows(i, b) - m.mean[b]);
        }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) /= double(n - 1);
            cov(b, a) = cov(a, b);
        }

    std::vector<double> values;
    Matd vectors;
    detail::jacobi_eigen_symmetric(cov, values, vectors);

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });

    double total = 0.0;
    for (double v : values) total += std::max(v, 0.0);

    m.components = Matd(k, d);
    m.explained_ratio.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t src = order[i];
        for (std::size_t j = 0; j < d; ++j) m.components(i, j) = vectors(j, src);
        detail::apply_sign_convention(m.components.row_ptr(i), d);
        m.explained_ratio[i] = (total > 0.0) ? std::max(values[src], 0.0) / total : 0.0;
    }
    return m;
}

/// Project rows onto the principal directions: (rows - mean) * components^T.
inline Matd pca_transform(const PcaModel& m, const Matd& rows) {
    const std::size_t d = m.mean.size(), k = m.components.rows();
    if (rows.cols() != d) throw UsageError("pca_transform: row width mismatch");
    Matd out(rows.rows(), k, 0.0);
    for (std::size_t i = 0; i < rows.rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c)
                acc += (rows(i, c) - m.mean[c]) * m.components(j, c);
            out(i, j) = acc;
        }
    return out;
}

/// Reconstruct from scores: scores * components + mean.
inline Matd pca_inverse(const PcaModel& m, const Matd& scores) {
    const std::size_t d = m.mean.size(), k = m.components.rows();
    if (scores.cols() != k) throw UsageError("pca_inverse: score width mismatch");
    Matd out(scores.rows(), d);
    for (std::size_t i = 0; i < scores.rows(); ++i)
        for (std::size_t c = 0; c < d; ++c) {
            double acc = m.mean[c];
            for (std::size_t j = 0; j < k; ++j) acc += scores(i, j) * m.components(j, c);
            out(i, c) = acc;
        }
    return out;
}

/// Keep only the top k components of a fitted model.
inline PcaModel pca_truncate(const PcaModel& m, std::size_t k) {
    if (k < 1 || k > m.components.rows()) throw UsageError("pca_truncate: bad k");
    PcaModel out;
    out.mean = m.mean;
    out.components = Matd(k, m.components.cols());
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < m.components.cols(); ++j)
            out.components(i, j) = m.components(i, j);
    out.explained_ratio.assign(m.explained_ratio.begin(), m.explained_ratio.begin() + k);
    return out;
}

}  // namespace cobrnn
