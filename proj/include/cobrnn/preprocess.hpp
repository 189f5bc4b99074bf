#pragma once

// Patch conditioning ahead of feature extraction: a mean-filter denoise pass
// and per-patch intensity normalization. Both preserve shape and keep
// outputs in [0, 1] for inputs in [0, 1].

#include <algorithm>
#include <cmath>
#include <string>

#include "cobrnn/errors.hpp"
#include "cobrnn/mat.hpp"

namespace cobrnn {

enum class NormalizeMode { none, minmax, zscore };

inline const char* to_string(NormalizeMode m) {
    switch (m) {
        case NormalizeMode::none: return "none";
        case NormalizeMode::minmax: return "minmax";
        case NormalizeMode::zscore: return "zscore";
    }
    return "none";
}

inline NormalizeMode normalize_mode_from_string(const std::string& s) {
    if (s == "none") return NormalizeMode::none;
    if (s == "minmax") return NormalizeMode::minmax;
    if (s == "zscore") return NormalizeMode::zscore;
    throw UsageError("preprocess.mode must be one of none|minmax|zscore, got '" + s + "'");
}

struct PreprocessConfig {
    NormalizeMode mode = NormalizeMode::minmax;
    std::size_t denoise_window = 1;  // odd; 1 disables the filter
};

inline void validate(const PreprocessConfig& cfg) {
    if (cfg.denoise_window % 2 == 0)
        throw UsageError("preprocess.denoise_window must be odd");
}

/// Per-patch intensity normalization.
///   minmax: affine map of the observed [min, max] onto [0, 1]
///   zscore: (x - mean) / std, then the observed range remapped onto [0, 1]
/// A constant patch maps to all 0.5 under either mode.
inline Matf normalize_patch(const Matf& p, NormalizeMode mode) {
    if (!all_finite(p)) throw NumericError("normalize_patch: non-finite input");
    if (mode == NormalizeMode::none) return p;

    const auto& v = p.data();
    double mn = v[0], mx = v[0], sum = 0.0;
    for (float x : v) {
        mn = std::min(mn, double(x));
        mx = std::max(mx, double(x));
        sum += double(x);
    }
    Matf out(p.rows(), p.cols());
    if (mx == mn) {
        for (auto& x : out.data()) x = 0.5f;
        return out;
    }
    if (mode == NormalizeMode::minmax) {
        for (std::size_t i = 0; i < v.size(); ++i)
            out.data()[i] = static_cast<float>((double(v[i]) - mn) / (mx - mn));
        return out;
    }
    // zscore
    const double mean = sum / double(v.size());
    double var = 0.0;
    for (float x : v) var += (double(x) - mean) * (double(x) - mean);
    const double sd = std::sqrt(var / double(v.size()));
    double zmin = (mn - mean) / sd, zmax = (mx - mean) / sd;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double z = (double(v[i]) - mean) / sd;
        out.data()[i] = static_cast<float>((z - zmin) / (zmax - zmin));
    }
    return out;
}

/// Mean filter over a window x window neighborhood. Edge handling clamps
/// coordinates into the patch, so every output averages window^2 samples
/// (border pixels counted with multiplicity).
inline Matf denoise(const Matf& p, std::size_t window) {
    if (window % 2 == 0) throw UsageError("denoise: window must be odd");
    if (window > std::min(p.rows(), p.cols()))
        throw UsageError("denoise: window exceeds patch size");
    if (window == 1) return p;

    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(p.rows());
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(p.cols());
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(window / 2);
    Matf out(p.rows(), p.cols());
    for (std::ptrdiff_t r = 0; r < h; ++r)
        for (std::ptrdiff_t c = 0; c < w; ++c) {
            double sum = 0.0;
            for (std::ptrdiff_t dr = -half; dr <= half; ++dr)
                for (std::ptrdiff_t dc = -half; dc <= half; ++dc) {
                    const auto rr = std::clamp<std::ptrdiff_t>(r + dr, 0, h - 1);
                    const auto cc = std::clamp<std::ptrdiff_t>(c + dc, 0, w - 1);
                    sum += double(p(std::size_t(rr), std::size_t(cc)));
                }
            out(std::size_t(r), std::size_t(c)) =
                static_cast<float>(sum / double(window * window));
        }
    return out;
}

/// Full conditioning chain: denoise first, then normalize.
inline Matf preprocess_patch(const Matf& p, const PreprocessConfig& cfg) {
    return normalize_patch(denoise(p, cfg.denoise_window), cfg.mode);
}

}  // namespace cobrnn
