#pragma once

/*
 * Labeled scene patches: synthetic generation, train/test splitting and the
 * line-oriented "scenes v1" file format.
 *
 * Pixels are stored as float so the 9-significant-digit decimal rendering
 * used by the file format round-trips every in-memory value exactly.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cobrnn/errors.hpp"
#include "cobrnn/mat.hpp"
#include "cobrnn/rng.hpp"

namespace cobrnn {

/// One labeled intensity patch. Pixels live in [0, 1].
struct Sample {
    int label = 0;
    Matf pixels;
};

struct Dataset {
    std::vector<Sample> samples;
    int n_classes = 0;
    std::size_t height = 0;
    std::size_t width = 0;
};

struct SplitSpec {
    double train_ratio = 0.5;
    bool stratified = true;
    std::uint64_t seed = 0;
};

/// Geometry of the AID benchmark, kept as a documented preset for configs
/// and reports. The images themselves are not part of this project; all
/// tests run on synthetic patches.
struct AidPreset {
    static constexpr int n_classes = 30;
    static constexpr std::size_t height = 600;
    static constexpr std::size_t width = 600;
    static constexpr std::size_t n_images = 10000;
    static constexpr double train_ratios[2] = {0.2, 0.5};
};

namespace detail {

/// Deterministic texture value for class `family` at pixel (r, c).
/// Families 0-6 are seed-independent; family 7 (salt) draws from `rng`.
inline double texture_value(int family, std::size_t r, std::size_t c,
                            std::size_t height, std::size_t width,
                            Xoshiro256pp& rng) {
    constexpr double hi = 0.9, lo = 0.1;
    switch (family) {
        case 0:  // horizontal stripes, period 2
            return (r % 2 == 0) ? hi : lo;
        case 1:  // vertical stripes, period 2
            return (c % 2 == 0) ? hi : lo;
        case 2:  // checkerboard
            return ((r + c) % 2 == 0) ? hi : lo;
        case 3: {  // radial gradient, bright center
            const double cr = (double(height) - 1.0) / 2.0;
            const double cc = (double(width) - 1.0) / 2.0;
            const double d = std::sqrt((double(r) - cr) * (double(r) - cr) +
                                       (double(c) - cc) * (double(c) - cc));
            const double dmax = std::sqrt(cr * cr + cc * cc);
            return 1.0 - d / dmax;
        }
        case 4:  // diagonal stripes, width 2, period 4
            return ((r + c) % 4 < 2) ? hi : lo;
        case 5: {  // centered Gaussian blob
            const double cr = (double(height) - 1.0) / 2.0;
            const double cc = (double(width) - 1.0) / 2.0;
            const double sigma = double(std::min(height, width)) / 4.0;
            const double d2 = (double(r) - cr) * (double(r) - cr) +
                              (double(c) - cc) * (double(c) - cc);
            return std::exp(-d2 / (2.0 * sigma * sigma));
        }
        case 6:  // left-to-right ramp
            return double(c) / (double(width) - 1.0);
        case 7:  // salt field: sparse bright dots on mid gray
            return (rng.uniform01() < 0.1) ? 1.0 : 0.5;
        default:
            throw UsageError("texture family out of range");
    }
}

}  // namespace detail

/// Synthesize a labeled dataset of n_classes * per_class patches. Class k
/// uses texture family k, optionally corrupted by Gaussian noise of std
/// noise_sigma, clamped to [0, 1]. Deterministic for a fixed seed.
inline Dataset generate_synthetic(int n_classes, std::size_t per_class,
                                  std::size_t height, std::size_t width,
                                  double noise_sigma, std::uint64_t seed) {
    if (n_classes < 2 || n_classes > 8)
        throw UsageError("generate_synthetic: n_classes must be in [2, 8]");
    if (height < 4 || width < 4)
        throw UsageError("generate_synthetic: height and width must be >= 4");
    if (per_class == 0)
        throw UsageError("generate_synthetic: per_class must be positive");
    if (!(noise_sigma >= 0.0))
        throw UsageError("generate_synthetic: noise_sigma must be >= 0");

    Xoshiro256pp rng = derive_stream(seed, "dataset.generate");
    Dataset ds;
    ds.n_classes = n_classes;
    ds.height = height;
    ds.width = width;
    ds.samples.reserve(std::size_t(n_classes) * per_class);
    for (int k = 0; k < n_classes; ++k) {
        for (std::size_t s = 0; s < per_class; ++s) {
            Sample sample;
            sample.label = k;
            sample.pixels = Matf(height, width);
            for (std::size_t r = 0; r < height; ++r)
                for (std::size_t c = 0; c < width; ++c) {
                    double v = detail::texture_value(k, r, c, height, width, rng);
                    if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
                    sample.pixels(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            ds.samples.push_back(std::move(sample));
        }
    }
    return ds;
}

/// Split into disjoint train/test parts. Stratified: per class,
/// floor(train_ratio * count) samples go to train, the rest to test;
/// shuffle order is driven solely by spec.seed.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    if (!(spec.train_ratio > 0.0 && spec.train_ratio < 1.0))
        throw UsageError("split: train_ratio must lie in (0, 1)");
    if (ds.samples.empty()) throw UsageError("split: dataset is empty");

    Xoshiro256pp rng = derive_stream(spec.seed, "dataset.split");
    auto shuffle = [&rng](std::vector<std::size_t>& idx) {
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.below(i)]);
    };

    std::vector<std::size_t> train_idx, test_idx;
    if (spec.stratified) {
        for (int k = 0; k < ds.n_classes; ++k) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < ds.samples.size(); ++i)
                if (ds.samples[i].label == k) idx.push_back(i);
            if (idx.empty()) continue;
            shuffle(idx);
            const auto n_train =
                static_cast<std::size_t>(std::floor(spec.train_ratio * double(idx.size())));
            if (n_train == 0)
                throw UsageError("split: class " + std::to_string(k) +
                                 " has no train samples at this ratio");
            train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + n_train);
            test_idx.insert(test_idx.end(), idx.begin() + n_train, idx.end());
        }
    } else {
        std::vector<std::size_t> idx(ds.samples.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        shuffle(idx);
        const auto n_train =
            static_cast<std::size_t>(std::floor(spec.train_ratio * double(idx.size())));
        train_idx.assign(idx.begin(), idx.begin() + n_train);
        test_idx.assign(idx.begin() + n_train, idx.end());
    }
    if (train_idx.empty() || test_idx.empty())
        throw UsageError("split: both parts must be non-empty");

    auto take = [&ds](const std::vector<std::size_t>& idx) {
        Dataset part;
        part.n_classes = ds.n_classes;
        part.height = ds.height;
        part.width = ds.width;
        part.samples.reserve(idx.size());
        for (std::size_t i : idx) part.samples.push_back(ds.samples[i]);
        return part;
    };
    return {take(train_idx), take(test_idx)};
}

/// Concatenate two datasets with identical geometry.
inline Dataset concat(const Dataset& a, const Dataset& b) {
    if (a.n_classes != b.n_classes || a.height != b.height || a.width != b.width)
        throw UsageError("concat: dataset geometries differ");
    Dataset out = a;
    out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
    return out;
}

namespace detail {

inline std::string render_pixel(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", double(v));
    return buf;
}

struct LineReader {
    std::istream& in;
    std::size_t line_no = 0;

    /// Next non-comment line; false at EOF.
    bool next(std::string& out) {
        while (std::getline(in, out)) {
            ++line_no;
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (!out.empty() && out[0] == '#') continue;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError("scenes v1: line " + std::to_string(line_no) + ": " + what);
    }
};

}  // namespace detail

/// Write a dataset in the "scenes v1" text format. Lines starting with '#'
/// are comments; `comment_lines` are embedded verbatim after the magic line.
inline void save_scenes(const Dataset& ds, std::ostream& out,
                        const std::vector<std::string>& comment_lines = {}) {
    out << "scenes v1\n";
    for (const auto& c : comment_lines) out << "# " << c << "\n";
    out << "samples=" << ds.samples.size() << " height=" << ds.height
        << " width=" << ds.width << " classes=" << ds.n_classes << "\n";
    for (const auto& s : ds.samples) {
        out << "label=" << s.label << "\n";
        for (std::size_t r = 0; r < ds.height; ++r) {
            for (std::size_t c = 0; c < ds.width; ++c) {
                if (c) out << ' ';
                out << detail::render_pixel(s.pixels(r, c));
            }
            out << "\n";
        }
    }
}

inline Dataset load_scenes(std::istream& in) {
    detail::LineReader reader{in};
    std::string line;

    if (!reader.next(line)) reader.fail("missing magic line");
    if (line != "scenes v1") reader.fail("expected 'scenes v1', got '" + line + "'");

    if (!reader.next(line)) reader.fail("missing header line");
    std::size_t n_samples = 0;
    Dataset ds;
    {
        long long n = -1, h = -1, w = -1, c = -1;
        if (std::sscanf(line.c_str(), "samples=%lld height=%lld width=%lld classes=%lld",
                        &n, &h, &w, &c) != 4)
            reader.fail("malformed header '" + line + "'");
        if (n < 0 || h <= 0 || w <= 0 || c <= 0)
            reader.fail("header fields must be positive");
        n_samples = static_cast<std::size_t>(n);
        ds.height = static_cast<std::size_t>(h);
        ds.width = static_cast<std::size_t>(w);
        ds.n_classes = static_cast<int>(c);
    }

    ds.samples.reserve(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
        if (!reader.next(line))
            reader.fail("file ends before sample " + std::to_string(s) + " of " +
                        std::to_string(n_samples));
        long long label = -1;
        if (std::sscanf(line.c_str(), "label=%lld", &label) != 1)
            reader.fail("expected 'label=<k>', got '" + line + "'");
        if (label < 0 || label >= ds.n_classes)
            reader.fail("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(ds.n_classes) + ")");
        Sample sample;
        sample.label = static_cast<int>(label);
        sample.pixels = Matf(ds.height, ds.width);
        for (std::size_t r = 0; r < ds.height; ++r) {
            if (!reader.next(line)) reader.fail("file ends inside a pixel block");
            const char* p = line.c_str();
            const char* end = p + line.size();
            for (std::size_t c = 0; c < ds.width; ++c) {
                while (p < end && *p == ' ') ++p;
                float v = 0.0f;
                auto [next, ec] = std::from_chars(p, end, v);
                if (ec != std::errc{})
                    reader.fail("expected " + std::to_string(ds.width) +
                                " pixel values, failed at column " + std::to_string(c));
                if (!(v >= 0.0f && v <= 1.0f))
                    reader.fail("pixel value " + detail::render_pixel(v) +
                                " outside range [0,1]");
                sample.pixels(r, c) = v;
                p = next;
            }
            while (p < end && *p == ' ') ++p;
            if (p != end) reader.fail("trailing characters after pixel row");
        }
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

inline void save_scenes_file(const Dataset& ds, const std::string& path,
                             const std::vector<std::string>& comment_lines = {}) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    save_scenes(ds, out, comment_lines);
    if (!out) throw FormatError("write failed for '" + path + "'");
}

inline Dataset load_scenes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    return load_scenes(in);
}

}  // namespace cobrnn
