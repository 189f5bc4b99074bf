#pragma once

/*
 * Line-oriented run configuration: `key = value` pairs with `#` comments
 * and dotted keys, one flat namespace covering every module. Unknown and
 * duplicate keys are rejected with their line number, values are checked
 * against the owning module's invariants, and render_config emits the
 * fully resolved configuration in a fixed order so a manifest can be
 * reparsed into an identical RunConfig.
 */

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cobrnn/cuttlefish.hpp"
#include "cobrnn/errors.hpp"
#include "cobrnn/pipeline.hpp"
#include "cobrnn/preprocess.hpp"
#include "cobrnn/sha256.hpp"

namespace cobrnn {

struct RunConfig {
    std::uint64_t seed = 0;
    NormalizeMode preprocess_mode = NormalizeMode::minmax;
    std::size_t denoise_window = 1;
    std::size_t pca_k = 8;
    std::size_t co_pop_size = 40;
    std::size_t co_budget = 60;
    double co_q1 = 1.0;
    double co_q2 = -0.5;
    double co_u1 = 1.0;
    double co_u2 = -0.5;
    double co_frac_g1 = 0.5;
    double co_frac_g2 = 0.25;
    double co_frac_g3 = 0.15;
    double co_frac_g4 = 0.1;
    std::size_t brnn_batch = 8;
    std::size_t brnn_search_epochs = 6;
    std::size_t brnn_final_epochs = 40;
    double brnn_grad_clip = 5.0;
    double brnn_init_scale = 1.0;
    double train_val_ratio = 0.25;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string render_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct ConfigCursor {
    std::size_t line = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw UsageError("config line " + std::to_string(line) + ": " + msg);
    }

    long long to_int(const std::string& key, const std::string& value) const {
        long long out = 0;
        const char* first = value.data();
        const char* last = first + value.size();
        const auto res = std::from_chars(first, last, out);
        if (res.ec != std::errc() || res.ptr != last)
            fail(key + ": expected an integer, got '" + value + "'");
        return out;
    }

    std::uint64_t to_u64(const std::string& key, const std::string& value) const {
        std::uint64_t out = 0;
        const char* first = value.data();
        const char* last = first + value.size();
        const auto res = std::from_chars(first, last, out);
        if (res.ec != std::errc() || res.ptr != last)
            fail(key + ": expected a non-negative integer, got '" + value + "'");
        return out;
    }

    double to_double(const std::string& key, const std::string& value) const {
        double out = 0.0;
        const char* first = value.data();
        const char* last = first + value.size();
        const auto res = std::from_chars(first, last, out);
        if (res.ec != std::errc() || res.ptr != last)
            fail(key + ": expected a number, got '" + value + "'");
        return out;
    }

    std::size_t to_count(const std::string& key, const std::string& value,
                         long long min_allowed) const {
        const long long v = to_int(key, value);
        if (v < min_allowed)
            fail(key + " must be >= " + std::to_string(min_allowed) + ", got " + value);
        return std::size_t(v);
    }
};

}  // namespace detail

/// Parse config text; every violation names its line. All keys are
/// optional and default as in RunConfig.
inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::vector<std::string> seen;
    detail::ConfigCursor cur;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string raw = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++cur.line;

        if (const std::size_t hash = raw.find('#'); hash != std::string::npos)
            raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) cur.fail("expected 'key = value'");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) cur.fail("empty key");
        if (value.empty()) cur.fail(key + ": empty value");
        for (const std::string& s : seen)
            if (s == key) cur.fail("duplicate key '" + key + "'");
        seen.push_back(key);

        if (key == "seed") {
            cfg.seed = cur.to_u64(key, value);
        } else if (key == "preprocess.mode") {
            try {
                cfg.preprocess_mode = normalize_mode_from_string(value);
            } catch (const UsageError& e) {
                cur.fail(e.what());
            }
        } else if (key == "preprocess.denoise_window") {
            cfg.denoise_window = cur.to_count(key, value, 1);
            if (cfg.denoise_window % 2 == 0)
                cur.fail("preprocess.denoise_window must be odd");
        } else if (key == "pca.k") {
            cfg.pca_k = cur.to_count(key, value, 1);
        } else if (key == "co.pop_size") {
            cfg.co_pop_size = cur.to_count(key, value, 4);
        } else if (key == "co.budget") {
            cfg.co_budget = cur.to_count(key, value, 1);
        } else if (key == "co.q1") {
            cfg.co_q1 = cur.to_double(key, value);
        } else if (key == "co.q2") {
            cfg.co_q2 = cur.to_double(key, value);
        } else if (key == "co.u1") {
            cfg.co_u1 = cur.to_double(key, value);
        } else if (key == "co.u2") {
            cfg.co_u2 = cur.to_double(key, value);
        } else if (key == "co.frac_g1") {
            cfg.co_frac_g1 = cur.to_double(key, value);
        } else if (key == "co.frac_g2") {
            cfg.co_frac_g2 = cur.to_double(key, value);
        } else if (key == "co.frac_g3") {
            cfg.co_frac_g3 = cur.to_double(key, value);
        } else if (key == "co.frac_g4") {
            cfg.co_frac_g4 = cur.to_double(key, value);
        } else if (key == "brnn.batch") {
            cfg.brnn_batch = cur.to_count(key, value, 1);
        } else if (key == "brnn.search_epochs") {
            cfg.brnn_search_epochs = cur.to_count(key, value, 1);
        } else if (key == "brnn.final_epochs") {
            cfg.brnn_final_epochs = cur.to_count(key, value, 1);
        } else if (key == "brnn.grad_clip") {
            cfg.brnn_grad_clip = cur.to_double(key, value);
            if (!(cfg.brnn_grad_clip > 0.0)) cur.fail("brnn.grad_clip must be > 0");
        } else if (key == "brnn.init_scale") {
            cfg.brnn_init_scale = cur.to_double(key, value);
            if (!(cfg.brnn_init_scale > 0.0)) cur.fail("brnn.init_scale must be > 0");
        } else if (key == "train.val_ratio") {
            cfg.train_val_ratio = cur.to_double(key, value);
            if (!(cfg.train_val_ratio > 0.0 && cfg.train_val_ratio < 1.0))
                cur.fail("train.val_ratio must be in (0, 1)");
        } else {
            cur.fail("unknown key '" + key + "'");
        }
    }

    const double frac_sum =
        cfg.co_frac_g1 + cfg.co_frac_g2 + cfg.co_frac_g3 + cfg.co_frac_g4;
    if (cfg.co_frac_g1 < 0 || cfg.co_frac_g2 < 0 || cfg.co_frac_g3 < 0 || cfg.co_frac_g4 < 0 ||
        std::fabs(frac_sum - 1.0) > 1e-12)
        throw UsageError("config: co.frac_g1..g4 must be non-negative and sum to 1");
    return cfg;
}

/// Fully resolved configuration in canonical order; reparsing this text
/// reproduces the RunConfig exactly.
inline std::string render_config(const RunConfig& cfg) {
    using detail::render_double;
    std::string out;
    auto kv = [&out](const char* key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    kv("seed", std::to_string(cfg.seed));
    kv("preprocess.mode", to_string(cfg.preprocess_mode));
    kv("preprocess.denoise_window", std::to_string(cfg.denoise_window));
    kv("pca.k", std::to_string(cfg.pca_k));
    kv("co.pop_size", std::to_string(cfg.co_pop_size));
    kv("co.budget", std::to_string(cfg.co_budget));
    kv("co.q1", render_double(cfg.co_q1));
    kv("co.q2", render_double(cfg.co_q2));
    kv("co.u1", render_double(cfg.co_u1));
    kv("co.u2", render_double(cfg.co_u2));
    kv("co.frac_g1", render_double(cfg.co_frac_g1));
    kv("co.frac_g2", render_double(cfg.co_frac_g2));
    kv("co.frac_g3", render_double(cfg.co_frac_g3));
    kv("co.frac_g4", render_double(cfg.co_frac_g4));
    kv("brnn.batch", std::to_string(cfg.brnn_batch));
    kv("brnn.search_epochs", std::to_string(cfg.brnn_search_epochs));
    kv("brnn.final_epochs", std::to_string(cfg.brnn_final_epochs));
    kv("brnn.grad_clip", render_double(cfg.brnn_grad_clip));
    kv("brnn.init_scale", render_double(cfg.brnn_init_scale));
    kv("train.val_ratio", render_double(cfg.train_val_ratio));
    return out;
}

inline std::string config_sha(const RunConfig& cfg) { return sha256_hex(render_config(cfg)); }

inline PipelineConfig to_pipeline_config(const RunConfig& cfg) {
    PipelineConfig p;
    p.preprocess.mode = cfg.preprocess_mode;
    p.preprocess.denoise_window = cfg.denoise_window;
    p.batch = cfg.brnn_batch;
    p.search_epochs = cfg.brnn_search_epochs;
    p.final_epochs = cfg.brnn_final_epochs;
    p.grad_clip = cfg.brnn_grad_clip;
    p.init_scale = cfg.brnn_init_scale;
    p.seed = cfg.seed;
    p.config_sha = config_sha(cfg);
    return p;
}

/// Optimizer settings from the config; dim, bounds, and seed are filled
/// by the caller for its specific search.
inline CuttlefishConfig to_cuttlefish_config(const RunConfig& cfg) {
    CuttlefishConfig co;
    co.pop_size = cfg.co_pop_size;
    co.budget = cfg.co_budget;
    co.q1 = cfg.co_q1;
    co.q2 = cfg.co_q2;
    co.u1 = cfg.co_u1;
    co.u2 = cfg.co_u2;
    co.group_fractions = {cfg.co_frac_g1, cfg.co_frac_g2, cfg.co_frac_g3, cfg.co_frac_g4};
    return co;
}

}  // namespace cobrnn
