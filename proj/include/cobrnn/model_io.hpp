#pragma once

/*
 * JSON serialization for trained models and evaluation reports, plus the
 * atomic file-write helper every output path goes through.
 *
 * Model document layout:
 *   {format:"co-brnn v1", preprocess:{...}, pca:{mean,components,
 *    explained_ratio}, brnn:{config,params}, classes:C,
 *    provenance:{seed,config_sha,evals}}
 * Matrices carry explicit shape headers next to row-major nested arrays.
 * Key order is alphabetical and doubles use the shortest round-trip
 * rendering, so identical inputs serialize byte-identically.
 */

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cobrnn/errors.hpp"
#include "cobrnn/mat.hpp"
#include "cobrnn/metrics.hpp"
#include "cobrnn/pipeline.hpp"

namespace cobrnn {

using nlohmann::json;

namespace detail {

inline json matrix_to_json(const Matd& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(rows)}};
}

inline Matd matrix_from_json(const json& j) {
    const std::size_t rows = j.at("rows").get<std::size_t>();
    const std::size_t cols = j.at("cols").get<std::size_t>();
    const json& values = j.at("values");
    if (!values.is_array() || values.size() != rows)
        throw FormatError("model: matrix row count does not match its shape header");
    Matd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = values[r];
        if (!row.is_array() || row.size() != cols)
            throw FormatError("model: matrix row width does not match its shape header");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
    }
    return m;
}

inline json direction_to_json(const RnnDirection& d) {
    return json{{"w_in", matrix_to_json(d.w_in)},
                {"w_rec", matrix_to_json(d.w_rec)},
                {"bias", d.bias}};
}

inline RnnDirection direction_from_json(const json& j) {
    RnnDirection d;
    d.w_in = matrix_from_json(j.at("w_in"));
    d.w_rec = matrix_from_json(j.at("w_rec"));
    d.bias = j.at("bias").get<std::vector<double>>();
    return d;
}

}  // namespace detail

inline json brnn_config_to_json(const BrnnConfig& c) {
    return json{{"input_dim", c.input_dim},
                {"hidden_dim", c.hidden_dim},
                {"n_classes", c.n_classes},
                {"seq_len", c.seq_len},
                {"learning_rate", c.learning_rate},
                {"l2", c.l2},
                {"epochs", c.epochs},
                {"batch", c.batch},
                {"grad_clip", c.grad_clip},
                {"init_scale", c.init_scale},
                {"seed", c.seed}};
}

inline BrnnConfig brnn_config_from_json(const json& j) {
    BrnnConfig c;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.n_classes = j.at("n_classes").get<std::size_t>();
    c.seq_len = j.at("seq_len").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.l2 = j.at("l2").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch = j.at("batch").get<std::size_t>();
    c.grad_clip = j.at("grad_clip").get<double>();
    c.init_scale = j.at("init_scale").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

inline json model_to_json(const TrainedModel& m) {
    json pca{{"mean", m.pca.mean},
             {"components", detail::matrix_to_json(m.pca.components)},
             {"explained_ratio", m.pca.explained_ratio}};
    json brnn{{"config", brnn_config_to_json(m.brnn_config)},
              {"params",
               json{{"fwd", detail::direction_to_json(m.brnn.fwd)},
                    {"bwd", detail::direction_to_json(m.brnn.bwd)},
                    {"w_out", detail::matrix_to_json(m.brnn.w_out)},
                    {"b_out", m.brnn.b_out}}}};
    json preprocess{{"mode", to_string(m.preprocess.mode)},
                    {"denoise_window", m.preprocess.denoise_window}};
    return json{{"format", "co-brnn v1"},
                {"preprocess", std::move(preprocess)},
                {"pca", std::move(pca)},
                {"brnn", std::move(brnn)},
                {"classes", m.n_classes},
                {"provenance",
                 json{{"seed", m.provenance.seed},
                      {"config_sha", m.provenance.config_sha},
                      {"evals", m.provenance.evals}}}};
}

inline TrainedModel model_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "co-brnn v1")
            throw FormatError("model: unsupported format tag");
        TrainedModel m;
        const json& pp = j.at("preprocess");
        m.preprocess.mode = normalize_mode_from_string(pp.at("mode").get<std::string>());
        m.preprocess.denoise_window = pp.at("denoise_window").get<std::size_t>();
        const json& pca = j.at("pca");
        m.pca.mean = pca.at("mean").get<std::vector<double>>();
        m.pca.components = detail::matrix_from_json(pca.at("components"));
        m.pca.explained_ratio = pca.at("explained_ratio").get<std::vector<double>>();
        const json& brnn = j.at("brnn");
        m.brnn_config = brnn_config_from_json(brnn.at("config"));
        const json& params = brnn.at("params");
        m.brnn.fwd = detail::direction_from_json(params.at("fwd"));
        m.brnn.bwd = detail::direction_from_json(params.at("bwd"));
        m.brnn.w_out = detail::matrix_from_json(params.at("w_out"));
        m.brnn.b_out = params.at("b_out").get<std::vector<double>>();
        m.n_classes = j.at("classes").get<int>();
        const json& prov = j.at("provenance");
        m.provenance.seed = prov.at("seed").get<std::uint64_t>();
        m.provenance.config_sha = prov.at("config_sha").get<std::string>();
        m.provenance.evals = prov.at("evals").get<std::size_t>();
        validate(m);
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("model: ") + e.what());
    } catch (const UsageError& e) {
        throw FormatError(std::string("model: ") + e.what());
    }
}

inline json reference_scores_to_json() {
    const ReferenceScores r = reference_scores();
    return json{{"accuracy", r.accuracy},   {"sensitivity", r.sensitivity},
                {"specificity", r.specificity}, {"rmse", r.rmse},
                {"mae", r.mae},             {"precision", r.precision},
                {"recall", r.recall},       {"f_score", r.f_score}};
}

inline json report_to_json(const MetricsReport& rep) {
    json confusion = json::array();
    for (std::size_t r = 0; r < rep.confusion.counts.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < rep.confusion.counts.cols(); ++c)
            row.push_back(rep.confusion.counts(r, c));
        confusion.push_back(std::move(row));
    }
    json per_class = json::array();
    for (std::size_t k = 0; k < rep.per_class.size(); ++k) {
        const ClassStats& s = rep.per_class[k];
        per_class.push_back(json{{"class", k},
                                 {"tp", s.tp},
                                 {"fp", s.fp},
                                 {"fn", s.fn},
                                 {"tn", s.tn},
                                 {"sensitivity", s.sensitivity},
                                 {"sensitivity_defined", s.sensitivity_defined},
                                 {"specificity", s.specificity},
                                 {"specificity_defined", s.specificity_defined},
                                 {"precision", s.precision},
                                 {"precision_defined", s.precision_defined},
                                 {"f_score", s.f_score},
                                 {"f_score_defined", s.f_score_defined}});
    }
    json j{{"format", "co-brnn report v1"},
           {"accuracy", rep.accuracy},
           {"sensitivity", rep.sensitivity},
           {"specificity", rep.specificity},
           {"precision", rep.precision},
           {"recall", rep.recall},
           {"f_score", rep.f_score},
           {"confusion", std::move(confusion)},
           {"per_class", std::move(per_class)},
           {"paper_reference", reference_scores_to_json()}};
    if (rep.has_error_terms) {
        j["rmse"] = rep.rmse;
        j["mae"] = rep.mae;
    }
    return j;
}

/// Write the full content to a temporary sibling, then rename into place,
/// so the destination is never observed half-written.
inline void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open for writing: " + tmp);
        out.write(content.data(), std::streamsize(content.size()));
        out.flush();
        if (!out) throw FormatError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw FormatError("cannot move output into place: " + path);
    }
}

inline json parse_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void save_model_file(const std::string& path, const TrainedModel& m,
                            const json* manifest = nullptr) {
    json j = model_to_json(m);
    if (manifest) j["manifest"] = *manifest;
    write_text_atomic(path, j.dump(2) + "\n");
}

inline TrainedModel load_model_file(const std::string& path) {
    return model_from_json(parse_json_file(path));
}

inline void save_report_file(const std::string& path, const MetricsReport& rep,
                             const json* manifest = nullptr) {
    json j = report_to_json(rep);
    if (manifest) j["manifest"] = *manifest;
    write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace cobrnn
