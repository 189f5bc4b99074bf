// cobrnn: scene-classification pipeline driver.
//
// Subcommands: generate, pca, optimize, train, evaluate. Every output is
// written atomically and embeds a manifest (the fully resolved config and
// all arguments) sufficient to reproduce the file byte-for-byte.
// Exit codes: 0 success, 1 usage, 2 input/format, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cobrnn/config.hpp"
#include "cobrnn/dataset.hpp"
#include "cobrnn/errors.hpp"
#include "cobrnn/model_io.hpp"
#include "cobrnn/objectives.hpp"
#include "cobrnn/pca.hpp"
#include "cobrnn/pipeline.hpp"

namespace {

using namespace cobrnn;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig load_run_config(const std::string& path) {
    if (path.empty()) return RunConfig{};
    return parse_config(read_text_file(path));
}

json manifest_json(const std::string& command, const RunConfig& cfg,
                   const std::vector<std::pair<std::string, std::string>>& args) {
    json a = json::object();
    for (const auto& [k, v] : args) a[k] = v;
    return json{{"command", command},
                {"args", std::move(a)},
                {"config", render_config(cfg)},
                {"config_sha", config_sha(cfg)}};
}

/// The same manifest as '#'-prefixed comment lines for text outputs.
std::vector<std::string> manifest_lines(const std::string& command, const RunConfig& cfg,
                                        const std::vector<std::pair<std::string, std::string>>& args) {
    std::vector<std::string> lines;
    lines.push_back("command = " + command);
    for (const auto& [k, v] : args) lines.push_back(k + " = " + v);
    lines.push_back("config_sha = " + config_sha(cfg));
    std::istringstream cfg_text(render_config(cfg));
    for (std::string line; std::getline(cfg_text, line);) lines.push_back("cfg " + line);
    return lines;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

int cmd_generate(int classes, std::size_t per_class, std::size_t height, std::size_t width,
                 double noise, std::uint64_t seed, const std::string& out_path) {
    const Dataset ds = generate_synthetic(classes, per_class, height, width, noise, seed);
    RunConfig cfg;
    cfg.seed = seed;
    const auto lines = manifest_lines(
        "generate", cfg,
        {{"classes", std::to_string(classes)},
         {"per_class", std::to_string(per_class)},
         {"height", std::to_string(height)},
         {"width", std::to_string(width)},
         {"noise", detail::render_double(noise)},
         {"seed", std::to_string(seed)}});
    std::ostringstream body;
    save_scenes(ds, body, lines);
    write_text_atomic(out_path, body.str());
    std::printf("generate: %zu samples, %d classes, %zux%zu -> %s\n", ds.samples.size(),
                ds.n_classes, ds.height, ds.width, out_path.c_str());
    return 0;
}

int cmd_pca(const std::string& in_path, const std::string& out_path, const RunConfig& cfg) {
    const Dataset ds = load_scenes_file(in_path);
    std::vector<Matf> patches;
    patches.reserve(ds.samples.size());
    PreprocessConfig pp{cfg.preprocess_mode, cfg.denoise_window};
    for (const Sample& s : ds.samples) patches.push_back(preprocess_patch(s.pixels, pp));

    Matd rows(patches.size() * ds.height, ds.width);
    for (std::size_t i = 0; i < patches.size(); ++i)
        for (std::size_t r = 0; r < ds.height; ++r)
            for (std::size_t c = 0; c < ds.width; ++c)
                rows(i * ds.height + r, c) = double(patches[i](r, c));

    const PcaModel model = pca_fit(rows, cfg.pca_k);
    double explained = 0.0;
    for (double e : model.explained_ratio) explained += e;

    json j{{"format", "co-brnn pca v1"},
           {"pca",
            json{{"mean", model.mean},
                 {"components", cobrnn::detail::matrix_to_json(model.components)},
                 {"explained_ratio", model.explained_ratio}}},
           {"manifest", manifest_json("pca", cfg, {{"in", in_path}})}};
    write_text_atomic(out_path, j.dump(2) + "\n");
    std::printf("pca: %zu components on %zu rows, explained %s -> %s\n",
                model.components.rows(), rows.rows(), fmt_double(explained).c_str(),
                out_path.c_str());
    return 0;
}

int cmd_optimize(const std::string& function, std::size_t dim, std::size_t budget,
                 const RunConfig& cfg, const std::string& csv_path,
                 const std::string& json_path) {
    CuttlefishConfig co = to_cuttlefish_config(cfg);
    co.dim = dim;
    co.lower.assign(dim, -5.0);
    co.upper.assign(dim, 5.0);
    co.budget = budget;
    co.seed = derive_seed(cfg.seed, "co.benchmark");
    validate(co);

    const auto obj = benchmark_objective(function);
    const OptimizeResult res = cf_optimize(co, obj);

    const std::vector<std::pair<std::string, std::string>> args{
        {"function", function},
        {"dim", std::to_string(dim)},
        {"budget", std::to_string(budget)}};

    std::ostringstream csv;
    for (const std::string& line : manifest_lines("optimize", cfg, args))
        csv << "# " << line << "\n";
    csv << "iter,best_fitness\n";
    for (std::size_t i = 0; i < res.curve.size(); ++i)
        csv << i << "," << detail::render_double(res.curve[i]) << "\n";
    write_text_atomic(csv_path, csv.str());

    json best{{"function", function},
              {"dim", dim},
              {"budget", budget},
              {"best_fitness", res.best_fitness},
              {"best_point", res.best_point},
              {"manifest", manifest_json("optimize", cfg, args)}};
    write_text_atomic(json_path, best.dump(2) + "\n");

    std::printf("optimize: %s d=%zu best %s after %zu evals -> %s, %s\n", function.c_str(),
                dim, fmt_double(res.best_fitness).c_str(), budget, csv_path.c_str(),
                json_path.c_str());
    return 0;
}

int cmd_train(const std::string& train_path, const RunConfig& cfg,
              const std::string& model_path, const std::string& report_path,
              const std::string& curve_path) {
    const Dataset full = load_scenes_file(train_path);

    SplitSpec spec;
    spec.train_ratio = 1.0 - cfg.train_val_ratio;
    spec.stratified = true;
    spec.seed = derive_seed(cfg.seed, "train.valsplit");
    const auto [train_part, val_part] = split(full, spec);

    const PipelineConfig pipe = to_pipeline_config(cfg);
    CuttlefishConfig co = to_cuttlefish_config(cfg);
    const TrainOutcome outcome = train_co_brnn(train_part, val_part, co, pipe);
    const MetricsReport report = evaluate_model(outcome.model, full);

    const std::vector<std::pair<std::string, std::string>> args{{"train", train_path}};
    const json manifest = manifest_json("train", cfg, args);
    save_model_file(model_path, outcome.model, &manifest);
    save_report_file(report_path, report, &manifest);
    if (!curve_path.empty()) {
        std::ostringstream csv;
        for (const std::string& line : manifest_lines("train", cfg, args))
            csv << "# " << line << "\n";
        csv << "iter,best_fitness\n";
        for (std::size_t i = 0; i < outcome.search.curve.size(); ++i)
            csv << i << "," << detail::render_double(outcome.search.curve[i]) << "\n";
        write_text_atomic(curve_path, csv.str());
    }

    std::printf(
        "train: best lr=%s hidden=%zu k=%zu l2=%s; train-set accuracy %s -> %s, %s\n",
        fmt_double(outcome.best.learning_rate).c_str(), outcome.best.hidden_dim,
        outcome.best.pca_k, fmt_double(outcome.best.l2).c_str(),
        fmt_double(report.accuracy).c_str(), model_path.c_str(), report_path.c_str());
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& test_path,
                 const std::string& report_path) {
    const TrainedModel model = load_model_file(model_path);
    const Dataset test = load_scenes_file(test_path);
    const MetricsReport report = evaluate_model(model, test);

    json manifest{{"command", "evaluate"},
                  {"args", json{{"model", model_path}, {"test", test_path}}},
                  {"model_config_sha", model.provenance.config_sha}};
    save_report_file(report_path, report, &manifest);

    std::printf("evaluate: accuracy %s on %zu samples -> %s\n",
                fmt_double(report.accuracy).c_str(), test.samples.size(),
                report_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cuttlefish-optimized bidirectional recurrent scene classifier"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a labeled scenes file");
    int g_classes = 4;
    std::size_t g_per_class = 50, g_height = 16, g_width = 16;
    double g_noise = 0.1;
    std::uint64_t g_seed = 0;
    std::string g_out;
    gen->add_option("--classes", g_classes, "number of classes (2..8)")->required();
    gen->add_option("--per-class", g_per_class, "samples per class")->required();
    gen->add_option("--height", g_height, "patch height");
    gen->add_option("--width", g_width, "patch width");
    gen->add_option("--noise", g_noise, "additive noise sigma");
    gen->add_option("--seed", g_seed, "generation seed");
    gen->add_option("--out", g_out, "output scenes file")->required();

    // pca
    auto* pca_cmd = app.add_subcommand("pca", "fit a row-wise projection on a scenes file");
    std::string p_in, p_out, p_config;
    std::size_t p_k = 0;
    std::uint64_t p_seed = 0;
    bool p_seed_set = false;
    pca_cmd->add_option("--in", p_in, "input scenes file")->required();
    pca_cmd->add_option("--out", p_out, "output projection JSON")->required();
    pca_cmd->add_option("--k", p_k, "number of components (overrides pca.k)");
    pca_cmd->add_option("--config", p_config, "config file");
    pca_cmd->add_option("--seed", p_seed, "seed override")->each([&](const std::string&) {
        p_seed_set = true;
    });

    // optimize
    auto* opt = app.add_subcommand("optimize", "run the optimizer on a benchmark function");
    std::string o_function, o_config, o_csv = "curve.csv", o_json = "best.json";
    std::size_t o_dim = 0, o_budget = 0, o_pop = 0;
    std::uint64_t o_seed = 0;
    bool o_seed_set = false;
    opt->add_option("--function", o_function, "sphere, rosenbrock, or rastrigin")->required();
    opt->add_option("--dim", o_dim, "dimension")->required();
    opt->add_option("--budget", o_budget, "evaluation budget")->required();
    opt->add_option("--seed", o_seed, "seed override")->each([&](const std::string&) {
        o_seed_set = true;
    });
    opt->add_option("--pop", o_pop, "population size (overrides co.pop_size)");
    opt->add_option("--config", o_config, "config file");
    opt->add_option("--out-csv", o_csv, "convergence curve CSV path");
    opt->add_option("--out-json", o_json, "best-point JSON path");

    // train
    auto* tr = app.add_subcommand("train", "search hyperparameters and train a model");
    std::string t_train, t_config, t_model, t_report, t_curve;
    std::uint64_t t_seed = 0;
    bool t_seed_set = false;
    tr->add_option("--train", t_train, "training scenes file")->required();
    tr->add_option("--config", t_config, "config file");
    tr->add_option("--seed", t_seed, "seed override")->each([&](const std::string&) {
        t_seed_set = true;
    });
    tr->add_option("--out-model", t_model, "output model JSON")->required();
    tr->add_option("--out-report", t_report, "output report JSON")->required();
    tr->add_option("--out-curve", t_curve, "optional search curve CSV");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score a trained model on a scenes file");
    std::string e_model, e_test, e_report;
    ev->add_option("--model", e_model, "model JSON")->required();
    ev->add_option("--test", e_test, "test scenes file")->required();
    ev->add_option("--out-report", e_report, "output report JSON")->required();

    try {
        app.parse(argc, argv);

        if (gen->parsed())
            return cmd_generate(g_classes, g_per_class, g_height, g_width, g_noise, g_seed,
                                g_out);
        if (pca_cmd->parsed()) {
            RunConfig cfg = load_run_config(p_config);
            if (p_k > 0) cfg.pca_k = p_k;
            if (p_seed_set) cfg.seed = p_seed;
            return cmd_pca(p_in, p_out, cfg);
        }
        if (opt->parsed()) {
            RunConfig cfg = load_run_config(o_config);
            if (o_pop > 0) cfg.co_pop_size = o_pop;
            if (o_seed_set) cfg.seed = o_seed;
            return cmd_optimize(o_function, o_dim, o_budget, cfg, o_csv, o_json);
        }
        if (tr->parsed()) {
            RunConfig cfg = load_run_config(t_config);
            if (t_seed_set) cfg.seed = t_seed;
            return cmd_train(t_train, cfg, t_model, t_report, t_curve);
        }
        if (ev->parsed()) return cmd_evaluate(e_model, e_test, e_report);

        std::fprintf(stderr, "error: no subcommand\n");
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
