#include "colorassoc/color.hpp"
#include "colorassoc/error.hpp"
#include "colorassoc/io.hpp"
#include "colorassoc/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <array>
#include <cmath>
#include <iostream>
#include <optional>

using namespace colorassoc;

namespace {

// Flags that override the config file when given.
struct Overrides {
    std::string corpus;
    std::string concepts;
    std::string colors;
    std::string stage;
    std::size_t max_images = 0;
    std::size_t k = 0;
    int lambda_count = 0;
    double lambda_ratio = 0;
    int segmentation_iterations = 0;
    std::string category_model;
    std::string ratings;
    std::string provenance;
};

double clean(double v) { return v == 0.0 ? 0.0 : v; }

void print_color(const LabColor& lab) {
    const LchColor lch = lab_to_lch(lab);
    fmt::print("Lab {:.4f} {:.4f} {:.4f}\n", clean(lab.L), clean(lab.a), clean(lab.b));
    fmt::print("Lch {:.4f} {:.4f} {:.4f}\n", clean(lch.L), clean(lch.c), clean(lch.h));
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("colorassoc"));
    spdlog::set_pattern("%l: %v");

    CLI::App app{"Estimate color-concept associations from image corpora"};
    app.require_subcommand(1);

    std::string config_file;
    int jobs = 1;
    std::string output;
    app.add_option("--config", config_file, "key = value settings file")->check(CLI::ExistingFile);
    auto* jobs_opt = app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    auto* output_opt = app.add_option("--output", output, "output directory");

    Overrides ov;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> setters;
    auto add_common = [&](CLI::App* sub, bool corpus, bool model_params, bool ratings) {
        if (corpus) {
            setters.push_back({sub->add_option("--corpus", ov.corpus, "corpus root (one folder per concept)"),
                               [&](RunConfig& c) { c.corpus = ov.corpus; }});
            setters.push_back({sub->add_option("--concepts", ov.concepts, "comma-separated concept subset"),
                               [&](RunConfig& c) { c.concepts = split_list(ov.concepts); }});
            setters.push_back({sub->add_option("--max-images", ov.max_images, "images per concept"),
                               [&](RunConfig& c) { c.max_images = ov.max_images; }});
            setters.push_back({sub->add_option("--provenance", ov.provenance, "top_search|photo|cartoon|custom"),
                               [&](RunConfig& c) { apply_config(c, {{"provenance", ov.provenance}}); }});
            setters.push_back({sub->add_option("--category-model", ov.category_model, "rules CSV or compiled cache"),
                               [&](RunConfig& c) { c.category_model = ov.category_model; }});
            setters.push_back(
                {sub->add_option("--segmentation-iterations", ov.segmentation_iterations, "active contour steps"),
                 [&](RunConfig& c) { c.segmentation_iterations = ov.segmentation_iterations; }});
        }
        setters.push_back({sub->add_option("--colors", ov.colors, "uw58, bcp37, or a color-table CSV"),
                           [&](RunConfig& c) { c.colors = ov.colors; }});
        if (model_params) {
            setters.push_back({sub->add_option("--k", ov.k, "features to select"),
                               [&](RunConfig& c) { c.k = ov.k; }});
            setters.push_back({sub->add_option("--lambda-count", ov.lambda_count, "lambda grid size"),
                               [&](RunConfig& c) { c.lambda_count = ov.lambda_count; }});
            setters.push_back({sub->add_option("--lambda-ratio", ov.lambda_ratio, "smallest / largest lambda"),
                               [&](RunConfig& c) { c.lambda_ratio = ov.lambda_ratio; }});
        }
        if (ratings) {
            setters.push_back({sub->add_option("--ratings", ov.ratings, "human ratings CSV"),
                               [&](RunConfig& c) { c.ratings = ov.ratings; }});
        }
    };

    auto* featurize = app.add_subcommand("featurize", "build the design matrix for a corpus");
    add_common(featurize, true, false, true);
    setters.push_back({featurize->add_option("--stage", ov.stage, "ball_only|ball_sector|full"),
                       [&](RunConfig& c) { c.stage = parse_stage(ov.stage); }});

    std::string matrix;
    auto* cv = app.add_subcommand("cv-curve", "leave-one-concept-out error versus feature count");
    cv->add_option("matrix", matrix, "design_matrix.csv")->required();
    add_common(cv, false, true, false);

    std::vector<std::string> holdout;
    auto* train = app.add_subcommand("train", "select k features and fit their weights");
    train->add_option("matrix", matrix, "design_matrix.csv")->required();
    train->add_option("--holdout", holdout, "concepts excluded from training")->delimiter(',');
    add_common(train, false, true, false);

    std::string model;
    auto* est = app.add_subcommand("estimate", "apply a trained model to a corpus");
    est->add_option("model", model, "model.json")->required();
    add_common(est, true, false, false);

    std::vector<std::string> estimates;
    auto* eval = app.add_subcommand("evaluate", "correlate estimates with human ratings");
    eval->add_option("estimates", estimates, "estimates CSV, optionally label=path")->required();
    add_common(eval, false, false, true);

    std::vector<double> xyy;
    std::vector<int> srgb;
    std::vector<double> lab;
    std::vector<double> white{kD65.x, kD65.y, kD65.Y};
    auto* convert = app.add_subcommand("convert", "print color coordinates");
    auto* xyy_opt = convert->add_option("--xyy", xyy, "x y Y")->expected(3);
    auto* srgb_opt = convert->add_option("--srgb", srgb, "R G B in 0..255")->expected(3)->check(CLI::Range(0, 255));
    auto* lab_opt = convert->add_option("--lab", lab, "L a b")->expected(3);
    convert->add_option("--white-point", white, "x y Y of the white for --xyy")->expected(3);
    xyy_opt->excludes(srgb_opt)->excludes(lab_opt);
    srgb_opt->excludes(lab_opt);

    auto* corpus = app.add_subcommand("corpus", "corpus utilities");
    corpus->require_subcommand(1);
    auto* scan = corpus->add_subcommand("scan", "list the images a corpus contributes");
    add_common(scan, true, false, false);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_file.empty()) {
            apply_config(cfg, parse_config_text(io::read_file(config_file)));
        }
        if (jobs_opt->count() > 0) {
            cfg.jobs = jobs;
        }
        if (output_opt->count() > 0) {
            cfg.output = output;
        }
        for (const auto& [opt, set] : setters) {
            if (opt->count() > 0) {
                set(cfg);
            }
        }

        Outputs out;
        if (featurize->parsed()) {
            out = run_featurize(cfg);
        } else if (cv->parsed()) {
            out = run_cv_curve(matrix, cfg);
        } else if (train->parsed()) {
            out = run_train(matrix, cfg, holdout);
        } else if (est->parsed()) {
            out = run_estimate(model, cfg);
        } else if (eval->parsed()) {
            std::vector<LabeledPath> paths;
            for (const auto& e : estimates) {
                paths.push_back(parse_labeled_path(e));
            }
            out = run_evaluate(paths, cfg);
        } else if (convert->parsed()) {
            if (xyy_opt->count() > 0) {
                print_color(xyy_to_lab({xyy[0], xyy[1], xyy[2]}, {white[0], white[1], white[2]}));
            } else if (srgb_opt->count() > 0) {
                print_color(srgb_to_lab({static_cast<std::uint8_t>(srgb[0]), static_cast<std::uint8_t>(srgb[1]),
                                         static_cast<std::uint8_t>(srgb[2])}));
            } else if (lab_opt->count() > 0) {
                const LabColor c{lab[0], lab[1], lab[2]};
                print_color(c);
                const Rgb8 rgb = lab_to_srgb(c);
                fmt::print("sRGB {} {} {}\n", rgb.r, rgb.g, rgb.b);
            } else {
                std::cerr << "convert: give one of --xyy, --srgb, --lab\n";
                return 2;
            }
        } else if (scan->parsed()) {
            out = run_corpus_scan(cfg);
        }
        for (const auto& f : out.files) {
            fmt::print("{}\n", f.string());
        }
    } catch (const InputError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
