#include "colorassoc/pipeline.hpp"

#include "colorassoc/categorization.hpp"
#include "colorassoc/datasets.hpp"
#include "colorassoc/error.hpp"
#include "colorassoc/evaluation.hpp"
#include "colorassoc/io.hpp"
#include "colorassoc/modeling.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <set>
#include <sstream>

namespace colorassoc {
namespace fs = std::filesystem;

namespace {

std::size_t parse_count(const std::string& v, const std::string& key) {
    const long long n = io::parse_int(v, key);
    if (n < 0) {
        throw InputError(key + " must be non-negative");
    }
    return static_cast<std::size_t>(n);
}

void require_file(const fs::path& p, std::string_view what) {
    if (p.empty()) {
        throw InputError(fmt::format("no {} given", what));
    }
    if (!fs::is_regular_file(p)) {
        throw InputError(fmt::format("{} not found: {}", what, p.string()));
    }
}

void validate(const RunConfig& c) {
    if (c.k < 1) {
        throw InputError("k must be at least 1");
    }
    if (c.max_images < 1) {
        throw InputError("max_images must be at least 1");
    }
    if (c.jobs < 1) {
        throw InputError("jobs must be at least 1");
    }
    if (!c.category_model.empty()) {
        require_file(c.category_model, "category model");
    }
}

CategoryModel category_model_for(const RunConfig& c) {
    return c.category_model.empty() ? default_category_model() : load_category_model(c.category_model);
}

CorpusManifest scan_for(const RunConfig& c) {
    if (c.corpus.empty()) {
        throw InputError("no corpus directory given");
    }
    ScanOptions opts;
    opts.limit = c.max_images;
    opts.provenance = c.provenance;
    opts.concepts = c.concepts;
    return scan_corpus(c.corpus, opts);
}

fs::path emit(Outputs& out, const RunConfig& c, const std::string& name, std::string_view contents) {
    const fs::path p = c.output / name;
    io::write_file(p, contents);
    out.files.push_back(p);
    return p;
}

MatrixMetadata read_metadata(const fs::path& matrix, const std::string& matrix_text) {
    const fs::path meta_path = metadata_path(matrix);
    if (!fs::is_regular_file(meta_path)) {
        spdlog::warn("no metadata next to {}; provenance fields will be empty", matrix.string());
        return {};
    }
    MatrixMetadata meta = metadata_from_json(io::read_file(meta_path));
    if (!meta.matrix_sha256.empty() && meta.matrix_sha256 != io::sha256_hex(matrix_text)) {
        spdlog::warn("{} does not match the digest recorded in {}", matrix.string(), meta_path.string());
    }
    return meta;
}

}  // namespace

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    for (auto& item : io::split_csv_line(text)) {
        if (!item.empty()) {
            out.push_back(std::move(item));
        }
    }
    return out;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string t = io::trim(line);
        if (t.empty()) {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw InputError(fmt::format("config line {}: expected key = value", lineno));
        }
        std::string key = io::trim(std::string_view(t).substr(0, eq));
        std::string value = io::trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) {
            throw InputError(fmt::format("config line {}: empty key", lineno));
        }
        if (!out.emplace(key, value).second) {
            throw InputError(fmt::format("config line {}: duplicate key '{}'", lineno, key));
        }
    }
    return out;
}

void apply_config(RunConfig& c, const std::map<std::string, std::string>& values) {
    for (const auto& [key, v] : values) {
        if (key == "corpus") {
            c.corpus = v;
        } else if (key == "concepts") {
            c.concepts = split_list(v);
        } else if (key == "colors") {
            c.colors = v;
        } else if (key == "stage") {
            c.stage = parse_stage(v);
        } else if (key == "max_images") {
            c.max_images = parse_count(v, key);
        } else if (key == "k") {
            c.k = parse_count(v, key);
        } else if (key == "lambda_count") {
            c.lambda_count = static_cast<int>(io::parse_int(v, key));
        } else if (key == "lambda_ratio") {
            c.lambda_ratio = io::parse_double(v, key);
        } else if (key == "segmentation_iterations") {
            c.segmentation_iterations = static_cast<int>(io::parse_int(v, key));
        } else if (key == "category_model") {
            c.category_model = v;
        } else if (key == "ratings") {
            c.ratings = v;
        } else if (key == "output") {
            c.output = v;
        } else if (key == "jobs") {
            c.jobs = static_cast<int>(io::parse_int(v, key));
        } else if (key == "seed") {
            c.seed = parse_count(v, key);
        } else if (key == "provenance") {
            const auto p = parse_provenance(v);
            if (!p) {
                throw InputError("unknown provenance '" + v + "'");
            }
            c.provenance = *p;
        } else {
            throw InputError("unknown config key '" + key + "'");
        }
    }
}

fs::path metadata_path(const fs::path& matrix) {
    fs::path p = matrix;
    p.replace_extension(".meta.json");
    return p;
}

Outputs run_featurize(const RunConfig& c) {
    validate(c);
    const ColorTable colors = resolve_color_table(c.colors);
    const CategoryModel catmodel = category_model_for(c);
    const CorpusManifest manifest = scan_for(c);
    std::optional<RatingsTable> ratings;
    if (!c.ratings.empty()) {
        require_file(c.ratings, "ratings file");
        ratings = load_ratings(c.ratings, colors);
    }
    BuildOptions opts;
    opts.segmentation.iterations = c.segmentation_iterations;
    opts.jobs = c.jobs;
    const DesignMatrix m =
        build_design_matrix(manifest, colors, catalog(c.stage), catmodel, ratings ? &*ratings : nullptr, opts);

    std::ostringstream csv;
    write_design_matrix_csv(m, csv);
    MatrixMetadata meta;
    meta.stage = c.stage;
    meta.color_table = colors.name;
    meta.category_model_version = catmodel.version();
    meta.corpus_digest = corpus_digest(manifest);
    meta.matrix_sha256 = io::sha256_hex(csv.str());
    meta.segmentation = opts.segmentation;

    Outputs out;
    emit(out, c, "manifest.json", manifest_to_json(manifest));
    emit(out, c, "design_matrix.csv", csv.str());
    emit(out, c, "design_matrix.meta.json", metadata_to_json(meta));
    return out;
}

Outputs run_cv_curve(const fs::path& matrix, const RunConfig& c) {
    validate(c);
    require_file(matrix, "design matrix");
    const DesignMatrix m = read_design_matrix_csv(matrix);
    if (!m.y) {
        throw InputError("design matrix has no ratings; featurize with a ratings file");
    }
    CvOptions opts;
    opts.lambda_count = c.lambda_count;
    opts.lambda_ratio = c.lambda_ratio;
    opts.jobs = c.jobs;
    const CvCurve curve = loo_cv_curve(m, opts);

    std::string text = "k,mean_mse,folds\n";
    for (const auto& p : curve.points) {
        text += fmt::format("{},{},{}\n", p.k, io::format_double(p.mean_mse), p.folds);
    }
    const auto grid = lambda_grid(LassoProblem(m.X, *m.y).lambda_max(), c.lambda_count, c.lambda_ratio);
    const auto path = lasso_path(m.X, *m.y, grid, opts.lasso);
    std::string path_text = "lambda,nonzeros\n";
    for (const auto& fit : path.fits) {
        path_text += fmt::format("{},{}\n", io::format_double(fit.lambda), fit.nonzeros());
    }
    Outputs out;
    emit(out, c, "cv_curve.csv", text);
    emit(out, c, "path.csv", path_text);
    return out;
}

Outputs run_train(const fs::path& matrix, const RunConfig& c, const std::vector<std::string>& holdout) {
    validate(c);
    require_file(matrix, "design matrix");
    const std::string text = io::read_file(matrix);
    const DesignMatrix m = read_design_matrix_csv(matrix);
    const MatrixMetadata meta = read_metadata(matrix, text);
    const auto present = m.concepts();
    for (const auto& h : holdout) {
        if (std::find(present.begin(), present.end(), h) == present.end()) {
            throw InputError("held-out concept '" + h + "' is not in the design matrix");
        }
    }
    TrainOptions opts;
    opts.k = c.k;
    opts.lambda_count = c.lambda_count;
    opts.lambda_ratio = c.lambda_ratio;
    opts.exclude_concepts = holdout;
    const ModelSpec model = train_model(m, meta, opts);
    Outputs out;
    emit(out, c, "model.json", model_to_json(model));
    return out;
}

Outputs run_estimate(const fs::path& model_path, const RunConfig& c) {
    validate(c);
    require_file(model_path, "model file");
    const ModelSpec model = model_from_json(io::read_file(model_path));
    const ColorTable colors = resolve_color_table(c.colors);
    const CategoryModel catmodel = category_model_for(c);
    if (!model.category_model_version.empty() && model.category_model_version != catmodel.version()) {
        spdlog::warn("model was trained with category model {} but {} is active", model.category_model_version,
                     catmodel.version());
    }
    const CorpusManifest manifest = scan_for(c);
    const ConceptColorMatrix est = estimate(model, manifest, colors, catmodel, c.jobs);
    std::ostringstream csv;
    write_matrix_csv(est, csv);
    Outputs out;
    emit(out, c, "estimates.csv", csv.str());
    return out;
}

LabeledPath parse_labeled_path(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
        const fs::path p{std::string(text)};
        return {p.stem().string(), p};
    }
    LabeledPath lp{std::string(text.substr(0, eq)), fs::path(std::string(text.substr(eq + 1)))};
    if (lp.label.empty() || lp.path.empty()) {
        throw InputError("expected label=path, got '" + std::string(text) + "'");
    }
    return lp;
}

Outputs run_evaluate(const std::vector<LabeledPath>& estimates, const RunConfig& c) {
    validate(c);
    if (estimates.empty()) {
        throw InputError("no estimates to evaluate");
    }
    require_file(c.ratings, "ratings file");
    const ColorTable colors = resolve_color_table(c.colors);
    const RatingsTable ratings = load_ratings(c.ratings, colors);
    std::set<std::string> labels;
    std::vector<LabeledReport> reports;
    Outputs out;
    for (const auto& e : estimates) {
        if (!labels.insert(e.label).second) {
            throw InputError("duplicate estimate label '" + e.label + "'");
        }
        require_file(e.path, "estimates file");
        const ConceptColorMatrix est = load_matrix_csv(e.path);
        LabeledReport lr{e.label, evaluate_model(est, ratings)};
        std::ostringstream report_csv;
        write_report_csv(lr.report, report_csv);
        std::ostringstream scatter;
        write_scatter_csv(est, ratings, scatter);
        emit(out, c, "report_" + e.label + ".csv", report_csv.str());
        emit(out, c, "report_" + e.label + ".json", report_summary_json(lr.report));
        emit(out, c, "scatter_" + e.label + ".csv", scatter.str());
        reports.push_back(std::move(lr));
    }
    std::ostringstream summary;
    write_summary_csv(reports, summary);
    std::ostringstream comparisons;
    write_comparisons_csv(reports, comparisons);
    emit(out, c, "summary.csv", summary.str());
    emit(out, c, "comparisons.csv", comparisons.str());
    return out;
}

Outputs run_corpus_scan(const RunConfig& c) {
    validate(c);
    const CorpusManifest manifest = scan_for(c);
    Outputs out;
    emit(out, c, "manifest.json", manifest_to_json(manifest));
    return out;
}

}  // namespace colorassoc
