#pragma once

#include "colorassoc/corpus.hpp"
#include "colorassoc/features.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace colorassoc {

/// Settings shared by the command-line entry points.
struct RunConfig {
    std::filesystem::path corpus;
    std::vector<std::string> concepts;  ///< empty: every subdirectory
    std::string colors = "uw58";        ///< uw58, bcp37, or a CSV path
    CatalogStage stage = CatalogStage::Full;
    std::size_t max_images = 50;
    std::size_t k = 4;
    int lambda_count = 100;
    double lambda_ratio = 1e-4;
    int segmentation_iterations = 500;
    std::filesystem::path category_model;  ///< empty: built-in rules
    std::filesystem::path ratings;
    std::filesystem::path output = ".";
    int jobs = 1;
    std::uint64_t seed = 0;  ///< reserved; nothing in the pipeline is random
    Provenance provenance = Provenance::TopSearch;
};

/// Flat "key = value" lines; '#' starts a comment. Throws on malformed lines
/// and duplicate keys.
std::map<std::string, std::string> parse_config_text(std::string_view text);

/// Overwrites the fields named in `values`. Unknown keys are errors.
void apply_config(RunConfig& config, const std::map<std::string, std::string>& values);

std::vector<std::string> split_list(std::string_view text);

struct Outputs {
    std::vector<std::filesystem::path> files;
};

/// Writes manifest.json, design_matrix.csv and design_matrix.meta.json.
Outputs run_featurize(const RunConfig& config);

/// Writes cv_curve.csv (k,mean_mse,folds) and path.csv (lambda,nonzeros)
/// for the full-data regularization path.
Outputs run_cv_curve(const std::filesystem::path& matrix, const RunConfig& config);

/// Writes model.json. Rows of `holdout` concepts are left out of training.
Outputs run_train(const std::filesystem::path& matrix, const RunConfig& config,
                  const std::vector<std::string>& holdout = {});

/// Writes estimates.csv for the corpus and color table in `config`.
Outputs run_estimate(const std::filesystem::path& model, const RunConfig& config);

struct LabeledPath {
    std::string label;
    std::filesystem::path path;
};

/// "label=path", or a bare path labeled by its stem.
LabeledPath parse_labeled_path(std::string_view text);

/// Per model: report_<label>.csv, report_<label>.json, scatter_<label>.csv.
/// Always: summary.csv and comparisons.csv.
Outputs run_evaluate(const std::vector<LabeledPath>& estimates, const RunConfig& config);

/// Writes manifest.json.
Outputs run_corpus_scan(const RunConfig& config);

/// Sidecar path of a design matrix: foo.csv -> foo.meta.json.
std::filesystem::path metadata_path(const std::filesystem::path& matrix);

}  // namespace colorassoc
