#pragma once

#include "colorassoc/categorization.hpp"
#include "colorassoc/corpus.hpp"
#include "colorassoc/datasets.hpp"
#include "colorassoc/features.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace colorassoc {

struct LassoOptions {
    double tolerance = 1e-7;     ///< stop when no coordinate moves more than this in a sweep
    int max_iterations = 100000; ///< sweeps
    /// After coordinate descent, solve the stationarity equations on the
    /// active set exactly and keep that point if it satisfies the optimality
    /// conditions.
    bool polish = true;
};

struct LassoFit {
    Eigen::VectorXd weights;
    double offset = 0.0;
    double lambda = 0.0;
    int iterations = 0;
    bool converged = false;

    std::size_t nonzeros() const;
};

/// Centered sufficient statistics for repeated lasso solves on one (X, y).
///
/// Minimizes (1/2n)||y - Xw - b||^2 + lambda ||w||_1 with an unpenalized
/// offset b. Columns are not standardized.
class LassoProblem {
public:
    LassoProblem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

    /// Smallest lambda for which every weight is zero.
    double lambda_max() const;

    LassoFit solve(double lambda, const LassoOptions& options = {},
                   const Eigen::VectorXd* warm_start = nullptr) const;

    Eigen::Index columns() const { return gram_.cols(); }

private:
    Eigen::Index rows_;
    Eigen::VectorXd x_mean_;
    double y_mean_;
    Eigen::MatrixXd gram_;   // Xc'Xc / n
    Eigen::VectorXd xty_;    // Xc'yc / n
    double diag_floor_;

    void polish(double lambda, LassoFit& fit) const;
};

LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& options = {});

/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, int count = 100, double ratio = 1e-4);

struct RegularizationPath {
    std::vector<double> lambdas;  ///< descending
    std::vector<LassoFit> fits;
};

/// Warm-started solves along `lambdas` (sorted descending internally).
RegularizationPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              std::vector<double> lambdas, const LassoOptions& options = {});

struct CvPoint {
    std::size_t k = 0;        ///< nonzero feature weights (offset excluded)
    double mean_mse = 0.0;    ///< over the folds that produced this k
    std::size_t folds = 0;
};

struct CvCurve {
    std::vector<std::string> fold_concepts;
    std::vector<CvPoint> points;  ///< ascending k
};

struct CvOptions {
    int lambda_count = 100;
    double lambda_ratio = 1e-4;
    LassoOptions lasso;
    int jobs = 1;
};

/// Leave-one-concept-out: each fold fits the path on the other concepts and
/// scores the held-out rows. Within a fold, the best MSE per k is kept; the
/// curve averages those across folds. k = 0 is the training-mean predictor.
CvCurve loo_cv_curve(const DesignMatrix& m, const CvOptions& options = {});

struct Selection {
    std::vector<std::size_t> columns;  ///< ascending column indices
    double lambda = 0.0;
    std::size_t requested = 0;

    bool shortfall() const { return columns.size() < requested; }
};

/// Largest lambda on the grid with exactly k nonzero weights; otherwise the
/// largest count below k, with a warning.
Selection select_features(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t k,
                          std::span<const double> lambdas, const LassoOptions& options = {});

struct OlsFit {
    Eigen::VectorXd weights;
    double offset = 0.0;
    Eigen::Index rank = 0;
    bool rank_deficient = false;
};

/// Least squares with an offset. Rank-deficient designs fall back to the
/// minimum-norm solution and set rank_deficient.
OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct ModelSpec {
    CatalogStage stage = CatalogStage::Full;
    std::vector<FeatureSpec> features;
    std::vector<double> weights;
    double offset = 0.0;
    double lambda = 0.0;
    std::size_t requested_k = 0;
    int lambda_count = 100;
    double lambda_ratio = 1e-4;
    LassoOptions lasso;
    std::string color_table;
    std::string category_model_version;
    std::string corpus_digest;
    SegmentationParams segmentation;
    std::vector<std::string> training_concepts;
};

std::string model_to_json(const ModelSpec& m);
/// Throws InputError on unknown feature ids or mismatched lengths.
ModelSpec model_from_json(std::string_view json);

struct TrainOptions {
    std::size_t k = 4;
    int lambda_count = 100;
    double lambda_ratio = 1e-4;
    LassoOptions lasso;
    std::vector<std::string> exclude_concepts;  ///< rows never used for selection or weights
};

/// Lasso selection on the training rows followed by OLS on the selected columns.
ModelSpec train_model(const DesignMatrix& m, const MatrixMetadata& meta, const TrainOptions& options);

/// Row indices of `m` whose concept is (not) in `concepts`.
std::vector<Eigen::Index> rows_with_concepts(const DesignMatrix& m, std::span<const std::string> concepts,
                                             bool include);

/// Mean over each concept's images of offset + sum(w_j f_j), per color.
/// Values are not clamped.
ConceptColorMatrix estimate(const ModelSpec& model, const CorpusManifest& manifest, const ColorTable& colors,
                            const CategoryModel& category_model, int jobs = 1);

/// Same estimate computed from precomputed feature rows.
ConceptColorMatrix estimate_from_matrix(const ModelSpec& model, const DesignMatrix& m);

}  // namespace colorassoc
