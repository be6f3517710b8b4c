#include "colorassoc/modeling.hpp"

#include "colorassoc/error.hpp"
#include "colorassoc/parallel.hpp"
#include "json_util.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace colorassoc {
namespace {

double soft_threshold(double z, double lambda) {
    if (z > lambda) {
        return z - lambda;
    }
    if (z < -lambda) {
        return z + lambda;
    }
    return 0.0;
}

void require_finite(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (!X.allFinite() || !y.allFinite()) {
        throw NumericError("lasso: non-finite input");
    }
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    }
    return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = y(rows[i]);
    }
    return out;
}

const Eigen::VectorXd& response(const DesignMatrix& m) {
    if (!m.y) {
        throw InputError("design matrix has no ratings (y column)");
    }
    return *m.y;
}

}  // namespace

std::size_t LassoFit::nonzeros() const {
    return static_cast<std::size_t>((weights.array() != 0.0).count());
}

LassoProblem::LassoProblem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) : rows_(X.rows()) {
    if (X.rows() < 1 || X.cols() < 1) {
        throw InputError("lasso: need at least one row and one column");
    }
    if (y.size() != X.rows()) {
        throw InputError("lasso: X and y row counts differ");
    }
    require_finite(X, y);
    const double n = static_cast<double>(rows_);
    x_mean_ = X.colwise().mean().transpose();
    y_mean_ = y.mean();
    const Eigen::MatrixXd xc = X.rowwise() - x_mean_.transpose();
    gram_ = (xc.transpose() * xc) / n;
    xty_ = (xc.transpose() * (y.array() - y_mean_).matrix()) / n;
    diag_floor_ = 1e-14 * std::max(1.0, gram_.diagonal().maxCoeff());
}

double LassoProblem::lambda_max() const { return xty_.cwiseAbs().maxCoeff(); }

LassoFit LassoProblem::solve(double lambda, const LassoOptions& options,
                             const Eigen::VectorXd* warm_start) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InputError("lasso: lambda must be finite and non-negative");
    }
    const Eigen::Index p = gram_.cols();
    LassoFit fit;
    fit.lambda = lambda;
    fit.weights = warm_start != nullptr ? *warm_start : Eigen::VectorXd::Zero(p);
    if (fit.weights.size() != p) {
        throw InputError("lasso: warm start has wrong length");
    }
    Eigen::VectorXd q = gram_ * fit.weights;

    for (fit.iterations = 1; fit.iterations <= options.max_iterations; ++fit.iterations) {
        double max_step = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double gjj = gram_(j, j);
            const double wj = fit.weights(j);
            double next = 0.0;
            if (gjj > diag_floor_) {
                next = soft_threshold(xty_(j) - q(j) + gjj * wj, lambda) / gjj;
            }
            const double step = next - wj;
            if (step != 0.0) {
                q += gram_.col(j) * step;
                fit.weights(j) = next;
                max_step = std::max(max_step, std::fabs(step));
            }
        }
        if (max_step < options.tolerance) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged) {
        fit.iterations = options.max_iterations;
        spdlog::warn("lasso: no convergence after {} sweeps at lambda={}", options.max_iterations, lambda);
    }
    if (options.polish) {
        polish(lambda, fit);
    }
    fit.offset = y_mean_ - x_mean_.dot(fit.weights);
    return fit;
}

void LassoProblem::polish(double lambda, LassoFit& fit) const {
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < fit.weights.size(); ++j) {
        if (fit.weights(j) != 0.0) {
            active.push_back(j);
        }
    }
    if (active.empty()) {
        return;
    }
    const auto a = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd g(a, a);
    Eigen::VectorXd rhs(a);
    for (Eigen::Index r = 0; r < a; ++r) {
        for (Eigen::Index c = 0; c < a; ++c) {
            g(r, c) = gram_(active[r], active[c]);
        }
        const double sign = fit.weights(active[r]) > 0.0 ? 1.0 : -1.0;
        rhs(r) = xty_(active[r]) - lambda * sign;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    if (ldlt.info() != Eigen::Success) {
        return;
    }
    const Eigen::VectorXd v = ldlt.solve(rhs);
    const double scale = lambda + xty_.cwiseAbs().maxCoeff();
    const double slack = 1e-10 * std::max(scale, 1e-300);
    if (!v.allFinite() || (g * v - rhs).cwiseAbs().maxCoeff() > slack) {
        return;
    }
    for (Eigen::Index r = 0; r < a; ++r) {
        if ((v(r) > 0.0) != (fit.weights(active[r]) > 0.0) || v(r) == 0.0) {
            return;
        }
    }
    Eigen::VectorXd candidate = Eigen::VectorXd::Zero(fit.weights.size());
    for (Eigen::Index r = 0; r < a; ++r) {
        candidate(active[r]) = v(r);
    }
    const Eigen::VectorXd grad = xty_ - gram_ * candidate;
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
        if (candidate(j) == 0.0 && gram_(j, j) > diag_floor_ && std::fabs(grad(j)) > lambda + slack) {
            return;
        }
    }
    fit.weights = candidate;
}

LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& options) {
    return LassoProblem(X, y).solve(lambda, options);
}

std::vector<double> lambda_grid(double lambda_max, int count, double ratio) {
    if (count < 1 || !(ratio > 0.0) || ratio > 1.0) {
        throw InputError("lambda grid needs count >= 1 and ratio in (0, 1]");
    }
    if (!(lambda_max > 0.0)) {
        return {0.0};
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        grid[static_cast<std::size_t>(i)] = lambda_max * std::pow(ratio, t);
    }
    return grid;
}

RegularizationPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<double> lambdas,
                              const LassoOptions& options) {
    const LassoProblem problem(X, y);
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    RegularizationPath path;
    path.lambdas = std::move(lambdas);
    const Eigen::VectorXd* warm = nullptr;
    for (double lambda : path.lambdas) {
        path.fits.push_back(problem.solve(lambda, options, warm));
        warm = &path.fits.back().weights;
    }
    return path;
}

std::vector<Eigen::Index> rows_with_concepts(const DesignMatrix& m, std::span<const std::string> concepts,
                                             bool include) {
    const std::set<std::string> wanted(concepts.begin(), concepts.end());
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        if (wanted.contains(m.rows[i].concept_name) == include) {
            out.push_back(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

CvCurve loo_cv_curve(const DesignMatrix& m, const CvOptions& options) {
    const Eigen::VectorXd& y = response(m);
    CvCurve curve;
    curve.fold_concepts = m.concepts();
    const std::size_t n_folds = curve.fold_concepts.size();
    if (n_folds < 2) {
        throw InputError("cross-validation needs at least two concepts");
    }
    const auto grid = lambda_grid(LassoProblem(m.X, y).lambda_max(), options.lambda_count, options.lambda_ratio);

    // Per fold: best held-out MSE for each nonzero count.
    std::vector<std::map<std::size_t, double>> per_fold(n_folds);
    parallel_for(n_folds, options.jobs, [&](std::size_t f) {
        const std::string& held_out = curve.fold_concepts[f];
        const auto test = rows_with_concepts(m, std::span(&held_out, 1), true);
        const auto train = rows_with_concepts(m, std::span(&held_out, 1), false);
        if (test.empty() || train.empty()) {
            throw InputError("empty cross-validation fold for " + held_out);
        }
        const Eigen::MatrixXd x_train = select_rows(m.X, train);
        const Eigen::VectorXd y_train = select_rows(y, train);
        const Eigen::MatrixXd x_test = select_rows(m.X, test);
        const Eigen::VectorXd y_test = select_rows(y, test);

        auto& best = per_fold[f];
        auto record = [&](std::size_t k, double mse) {
            const auto it = best.find(k);
            if (it == best.end() || mse < it->second) {
                best[k] = mse;
            }
        };
        record(0, (y_test.array() - y_train.mean()).square().mean());
        const auto path = lasso_path(x_train, y_train, grid, options.lasso);
        for (const auto& fit : path.fits) {
            const Eigen::VectorXd pred = (x_test * fit.weights).array() + fit.offset;
            record(fit.nonzeros(), (y_test - pred).squaredNorm() / static_cast<double>(y_test.size()));
        }
    });

    std::map<std::size_t, std::pair<double, std::size_t>> sums;
    for (const auto& fold : per_fold) {
        for (const auto& [k, mse] : fold) {
            auto& s = sums[k];
            s.first += mse;
            s.second += 1;
        }
    }
    for (const auto& [k, s] : sums) {
        curve.points.push_back({k, s.first / static_cast<double>(s.second), s.second});
    }
    return curve;
}

Selection select_features(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t k,
                          std::span<const double> lambdas, const LassoOptions& options) {
    if (k < 1) {
        throw InputError("feature count k must be at least 1");
    }
    if (k > static_cast<std::size_t>(X.cols())) {
        throw InputError(fmt::format("k = {} exceeds the {} available features", k, X.cols()));
    }
    const auto path = lasso_path(X, y, std::vector<double>(lambdas.begin(), lambdas.end()), options);
    const LassoFit* chosen = nullptr;
    const LassoFit* fallback = nullptr;
    for (const auto& fit : path.fits) {
        const std::size_t nz = fit.nonzeros();
        if (nz == k) {
            chosen = &fit;
            break;
        }
        if (nz < k && (fallback == nullptr || nz > fallback->nonzeros())) {
            fallback = &fit;
        }
    }
    if (chosen == nullptr) {
        chosen = fallback;
        if (chosen == nullptr) {
            throw NumericError("lasso path never has fewer than k nonzero weights");
        }
        spdlog::warn("no lambda on the grid gives exactly {} features; using {}", k, chosen->nonzeros());
    }
    Selection s;
    s.lambda = chosen->lambda;
    s.requested = k;
    for (Eigen::Index j = 0; j < chosen->weights.size(); ++j) {
        if (chosen->weights(j) != 0.0) {
            s.columns.push_back(static_cast<std::size_t>(j));
        }
    }
    return s;
}

OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (y.size() < 1 || X.rows() != y.size()) {
        throw InputError("ols: X and y must have the same positive number of rows");
    }
    require_finite(X, y);
    OlsFit fit;
    const double y_mean = y.mean();
    if (X.cols() == 0) {
        fit.weights = Eigen::VectorXd();
        fit.offset = y_mean;
        return fit;
    }
    const Eigen::VectorXd x_mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd xc = X.rowwise() - x_mean.transpose();
    const Eigen::VectorXd yc = y.array() - y_mean;
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    fit.rank = qr.rank();
    if (fit.rank < X.cols()) {
        fit.rank_deficient = true;
        spdlog::warn("ols: design has rank {} < {} columns; using minimum-norm solution", fit.rank, X.cols());
        fit.weights = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(xc).solve(yc);
    } else {
        fit.weights = qr.solve(yc);
    }
    fit.offset = y_mean - x_mean.dot(fit.weights);
    return fit;
}

std::string model_to_json(const ModelSpec& m) {
    nlohmann::ordered_json j;
    j["format"] = "colorassoc-model/1";
    j["stage"] = stage_name(m.stage);
    std::vector<std::string> ids;
    for (const auto& f : m.features) {
        ids.push_back(f.id());
    }
    j["features"] = ids;
    j["weights"] = m.weights;
    j["offset"] = m.offset;
    j["lambda"] = m.lambda;
    j["k_requested"] = m.requested_k;
    j["standardized"] = false;
    j["tolerances"] = {{"convergence", m.lasso.tolerance},
                       {"max_iterations", m.lasso.max_iterations},
                       {"lambda_count", m.lambda_count},
                       {"lambda_ratio", m.lambda_ratio}};
    j["color_table"] = m.color_table;
    j["category_model_version"] = m.category_model_version;
    j["corpus_digest"] = m.corpus_digest;
    j["segmentation"] = detail::segmentation_json(m.segmentation);
    j["training_concepts"] = m.training_concepts;
    return j.dump(2) + "\n";
}

ModelSpec model_from_json(std::string_view text) {
    ModelSpec m;
    try {
        const auto j = nlohmann::json::parse(text);
        m.stage = parse_stage(j.at("stage").get<std::string>());
        for (const auto& id : j.at("features")) {
            m.features.push_back(FeatureSpec::parse(id.get<std::string>()));
        }
        m.weights = j.at("weights").get<std::vector<double>>();
        m.offset = j.at("offset").get<double>();
        m.lambda = j.value("lambda", 0.0);
        m.requested_k = j.value("k_requested", m.features.size());
        if (j.contains("tolerances")) {
            const auto& t = j["tolerances"];
            m.lasso.tolerance = t.value("convergence", m.lasso.tolerance);
            m.lasso.max_iterations = t.value("max_iterations", m.lasso.max_iterations);
            m.lambda_count = t.value("lambda_count", m.lambda_count);
            m.lambda_ratio = t.value("lambda_ratio", m.lambda_ratio);
        }
        m.color_table = j.value("color_table", std::string{});
        m.category_model_version = j.value("category_model_version", std::string{});
        m.corpus_digest = j.value("corpus_digest", std::string{});
        if (j.contains("segmentation")) {
            m.segmentation = detail::segmentation_from_json(j["segmentation"]);
        }
        m.training_concepts = j.value("training_concepts", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed model file: ") + e.what());
    }
    if (m.features.size() != m.weights.size()) {
        throw InputError("model file: features and weights differ in length");
    }
    if (!std::isfinite(m.offset) ||
        !std::all_of(m.weights.begin(), m.weights.end(), [](double w) { return std::isfinite(w); })) {
        throw InputError("model file: non-finite weight");
    }
    return m;
}

ModelSpec train_model(const DesignMatrix& m, const MatrixMetadata& meta, const TrainOptions& options) {
    const Eigen::VectorXd& y = response(m);
    const auto train = rows_with_concepts(m, options.exclude_concepts, false);
    if (train.empty()) {
        throw InputError("no training rows left after excluding held-out concepts");
    }
    const Eigen::MatrixXd x_train = select_rows(m.X, train);
    const Eigen::VectorXd y_train = select_rows(y, train);
    const auto grid =
        lambda_grid(LassoProblem(x_train, y_train).lambda_max(), options.lambda_count, options.lambda_ratio);
    const Selection sel = select_features(x_train, y_train, options.k, grid, options.lasso);
    if (sel.columns.empty()) {
        throw NumericError("lasso selected no features");
    }
    Eigen::MatrixXd x_sel(x_train.rows(), static_cast<Eigen::Index>(sel.columns.size()));
    for (std::size_t c = 0; c < sel.columns.size(); ++c) {
        x_sel.col(static_cast<Eigen::Index>(c)) = x_train.col(static_cast<Eigen::Index>(sel.columns[c]));
    }
    const OlsFit ols = ols_fit(x_sel, y_train);

    ModelSpec spec;
    spec.stage = meta.stage;
    for (std::size_t c : sel.columns) {
        spec.features.push_back(m.features[c]);
    }
    spec.weights.assign(ols.weights.data(), ols.weights.data() + ols.weights.size());
    spec.offset = ols.offset;
    spec.lambda = sel.lambda;
    spec.requested_k = options.k;
    spec.lambda_count = options.lambda_count;
    spec.lambda_ratio = options.lambda_ratio;
    spec.lasso = options.lasso;
    spec.color_table = meta.color_table;
    spec.category_model_version = meta.category_model_version;
    spec.corpus_digest = meta.corpus_digest;
    spec.segmentation = meta.segmentation;
    for (auto r : train) {
        const auto& c = m.rows[static_cast<std::size_t>(r)].concept_name;
        if (spec.training_concepts.empty() || spec.training_concepts.back() != c) {
            spec.training_concepts.push_back(c);
        }
    }
    return spec;
}

ConceptColorMatrix estimate(const ModelSpec& model, const CorpusManifest& manifest, const ColorTable& colors,
                            const CategoryModel& category_model, int jobs) {
    if (model.features.size() != model.weights.size()) {
        throw InputError("model features and weights differ in length");
    }
    std::vector<const ImageRecord*> records;
    for (const auto& r : manifest.records) {
        records.push_back(&r);
    }
    std::sort(records.begin(), records.end(), [](const ImageRecord* a, const ImageRecord* b) {
        return std::tie(a->concept_name, a->rank) < std::tie(b->concept_name, b->rank);
    });
    if (records.empty()) {
        throw InputError("no images to estimate from");
    }
    const auto targets = prepare_targets(colors, category_model);
    const Eigen::Map<const Eigen::VectorXd> w(model.weights.data(), static_cast<Eigen::Index>(model.weights.size()));
    const bool needs_figure = std::any_of(model.features.begin(), model.features.end(), [](const FeatureSpec& f) {
        return f.window.kind == WindowKind::Segmented;
    });

    std::vector<Eigen::VectorXd> scores(records.size());
    parallel_for(records.size(), jobs, [&](std::size_t i) {
        const ImageRecord& rec = *records[i];
        LabImage lab;
        try {
            lab = normalize_image_file(manifest.resolve(rec));
        } catch (const Error& e) {
            throw InputError(fmt::format("{} #{}: {}", rec.concept_name, rec.rank, e.what()));
        }
        PreparedImage img;
        if (needs_figure) {
            img = prepare_image(std::move(lab), category_model, model.segmentation);
        } else {
            SegmentationParams none;
            none.iterations = 0;
            img = prepare_image(std::move(lab), category_model, none);
        }
        const Eigen::MatrixXd block = image_feature_block(img, targets, model.features);
        scores[i] = (block * w).array() + model.offset;
    });

    ConceptColorMatrix out;
    out.color_table = colors.name;
    for (const auto& t : targets) {
        out.color_indices.push_back(t.index);
    }
    std::vector<Eigen::VectorXd> sums;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (out.concepts.empty() || out.concepts.back() != records[i]->concept_name) {
            out.concepts.push_back(records[i]->concept_name);
            sums.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(targets.size())));
            counts.push_back(0);
        }
        sums.back() += scores[i];
        ++counts.back();
    }
    out.values.resize(static_cast<Eigen::Index>(out.concepts.size()), static_cast<Eigen::Index>(targets.size()));
    for (std::size_t c = 0; c < sums.size(); ++c) {
        out.values.row(static_cast<Eigen::Index>(c)) = (sums[c] / static_cast<double>(counts[c])).transpose();
    }
    return out;
}

ConceptColorMatrix estimate_from_matrix(const ModelSpec& model, const DesignMatrix& m) {
    std::vector<Eigen::Index> cols;
    for (const auto& f : model.features) {
        cols.push_back(static_cast<Eigen::Index>(m.column_of(f)));
    }
    ConceptColorMatrix out;
    std::set<int> color_set;
    for (const auto& r : m.rows) {
        color_set.insert(r.color_index);
    }
    out.color_indices.assign(color_set.begin(), color_set.end());
    out.concepts = m.concepts();
    const auto n_con = static_cast<Eigen::Index>(out.concepts.size());
    const auto n_col = static_cast<Eigen::Index>(out.color_indices.size());
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_con, n_col);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_con, n_col);
    std::map<std::string, Eigen::Index> concept_row;
    for (Eigen::Index c = 0; c < n_con; ++c) {
        concept_row[out.concepts[static_cast<std::size_t>(c)]] = c;
    }
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        double s = model.offset;
        for (std::size_t f = 0; f < cols.size(); ++f) {
            s += model.weights[f] * m.X(static_cast<Eigen::Index>(i), cols[f]);
        }
        const Eigen::Index r = concept_row.at(m.rows[i].concept_name);
        const auto c = static_cast<Eigen::Index>(
            std::lower_bound(out.color_indices.begin(), out.color_indices.end(), m.rows[i].color_index) -
            out.color_indices.begin());
        sums(r, c) += s;
        counts(r, c) += 1.0;
    }
    if ((counts.array() == 0.0).any()) {
        throw InputError("design matrix does not cover every (concept, color) pair");
    }
    out.values = sums.array() / counts.array();
    return out;
}

}  // namespace colorassoc
