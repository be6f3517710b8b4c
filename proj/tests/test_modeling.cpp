#include "colorassoc/error.hpp"
#include "colorassoc/modeling.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace colorassoc;
using testsupport::lasso_gradient;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937& rng, int rows, int cols) {
    std::normal_distribution<double> n01(0, 1);
    Eigen::MatrixXd X(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            X(i, j) = n01(rng);
        }
    }
    return X;
}

Eigen::VectorXd random_vector(std::mt19937& rng, int n) { return random_matrix(rng, n, 1).col(0); }

DesignMatrix toy_matrix(const std::vector<std::string>& concepts, const std::vector<Eigen::VectorXd>& xs,
                        const std::vector<Eigen::VectorXd>& ys) {
    DesignMatrix m;
    m.features = {FeatureSpec::ball(10, Window::center(100))};
    Eigen::Index total = 0;
    for (const auto& y : ys) {
        total += y.size();
    }
    m.X.resize(total, 1);
    m.y = Eigen::VectorXd(total);
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < concepts.size(); ++c) {
        for (Eigen::Index i = 0; i < ys[c].size(); ++i, ++r) {
            m.rows.push_back({concepts[c], static_cast<int>(i) + 1, 1});
            m.X(r, 0) = xs[c](i);
            (*m.y)(r) = ys[c](i);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("lambda at or above lambda_max gives the null model") {
    std::mt19937 rng(1);
    const Eigen::MatrixXd X = random_matrix(rng, 30, 6);
    const Eigen::VectorXd y = random_vector(rng, 30);
    const LassoProblem p(X, y);
    for (double scale : {1.0, 1.5, 100.0}) {
        const LassoFit fit = p.solve(p.lambda_max() * scale);
        CHECK(fit.nonzeros() == 0);
        CHECK(fit.offset == doctest::Approx(y.mean()).epsilon(1e-14));
    }
    const Eigen::MatrixXd xc = X.rowwise() - X.colwise().mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    CHECK(p.lambda_max() == doctest::Approx((xc.transpose() * yc).cwiseAbs().maxCoeff() / 30.0));
    CHECK(p.solve(p.lambda_max() * 0.99).nonzeros() >= 1);
}

TEST_CASE("lambda = 0 matches least squares") {
    std::mt19937 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd X = random_matrix(rng, 5, 3);
        const Eigen::VectorXd y = random_vector(rng, 5);
        const LassoFit fit = lasso_fit(X, y, 0.0);
        const OlsFit ols = ols_fit(X, y);
        CHECK(fit.converged);
        CHECK((fit.weights - ols.weights).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(std::fabs(fit.offset - ols.offset) < 1e-6);
    }
}

TEST_CASE("KKT conditions hold along random problems") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> frac(0.001, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::MatrixXd X = random_matrix(rng, 40, 8);
        const Eigen::VectorXd y = X.col(0) * 1.5 - X.col(5) + random_vector(rng, 40);
        const LassoProblem p(X, y);
        const double lambda = p.lambda_max() * frac(rng);
        const LassoFit fit = p.solve(lambda);
        CHECK(fit.converged);
        const Eigen::VectorXd g = lasso_gradient(X, y, fit.weights);
        for (int j = 0; j < 8; ++j) {
            if (fit.weights(j) == 0.0) {
                CHECK(std::fabs(g(j)) <= lambda + 1e-6);
            } else {
                CHECK(std::fabs(g(j) + (fit.weights(j) > 0 ? lambda : -lambda)) <= 1e-6);
            }
        }
        // Offset is the unpenalized optimum.
        CHECK(std::fabs((y - X * fit.weights).mean() - fit.offset) < 1e-12);
    }
}

TEST_CASE("warm starts reach the same solution") {
    std::mt19937 rng(4);
    const Eigen::MatrixXd X = random_matrix(rng, 50, 10);
    const Eigen::VectorXd y = X.col(2) - 0.5 * X.col(7) + 0.3 * random_vector(rng, 50);
    const LassoProblem p(X, y);
    const auto path = lasso_path(X, y, lambda_grid(p.lambda_max(), 30, 1e-3));
    for (const auto& fit : path.fits) {
        const LassoFit cold = p.solve(fit.lambda);
        CHECK((cold.weights - fit.weights).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(testsupport::lasso_objective(X, y, fit.weights, fit.lambda) ==
              doctest::Approx(testsupport::lasso_objective(X, y, cold.weights, fit.lambda)).epsilon(1e-9));
    }
}

TEST_CASE("lambda grid") {
    const auto g = lambda_grid(2.0);
    REQUIRE(g.size() == 100);
    CHECK(g.front() == 2.0);
    CHECK(g.back() == doctest::Approx(2e-4));
    CHECK(std::is_sorted(g.rbegin(), g.rend()));
    CHECK(lambda_grid(0.0) == std::vector<double>{0.0});
    CHECK_THROWS_AS(lambda_grid(1.0, 0), InputError);
}

TEST_CASE("sparse support matches exhaustive best subset") {
    std::mt19937 rng(5);
    int agree = 0;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd X;
        Eigen::VectorXd y;
        testsupport::sparse_instance(rng, 40, X, y);
        const Selection s = select_features(X, y, 2, lambda_grid(LassoProblem(X, y).lambda_max()));
        unsigned best = 0;
        double best_rss = INFINITY;
        for (unsigned mask = 0; mask < 256; ++mask) {
            if (__builtin_popcount(mask) != 2) {
                continue;
            }
            const double rss = testsupport::subset_rss(X, y, mask);
            if (rss < best_rss) {
                best_rss = rss;
                best = mask;
            }
        }
        unsigned got = 0;
        for (auto c : s.columns) {
            got |= 1u << c;
        }
        agree += got == best;
    }
    CHECK(agree >= 45);
}

TEST_CASE("orthogonal design selects by absolute correlation") {
    // Columns of a 4x4 Hadamard matrix without the constant column, repeated.
    const double h[4][3] = {{1, 1, 1}, {-1, 1, -1}, {1, -1, -1}, {-1, -1, 1}};
    Eigen::MatrixXd X(8, 3);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 3; ++j) {
            X(i, j) = h[i % 4][j];
        }
    }
    std::mt19937 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd y = random_vector(rng, 8);
        const Eigen::VectorXd yc = y.array() - y.mean();
        Eigen::Vector3d score = (X.transpose() * yc).cwiseAbs();
        std::vector<std::size_t> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return score(a) > score(b); });
        std::vector<std::size_t> top{order[0], order[1]};
        std::sort(top.begin(), top.end());
        const Selection s = select_features(X, y, 2, lambda_grid(LassoProblem(X, y).lambda_max()));
        CHECK(s.columns == top);
        // Closed form: soft thresholding of the per-column correlation.
        const LassoFit fit = lasso_fit(X, y, 0.1);
        for (int j = 0; j < 3; ++j) {
            const double z = X.col(j).dot(yc) / 8.0;
            const double expect = (std::fabs(z) > 0.1 ? z - std::copysign(0.1, z) : 0.0);
            CHECK(fit.weights(j) == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("select_features edge cases") {
    std::mt19937 rng(7);
    const Eigen::MatrixXd X = random_matrix(rng, 30, 4);
    const Eigen::VectorXd y = X * Eigen::Vector4d(1, -2, 0.5, 3) + 0.1 * random_vector(rng, 30);
    const auto grid = lambda_grid(LassoProblem(X, y).lambda_max());
    const Selection all = select_features(X, y, 4, grid);
    CHECK(all.columns == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK_FALSE(all.shortfall());
    CHECK_THROWS_AS(select_features(X, y, 5, grid), InputError);
    CHECK_THROWS_AS(select_features(X, y, 0, grid), InputError);

    const double coarse[] = {grid.front(), grid.back()};
    const Selection gap = select_features(X, y, 2, coarse);
    CHECK(gap.shortfall());
    CHECK(gap.columns.empty());
}

TEST_CASE("ordinary least squares") {
    std::mt19937 rng(8);
    const Eigen::MatrixXd X = random_matrix(rng, 20, 3);
    const Eigen::VectorXd exact = X * Eigen::Vector3d(0.5, -1, 2) + Eigen::VectorXd::Constant(20, 0.25);
    const OlsFit fit = ols_fit(X, exact);
    CHECK(fit.offset == doctest::Approx(0.25));
    CHECK(((X * fit.weights).array() + fit.offset - exact.array()).abs().maxCoeff() < 1e-12);

    const Eigen::VectorXd y = random_vector(rng, 20);
    const OlsFit noisy = ols_fit(X, y);
    const Eigen::VectorXd resid = y - (X * noisy.weights).array().matrix() - Eigen::VectorXd::Constant(20, noisy.offset);
    CHECK(std::fabs(resid.sum()) < 1e-10);
    CHECK((X.transpose() * resid).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_FALSE(noisy.rank_deficient);

    Eigen::MatrixXd dup(20, 2);
    dup << X.col(0), X.col(0);
    const OlsFit d = ols_fit(dup, y);
    CHECK(d.rank_deficient);
    CHECK(d.rank == 1);
    CHECK(d.weights(0) == doctest::Approx(d.weights(1)));

    const OlsFit none = ols_fit(Eigen::MatrixXd(20, 0), y);
    CHECK(none.offset == doctest::Approx(y.mean()));
    CHECK(none.weights.size() == 0);
}

TEST_CASE("non-finite data is rejected") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 2);
    X(1, 1) = NAN;
    CHECK_THROWS_AS(LassoProblem(X, Eigen::VectorXd::Ones(4)), NumericError);
    CHECK_THROWS_AS(LassoProblem(Eigen::MatrixXd::Ones(4, 2), Eigen::VectorXd::Ones(3)), InputError);
}

TEST_CASE("cross-validation on an adversarial two-concept fixture") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::VectorXd xa(40), xb(40);
    for (int i = 0; i < 40; ++i) {
        xa(i) = u(rng);
        xb(i) = u(rng);
    }
    // The feature tracks y in A and runs against it in B.
    const Eigen::VectorXd ya = xa;
    const Eigen::VectorXd yb = 1.0 - xb.array();
    const DesignMatrix m = toy_matrix({"a", "b"}, {xa, xb}, {ya, yb});
    const CvCurve curve = loo_cv_curve(m);
    CHECK(curve.fold_concepts == std::vector<std::string>{"a", "b"});
    REQUIRE(curve.points.size() == 2);
    CHECK(curve.points[0].k == 0);
    CHECK(curve.points[1].k == 1);
    const double null_a = (ya.array() - yb.mean()).square().mean();
    const double null_b = (yb.array() - ya.mean()).square().mean();
    CHECK(curve.points[0].mean_mse == doctest::Approx((null_a + null_b) / 2).epsilon(1e-12));
    CHECK(curve.points[1].mean_mse > curve.points[0].mean_mse);

    CvOptions par;
    par.jobs = 2;
    const CvCurve again = loo_cv_curve(m, par);
    CHECK(again.points[1].mean_mse == curve.points[1].mean_mse);

    const DesignMatrix one = toy_matrix({"a"}, {xa}, {ya});
    CHECK_THROWS_AS(loo_cv_curve(one), InputError);
}

TEST_CASE("cross-validation with a shared relation") {
    std::mt19937 rng(10);
    const Eigen::VectorXd x1 = random_vector(rng, 30), x2 = random_vector(rng, 30), x3 = random_vector(rng, 30);
    const DesignMatrix m = toy_matrix({"a", "b", "c"}, {x1, x2, x3}, {x1 * 2, x2 * 2, x3 * 2});
    const CvCurve c = loo_cv_curve(m);
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[1].folds == 3);
    CHECK(c.points[1].mean_mse < 1e-6);
}

TEST_CASE("train, serialize and apply a model") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    DesignMatrix m;
    m.features = {FeatureSpec::ball(10, Window::center(100)), FeatureSpec::sector(20, 10, Window::segmented()),
                  FeatureSpec::category(Window::center(20))};
    const int per = 30;
    m.X.resize(3 * per, 3);
    m.y = Eigen::VectorXd(3 * per);
    const char* names[] = {"x", "y", "z"};
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < per; ++i) {
            const int r = c * per + i;
            m.rows.push_back({names[c], 1 + i / 10, 1 + i % 10});
            for (int j = 0; j < 3; ++j) {
                m.X(r, j) = u(rng);
            }
            (*m.y)(r) = 0.1 + 0.6 * m.X(r, 0) + 0.2 * m.X(r, 2);
        }
    }
    MatrixMetadata meta;
    meta.color_table = "uw58";
    meta.category_model_version = "v";
    TrainOptions opts;
    opts.k = 2;
    const ModelSpec model = train_model(m, meta, opts);
    REQUIRE(model.features.size() == 2);
    CHECK(model.features[0] == m.features[0]);
    CHECK(model.features[1] == m.features[2]);
    CHECK(model.weights[0] == doctest::Approx(0.6));
    CHECK(model.weights[1] == doctest::Approx(0.2));
    CHECK(model.offset == doctest::Approx(0.1));
    CHECK(model.training_concepts == std::vector<std::string>{"x", "y", "z"});

    const std::string json = model_to_json(model);
    const ModelSpec back = model_from_json(json);
    CHECK(model_to_json(back) == json);
    CHECK(back.weights == model.weights);
    CHECK(back.offset == model.offset);

    opts.exclude_concepts = {"y"};
    const ModelSpec held = train_model(m, meta, opts);
    CHECK(held.training_concepts == std::vector<std::string>{"x", "z"});

    const ConceptColorMatrix est = estimate_from_matrix(model, m);
    CHECK(est.concepts == std::vector<std::string>{"x", "y", "z"});
    CHECK(est.color_indices.size() == 10);
    // Each cell averages the three images of that concept.
    double expect = 0.0;
    for (int i : {0, 10, 20}) {
        expect += model.offset + model.weights[0] * m.X(i, 0) + model.weights[1] * m.X(i, 2);
    }
    CHECK(est.values(0, 0) == doctest::Approx(expect / 3));

    ModelSpec zero = model;
    zero.weights = {0.0, 0.0};
    zero.offset = 0.42;
    CHECK((estimate_from_matrix(zero, m).values.array() == 0.42).all());

    opts = {};
    opts.k = 4;
    CHECK_THROWS_AS(train_model(m, meta, opts), InputError);
}

TEST_CASE("model file validation") {
    CHECK_THROWS_AS(model_from_json("{"), InputError);
    CHECK_THROWS_AS(model_from_json(R"({"stage":"full","features":["ball_dr7_w20"],"weights":[1],"offset":0})"),
                    InputError);
    CHECK_THROWS_AS(model_from_json(R"({"stage":"full","features":["ball_dr10_w20"],"weights":[1,2],"offset":0})"),
                    InputError);
    const ModelSpec ok =
        model_from_json(R"({"stage":"full","features":["cat_seg"],"weights":[0.5],"offset":0.1})");
    CHECK(ok.features[0] == FeatureSpec::category(Window::segmented()));
}

TEST_CASE("estimate from images") {
    const auto dir = testsupport::scratch_dir("modeling_estimate");
    const auto rows = testsupport::fruit_ratings({"lemon"});
    testsupport::write_mixture_corpus(dir / "corpus", rows, builtin_uw58(), 1, 3);
    ScanOptions so;
    const CorpusManifest manifest = scan_corpus(dir / "corpus", so);
    ModelSpec model;
    model.features = {FeatureSpec::ball(20, Window::center(60)), FeatureSpec::category(Window::center(100))};
    model.weights = {0.7, 0.1};
    model.offset = 0.05;
    const ConceptColorMatrix est = estimate(model, manifest, builtin_bcp37(), default_category_model());
    REQUIRE(est.values.rows() == 1);
    REQUIRE(est.values.cols() == 37);
    // One image: the estimate is that image's linear score.
    const PreparedImage img = prepare_image(normalize_image_file(manifest.resolve(manifest.records[0])),
                                            default_category_model(), {});
    const auto targets = prepare_targets(builtin_bcp37(), default_category_model());
    const Eigen::MatrixXd block = image_feature_block(img, targets, model.features);
    for (Eigen::Index j = 0; j < 37; ++j) {
        CHECK(est.values(0, j) == doctest::Approx(0.05 + 0.7 * block(j, 0) + 0.1 * block(j, 1)).epsilon(1e-15));
    }
}
