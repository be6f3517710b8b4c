#include "colorassoc/error.hpp"
#include "colorassoc/evaluation.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace colorassoc;

TEST_CASE("pearson_r examples") {
    const std::vector<double> a{1, 2, 3};
    CHECK(pearson_r(a, std::vector<double>{2, 4, 6}).r == doctest::Approx(1.0));
    CHECK(pearson_r(a, std::vector<double>{1, 3, 2}).r == doctest::Approx(0.5));
    CHECK(pearson_r(a, std::vector<double>{-1, -2, -3}).r == doctest::Approx(-1.0));
    CHECK_THROWS_AS(pearson_r(a, std::vector<double>{1, 2}), InputError);
    CHECK_THROWS_AS(pearson_r(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InputError);
    CHECK_THROWS_AS(pearson_r(a, std::vector<double>{5, 5, 5}), NumericError);
}

TEST_CASE("pearson_r p-value") {
    // r = 0.5 with n = 3: t = 0.5 * sqrt(1 / 0.75), one degree of freedom,
    // two-tailed p = 1 - 2 atan(t) / pi.
    const Correlation c = pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2});
    const double t = 0.5 * std::sqrt(1.0 / 0.75);
    CHECK(c.p == doctest::Approx(1.0 - 2.0 * std::atan(t) / M_PI).epsilon(1e-12));
    CHECK(c.n == 3);
}

TEST_CASE("pearson_r is invariant under positive affine maps") {
    std::mt19937 rng(1);
    std::normal_distribution<double> n01;
    std::vector<double> x(50), y(50);
    for (int i = 0; i < 50; ++i) {
        x[i] = n01(rng);
        y[i] = x[i] + n01(rng);
    }
    const double r = pearson_r(x, y).r;
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    std::vector<double> x2 = x, y2 = y;
    for (auto& v : x2) v = 3 * v + 7;
    for (auto& v : y2) v = 0.2 * v - 1;
    CHECK(pearson_r(x2, y2).r == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("Fisher z for independent correlations") {
    CHECK(fisher_z_independent(.72, 696, .65, 696).z == doctest::Approx(2.46).epsilon(0.01 / 2.46));
    CHECK(std::fabs(fisher_z_independent(.72, 696, .65, 696).z - 2.46) <= 0.01);
    CHECK(std::fabs(fisher_z_independent(.72, 696, .65, 696).p - 0.014) <= 0.0005);
    CHECK(std::fabs(fisher_z_independent(.81, 696, .72, 696).z - 4.08) <= 0.01);
    CHECK(std::fabs(fisher_z_independent(.81, 696, .65, 696).z - 6.55) <= 0.01);
    CHECK(std::fabs(fisher_z_independent(.81, 696, .68, 222).z - 3.84) <= 0.01);
    CHECK(fisher_z_independent(.4, 50, .4, 50).z == 0.0);
    CHECK(fisher_z_independent(.3, 40, .6, 90).z == -fisher_z_independent(.6, 90, .3, 40).z);
    CHECK_THROWS_AS(fisher_z_independent(1.0, 50, .5, 50), InputError);
    CHECK_THROWS_AS(fisher_z_independent(.5, 3, .5, 50), InputError);
}

TEST_CASE("evaluate_model") {
    const RatingsTable r = testsupport::fruit_ratings();
    const EvaluationReport self = evaluate_model(r, r);
    CHECK(self.overall.n == 696);
    CHECK(self.overall.r == doctest::Approx(1.0));
    REQUIRE(self.concepts.size() == 12);
    for (const auto& c : self.concepts) {
        CHECK(c.sse == 0.0);
        CHECK(c.correlation.n == 58);
    }
    ConceptColorMatrix shifted = r;
    shifted.values.array() += 0.3;
    const EvaluationReport s = evaluate_model(shifted, r);
    CHECK(s.overall.r == doctest::Approx(1.0));
    CHECK(s.concepts[0].sse == doctest::Approx(58 * 0.09));

    // Concept order in the estimates does not need to match the ratings.
    ConceptColorMatrix swapped = r;
    std::swap(swapped.concepts[0], swapped.concepts[1]);
    swapped.values.row(0).swap(swapped.values.row(1));
    CHECK(evaluate_model(swapped, r).overall.r == doctest::Approx(1.0));

    const RatingsTable sub = testsupport::fruit_ratings({"lime", "lemon"});
    CHECK_THROWS_AS(evaluate_model(sub, r), InputError);
}

TEST_CASE("report writers") {
    const RatingsTable r = testsupport::fruit_ratings({"lime", "lemon", "mango"});
    ConceptColorMatrix est = r;
    std::mt19937 rng(2);
    std::normal_distribution<double> noise(0, 0.1);
    for (Eigen::Index i = 0; i < est.values.size(); ++i) {
        est.values.data()[i] += noise(rng);
    }
    const EvaluationReport rep = evaluate_model(est, r);
    std::ostringstream csv;
    write_report_csv(rep, csv);
    const std::string text = csv.str();
    CHECK(text.rfind("scope,r,p,n,sse\noverall,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);

    std::ostringstream scatter;
    write_scatter_csv(est, r, scatter);
    const std::string rows = scatter.str();
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 1 + 3 * 58);

    std::vector<LabeledReport> many{{"ball", rep}, {"sector", evaluate_model(r, r)}};
    many[1].report.overall.r = 0.9;
    std::ostringstream summary, comparisons;
    write_summary_csv(many, summary);
    write_comparisons_csv(many, comparisons);
    CHECK(summary.str().rfind("scope,ball,sector\noverall,", 0) == 0);
    CHECK(comparisons.str().find("ball,sector,") != std::string::npos);
    CHECK(report_summary_json(rep).find("\"overall\"") != std::string::npos);
}
