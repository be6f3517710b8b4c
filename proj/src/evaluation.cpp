#include "colorassoc/evaluation.hpp"

#include "colorassoc/error.hpp"
#include "colorassoc/io.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace colorassoc {

using io::format_double;

Correlation pearson_r(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw InputError(fmt::format("pearson_r: lengths differ ({} vs {})", xs.size(), ys.size()));
    }
    const std::size_t n = xs.size();
    if (n < 3) {
        throw InputError("pearson_r: need at least 3 pairs");
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!std::isfinite(sxx) || !std::isfinite(syy) || !std::isfinite(sxy)) {
        throw NumericError("pearson_r: non-finite input");
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw NumericError("pearson_r: zero variance");
    }
    Correlation c;
    c.n = n;
    c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    if (std::fabs(c.r) == 1.0) {
        c.p = 0.0;
    } else {
        const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
        const boost::math::students_t dist(df);
        c.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    }
    return c;
}

ZTest fisher_z_independent(double r1, std::size_t n1, double r2, std::size_t n2) {
    if (n1 <= 3 || n2 <= 3) {
        throw InputError("fisher z: both samples need n > 3");
    }
    if (!(std::fabs(r1) < 1.0) || !(std::fabs(r2) < 1.0)) {
        throw InputError("fisher z: correlations must satisfy |r| < 1");
    }
    const double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) + 1.0 / static_cast<double>(n2 - 3));
    ZTest t;
    t.z = (std::atanh(r1) - std::atanh(r2)) / se;
    t.p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), std::fabs(t.z)));
    return t;
}

EvaluationReport evaluate_model(const ConceptColorMatrix& estimates, const RatingsTable& ratings) {
    if (estimates.concepts.size() != ratings.concepts.size() ||
        estimates.color_indices.size() != ratings.color_indices.size()) {
        throw InputError(fmt::format("dimension mismatch: estimates {}x{}, ratings {}x{}",
                                     estimates.concepts.size(), estimates.color_indices.size(),
                                     ratings.concepts.size(), ratings.color_indices.size()));
    }
    std::vector<std::size_t> rating_cols;
    for (int idx : estimates.color_indices) {
        const auto col = ratings.color_column(idx);
        if (!col) {
            throw InputError(fmt::format("color {} has no rating", idx));
        }
        rating_cols.push_back(*col);
    }
    EvaluationReport report;
    std::vector<double> all_est;
    std::vector<double> all_hum;
    for (std::size_t c = 0; c < estimates.concepts.size(); ++c) {
        const std::string& name = estimates.concepts[c];
        const auto row = ratings.concept_row(name);
        if (!row) {
            throw InputError("concept '" + name + "' has no ratings");
        }
        std::vector<double> est;
        std::vector<double> hum;
        ConceptScore score;
        score.concept_name = name;
        for (std::size_t j = 0; j < rating_cols.size(); ++j) {
            const double e = estimates.values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j));
            const double h = ratings.values(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(rating_cols[j]));
            est.push_back(e);
            hum.push_back(h);
            score.sse += (e - h) * (e - h);
        }
        score.correlation = pearson_r(hum, est);
        all_est.insert(all_est.end(), est.begin(), est.end());
        all_hum.insert(all_hum.end(), hum.begin(), hum.end());
        report.concepts.push_back(std::move(score));
    }
    report.overall = pearson_r(all_hum, all_est);
    return report;
}

void write_report_csv(const EvaluationReport& report, std::ostream& out) {
    double total_sse = 0.0;
    for (const auto& c : report.concepts) {
        total_sse += c.sse;
    }
    out << "scope,r,p,n,sse\n";
    out << "overall," << format_double(report.overall.r) << ',' << format_double(report.overall.p) << ','
        << report.overall.n << ',' << format_double(total_sse) << '\n';
    for (const auto& c : report.concepts) {
        out << c.concept_name << ',' << format_double(c.correlation.r) << ',' << format_double(c.correlation.p) << ','
            << c.correlation.n << ',' << format_double(c.sse) << '\n';
    }
}

std::string report_summary_json(const EvaluationReport& report) {
    nlohmann::ordered_json j;
    j["overall"] = {{"r", report.overall.r}, {"p", report.overall.p}, {"n", report.overall.n}};
    auto& per = j["concepts"] = nlohmann::ordered_json::array();
    for (const auto& c : report.concepts) {
        per.push_back({{"concept", c.concept_name},
                       {"r", c.correlation.r},
                       {"p", c.correlation.p},
                       {"n", c.correlation.n},
                       {"sse", c.sse}});
    }
    return j.dump(2) + "\n";
}

void write_scatter_csv(const ConceptColorMatrix& estimates, const RatingsTable& ratings, std::ostream& out) {
    out << "concept,color_index,human,estimate\n";
    for (std::size_t c = 0; c < estimates.concepts.size(); ++c) {
        for (std::size_t j = 0; j < estimates.color_indices.size(); ++j) {
            const int idx = estimates.color_indices[j];
            out << estimates.concepts[c] << ',' << idx << ','
                << format_double(ratings.at(estimates.concepts[c], idx)) << ','
                << format_double(estimates.values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)))
                << '\n';
        }
    }
}

void write_summary_csv(std::span<const LabeledReport> reports, std::ostream& out) {
    if (reports.empty()) {
        throw InputError("no reports to summarize");
    }
    out << "scope";
    for (const auto& r : reports) {
        out << ',' << r.label;
    }
    out << '\n' << "overall";
    for (const auto& r : reports) {
        out << ',' << format_double(r.report.overall.r);
    }
    out << '\n';
    for (const auto& c : reports.front().report.concepts) {
        out << c.concept_name;
        for (const auto& r : reports) {
            const auto it = std::find_if(r.report.concepts.begin(), r.report.concepts.end(),
                                         [&](const ConceptScore& s) { return s.concept_name == c.concept_name; });
            out << ',';
            if (it != r.report.concepts.end()) {
                out << format_double(it->correlation.r);
            }
        }
        out << '\n';
    }
}

void write_comparisons_csv(std::span<const LabeledReport> reports, std::ostream& out) {
    out << "model_a,model_b,r_a,n_a,r_b,n_b,z,p\n";
    for (std::size_t a = 0; a < reports.size(); ++a) {
        for (std::size_t b = a + 1; b < reports.size(); ++b) {
            const auto& ra = reports[a].report.overall;
            const auto& rb = reports[b].report.overall;
            out << reports[a].label << ',' << reports[b].label << ',' << format_double(ra.r) << ',' << ra.n << ','
                << format_double(rb.r) << ',' << rb.n << ',';
            if (std::fabs(ra.r) < 1.0 && std::fabs(rb.r) < 1.0 && ra.n > 3 && rb.n > 3) {
                const ZTest t = fisher_z_independent(ra.r, ra.n, rb.r, rb.n);
                out << format_double(t.z) << ',' << format_double(t.p);
            } else {
                out << ',';
            }
            out << '\n';
        }
    }
}

}  // namespace colorassoc
