#pragma once

#include "colorassoc/datasets.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace colorassoc {

struct Correlation {
    double r = 0.0;
    double p = 1.0;  ///< two-tailed
    std::size_t n = 0;
};

/// Sample Pearson correlation; p from Student's t with n-2 degrees of freedom.
/// Throws InputError on length mismatch or n < 3, NumericError on zero variance.
Correlation pearson_r(std::span<const double> xs, std::span<const double> ys);

struct ZTest {
    double z = 0.0;
    double p = 1.0;  ///< two-tailed normal
};

/// Difference of two correlations from independent samples via Fisher's z.
ZTest fisher_z_independent(double r1, std::size_t n1, double r2, std::size_t n2);

struct ConceptScore {
    std::string concept_name;
    Correlation correlation;
    double sse = 0.0;
};

struct EvaluationReport {
    Correlation overall;
    std::vector<ConceptScore> concepts;  ///< in estimate-matrix order
};

/// Matches estimates to ratings by concept name and color index. Every
/// estimated concept/color must be rated, and vice versa.
EvaluationReport evaluate_model(const ConceptColorMatrix& estimates, const RatingsTable& ratings);

/// Header scope,r,p,n,sse; first row is "overall".
void write_report_csv(const EvaluationReport& report, std::ostream& out);
std::string report_summary_json(const EvaluationReport& report);

/// One row per (concept, color): concept,color_index,human,estimate.
void write_scatter_csv(const ConceptColorMatrix& estimates, const RatingsTable& ratings, std::ostream& out);

struct LabeledReport {
    std::string label;
    EvaluationReport report;
};

/// Rows are "overall" and then each concept; one r column per model.
void write_summary_csv(std::span<const LabeledReport> reports, std::ostream& out);

/// Fisher z between the overall correlations of every pair of models.
void write_comparisons_csv(std::span<const LabeledReport> reports, std::ostream& out);

}  // namespace colorassoc
