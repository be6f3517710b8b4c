#pragma once

#include "colorassoc/color.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace colorassoc {

struct ColorEntry {
    int index = 0;
    std::string label;
    XyY xyy;
    LabColor lab;
    LchColor lch;
    WhitePoint white;
};

/// An ordered palette of target colors. Indices are 1-based and contiguous.
struct ColorTable {
    std::string name;
    std::vector<ColorEntry> entries;

    std::size_t size() const { return entries.size(); }
    const ColorEntry& at_index(int index) const;
};

inline constexpr WhitePoint kBcpWhite{0.312, 0.318, 116.0};

/// University of Wisconsin 58: a uniform dE=25 CIELAB grid, D65 white.
ColorTable builtin_uw58();

/// Berkeley Color Project 37, white point (0.312, 0.318, 116).
ColorTable builtin_bcp37();

/// Resolves "uw58", "bcp37", or a path to a color-table CSV.
ColorTable resolve_color_table(const std::string& choice);

/// Columns: index,label,x,y,Y,L,a,b,c,h. Lab/Lch are read as given.
ColorTable load_color_table(const std::filesystem::path& path, const WhitePoint& white = kD65);
void write_color_table(const ColorTable& table, std::ostream& out);

/// Largest disagreement between each entry's stored Lab/Lch and the values
/// recomputed from its xyY. Hue is only compared for chromatic entries.
struct ConsistencyReport {
    double max_lab_error = 0.0;
    double max_chroma_error = 0.0;
    double max_hue_error = 0.0;
};
ConsistencyReport check_consistency(const ColorTable& table);

/// Concept x color matrix: mean human ratings, or model estimates.
///
/// values(i, j) belongs to concepts[i] and the color with index
/// color_indices[j]. The CSV form is one row per color: first column the
/// color index, then one column per concept.
struct ConceptColorMatrix {
    std::vector<std::string> concepts;
    std::vector<int> color_indices;
    Eigen::MatrixXd values;
    std::string color_table;

    std::optional<std::size_t> concept_row(std::string_view concept_name) const;
    std::optional<std::size_t> color_column(int color_index) const;
    double at(std::string_view concept_name, int color_index) const;
};

using RatingsTable = ConceptColorMatrix;

/// Reads a ratings CSV aligned to `colors`. Every cell must lie in [0,1].
RatingsTable load_ratings(const std::filesystem::path& path, const ColorTable& colors);

/// Same layout as load_ratings without the [0,1] bound; used for estimates.
ConceptColorMatrix load_matrix_csv(const std::filesystem::path& path);

void write_matrix_csv(const ConceptColorMatrix& m, std::ostream& out);
void write_matrix_csv(const ConceptColorMatrix& m, const std::filesystem::path& path);

}  // namespace colorassoc
