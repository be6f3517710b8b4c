#include "colorassoc/datasets.hpp"

#include "builtin_tables.hpp"
#include "colorassoc/error.hpp"
#include "colorassoc/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace colorassoc {
namespace {

template <std::size_t N>
ColorTable from_rows(std::string name, const std::array<detail::BuiltinRow, N>& rows,
                     const WhitePoint& white) {
    ColorTable t;
    t.name = std::move(name);
    t.entries.reserve(N);
    for (const auto& r : rows) {
        t.entries.push_back({r.index, r.label, r.xyy, r.lab, r.lch, white});
    }
    return t;
}

std::vector<std::string> nonblank_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!io::trim(line).empty()) {
            lines.push_back(line);
        }
    }
    return lines;
}

}  // namespace

const ColorEntry& ColorTable::at_index(int index) const {
    if (index < 1 || static_cast<std::size_t>(index) > entries.size()) {
        throw InputError(fmt::format("color index {} not in table {}", index, name));
    }
    return entries[static_cast<std::size_t>(index - 1)];
}

ColorTable builtin_uw58() { return from_rows("uw58", detail::kUw58Rows, kD65); }

ColorTable builtin_bcp37() { return from_rows("bcp37", detail::kBcp37Rows, kBcpWhite); }

ColorTable resolve_color_table(const std::string& choice) {
    if (choice == "uw58") {
        return builtin_uw58();
    }
    if (choice == "bcp37") {
        return builtin_bcp37();
    }
    if (std::filesystem::is_regular_file(choice)) {
        return load_color_table(choice);
    }
    throw InputError("unknown color table '" + choice + "' (expected uw58, bcp37, or a CSV path)");
}

ColorTable load_color_table(const std::filesystem::path& path, const WhitePoint& white) {
    const auto lines = nonblank_lines(io::read_file(path));
    if (lines.empty()) {
        throw InputError("empty color table " + path.string());
    }
    const std::vector<std::string> expected{"index", "label", "x", "y", "Y", "L", "a", "b", "c", "h"};
    if (io::split_csv_line(lines.front()) != expected) {
        throw InputError("color table header must be index,label,x,y,Y,L,a,b,c,h");
    }
    ColorTable t;
    t.name = path.stem().string();
    const std::string where = path.string();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = io::split_csv_line(lines[i]);
        if (f.size() != expected.size()) {
            throw InputError(fmt::format("{} line {}: expected 10 fields", where, i + 1));
        }
        ColorEntry e;
        e.index = static_cast<int>(io::parse_int(f[0], where));
        if (e.index != static_cast<int>(i)) {
            throw InputError(fmt::format("{} line {}: indices must run 1..n in order", where, i + 1));
        }
        e.label = f[1];
        e.xyy = {io::parse_double(f[2], where), io::parse_double(f[3], where), io::parse_double(f[4], where)};
        e.lab = {io::parse_double(f[5], where), io::parse_double(f[6], where), io::parse_double(f[7], where)};
        e.lch = {e.lab.L, io::parse_double(f[8], where), io::parse_double(f[9], where)};
        e.white = white;
        t.entries.push_back(std::move(e));
    }
    if (t.entries.empty()) {
        throw InputError("color table has no rows: " + where);
    }
    return t;
}

void write_color_table(const ColorTable& table, std::ostream& out) {
    out << "index,label,x,y,Y,L,a,b,c,h\n";
    for (const auto& e : table.entries) {
        out << e.index << ',' << e.label << ',' << io::format_double(e.xyy.x) << ','
            << io::format_double(e.xyy.y) << ',' << io::format_double(e.xyy.Y) << ','
            << io::format_double(e.lab.L) << ',' << io::format_double(e.lab.a) << ','
            << io::format_double(e.lab.b) << ',' << io::format_double(e.lch.c) << ','
            << io::format_double(e.lch.h) << '\n';
    }
}

ConsistencyReport check_consistency(const ColorTable& table) {
    ConsistencyReport r;
    for (const auto& e : table.entries) {
        const LabColor lab = xyy_to_lab(e.xyy, e.white);
        const LchColor lch = lab_to_lch(lab);
        r.max_lab_error = std::max({r.max_lab_error, std::fabs(lab.L - e.lab.L),
                                    std::fabs(lab.a - e.lab.a), std::fabs(lab.b - e.lab.b)});
        r.max_chroma_error = std::max(r.max_chroma_error, std::fabs(lch.c - e.lch.c));
        if (e.lch.c > 0.0) {
            r.max_hue_error = std::max(r.max_hue_error, hue_delta(lch.h, e.lch.h));
        }
    }
    return r;
}

std::optional<std::size_t> ConceptColorMatrix::concept_row(std::string_view concept_name) const {
    const auto it = std::find(concepts.begin(), concepts.end(), concept_name);
    if (it == concepts.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - concepts.begin());
}

std::optional<std::size_t> ConceptColorMatrix::color_column(int color_index) const {
    const auto it = std::find(color_indices.begin(), color_indices.end(), color_index);
    if (it == color_indices.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - color_indices.begin());
}

double ConceptColorMatrix::at(std::string_view concept_name, int color_index) const {
    const auto r = concept_row(concept_name);
    const auto c = color_column(color_index);
    if (!r || !c) {
        throw InputError(fmt::format("no cell for concept '{}' color {}", concept_name, color_index));
    }
    return values(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(*c));
}

ConceptColorMatrix load_matrix_csv(const std::filesystem::path& path) {
    const std::string where = path.string();
    const auto lines = nonblank_lines(io::read_file(path));
    if (lines.size() < 2) {
        throw InputError(where + ": need a header and at least one color row");
    }
    const auto header = io::split_csv_line(lines.front());
    if (header.size() < 2) {
        throw InputError(where + ": header must list at least one concept");
    }
    ConceptColorMatrix m;
    m.concepts.assign(header.begin() + 1, header.end());
    std::set<std::string> seen;
    for (const auto& c : m.concepts) {
        if (c.empty()) {
            throw InputError(where + ": empty concept name in header");
        }
        if (!seen.insert(c).second) {
            throw InputError(where + ": duplicate concept '" + c + "'");
        }
    }
    const auto n_con = static_cast<Eigen::Index>(m.concepts.size());
    const auto n_col = static_cast<Eigen::Index>(lines.size() - 1);
    m.values.resize(n_con, n_col);
    std::set<int> indices;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = io::split_csv_line(lines[i]);
        if (f.size() != header.size()) {
            throw InputError(fmt::format("{} line {}: expected {} cells, found {}", where, i + 1,
                                         header.size(), f.size()));
        }
        const int idx = static_cast<int>(io::parse_int(f[0], where));
        if (!indices.insert(idx).second) {
            throw InputError(fmt::format("{}: duplicate color index {}", where, idx));
        }
        m.color_indices.push_back(idx);
        for (Eigen::Index c = 0; c < n_con; ++c) {
            const auto& cell = f[static_cast<std::size_t>(c) + 1];
            if (cell.empty()) {
                throw InputError(fmt::format("{} line {}: missing cell for '{}'", where, i + 1,
                                             m.concepts[static_cast<std::size_t>(c)]));
            }
            m.values(c, static_cast<Eigen::Index>(i - 1)) = io::parse_double(cell, where);
        }
    }
    return m;
}

RatingsTable load_ratings(const std::filesystem::path& path, const ColorTable& colors) {
    ConceptColorMatrix raw = load_matrix_csv(path);
    if (raw.color_indices.size() != colors.size()) {
        throw InputError(fmt::format("{}: {} color rows but table {} has {} colors", path.string(),
                                     raw.color_indices.size(), colors.name, colors.size()));
    }
    // Reorder columns into table order.
    RatingsTable t;
    t.concepts = raw.concepts;
    t.color_table = colors.name;
    t.values.resize(raw.values.rows(), static_cast<Eigen::Index>(colors.size()));
    for (std::size_t j = 0; j < colors.size(); ++j) {
        const int idx = colors.entries[j].index;
        const auto src = raw.color_column(idx);
        if (!src) {
            throw InputError(fmt::format("{}: missing row for color {}", path.string(), idx));
        }
        t.color_indices.push_back(idx);
        t.values.col(static_cast<Eigen::Index>(j)) = raw.values.col(static_cast<Eigen::Index>(*src));
    }
    for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
            const double v = t.values(i, j);
            if (v < 0.0 || v > 1.0) {
                throw InputError(fmt::format("{}: rating {} for '{}' color {} outside [0,1]",
                                             path.string(), v, t.concepts[static_cast<std::size_t>(i)],
                                             t.color_indices[static_cast<std::size_t>(j)]));
            }
        }
    }
    return t;
}

void write_matrix_csv(const ConceptColorMatrix& m, std::ostream& out) {
    out << "color";
    for (const auto& c : m.concepts) {
        out << ',' << c;
    }
    out << '\n';
    for (std::size_t j = 0; j < m.color_indices.size(); ++j) {
        out << m.color_indices[j];
        for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
            out << ',' << io::format_double(m.values(i, static_cast<Eigen::Index>(j)));
        }
        out << '\n';
    }
}

void write_matrix_csv(const ConceptColorMatrix& m, const std::filesystem::path& path) {
    std::ostringstream ss;
    write_matrix_csv(m, ss);
    io::write_file(path, ss.str());
}

}  // namespace colorassoc
