#pragma once

#include "colorassoc/color.hpp"
#include "colorassoc/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace colorassoc {

enum class BasicColorTerm : std::uint8_t {
    Red,
    Green,
    Blue,
    Yellow,
    Black,
    White,
    Gray,
    Orange,
    Purple,
    Brown,
    Pink,
};

inline constexpr std::array<BasicColorTerm, 11> kAllTerms{
    BasicColorTerm::Red,   BasicColorTerm::Green,  BasicColorTerm::Blue,
    BasicColorTerm::Yellow, BasicColorTerm::Black, BasicColorTerm::White,
    BasicColorTerm::Gray,  BasicColorTerm::Orange, BasicColorTerm::Purple,
    BasicColorTerm::Brown, BasicColorTerm::Pink,
};

std::string_view term_name(BasicColorTerm t);
std::optional<BasicColorTerm> parse_term(std::string_view name);

/// One row of a rule table. Lightness and chroma ranges are half-open
/// [min, max); the hue range [h_min, h_max) wraps through 0 when h_min > h_max.
struct CategoryRule {
    double L_min = 0.0;
    double L_max = 0.0;
    double c_min = 0.0;
    double c_max = 0.0;
    double h_min = 0.0;
    double h_max = 360.0;
    BasicColorTerm term = BasicColorTerm::Gray;

    bool matches(const LchColor& c) const;
};

/// The shipped rule table; first matching rule wins.
std::vector<CategoryRule> default_category_rules();

void write_category_rules(std::span<const CategoryRule> rules, std::ostream& out);

/// Dense lookup over a quantized Lab grid. Each cell holds the term of its
/// center color; lookups snap to the nearest cell center and clamp at the
/// grid edges.
class CategoryModel {
public:
    static constexpr double kDefaultStep = 5.0;
    static constexpr double kLMin = 0.0;
    static constexpr double kLMax = 100.0;
    static constexpr double kAbMin = -130.0;
    static constexpr double kAbMax = 130.0;

    /// Throws InputError if any cell center matches no rule or some term has no rule.
    static CategoryModel compile(std::span<const CategoryRule> rules, std::string source,
                                 std::string version, double step = kDefaultStep);

    BasicColorTerm categorize(const LabColor& c) const;

    double step() const { return step_; }
    const std::string& source() const { return source_; }
    const std::string& version() const { return version_; }
    std::size_t cell_count() const { return cells_.size(); }
    std::span<const BasicColorTerm> cells() const { return cells_; }

    /// Binary cache: magic, format version, grid geometry, metadata, cells.
    void save_compiled(const std::filesystem::path& path) const;
    static CategoryModel load_compiled(const std::filesystem::path& path);

private:
    double step_ = kDefaultStep;
    int n_l_ = 0;
    int n_ab_ = 0;
    std::string source_;
    std::string version_;
    std::vector<BasicColorTerm> cells_;

    std::size_t cell_of(const LabColor& c) const;
};

const CategoryModel& default_category_model();

/// Reads a rule CSV (Lmin,Lmax,cmin,cmax,hmin,hmax,term) or a compiled cache.
CategoryModel load_category_model(const std::filesystem::path& path);

BasicColorTerm categorize(const CategoryModel& model, const LabColor& c);

std::vector<BasicColorTerm> categorize_image(const CategoryModel& model, const LabImage& img);

}  // namespace colorassoc
