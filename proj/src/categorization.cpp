#include "colorassoc/categorization.hpp"

#include "colorassoc/error.hpp"
#include "colorassoc/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace colorassoc {
namespace {

constexpr std::array<std::string_view, 11> kTermNames{
    "red", "green", "blue", "yellow", "black", "white", "gray", "orange", "purple", "brown", "pink",
};

constexpr double kOpen = 1000.0;

constexpr char kMagic[4] = {'C', 'A', 'T', 'M'};
constexpr std::uint32_t kCacheFormat = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) {
        throw InputError("truncated category model cache");
    }
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& in) {
    const auto n = take<std::uint32_t>(in);
    if (n > (1u << 20)) {
        throw InputError("corrupt category model cache");
    }
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) {
        throw InputError("truncated category model cache");
    }
    return s;
}

int axis_cells(double lo, double hi, double step) {
    return static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
}

}  // namespace

std::string_view term_name(BasicColorTerm t) { return kTermNames[static_cast<std::size_t>(t)]; }

std::optional<BasicColorTerm> parse_term(std::string_view name) {
    for (std::size_t i = 0; i < kTermNames.size(); ++i) {
        if (kTermNames[i] == name) {
            return static_cast<BasicColorTerm>(i);
        }
    }
    if (name == "grey") {
        return BasicColorTerm::Gray;
    }
    return std::nullopt;
}

bool CategoryRule::matches(const LchColor& c) const {
    if (c.L < L_min || c.L >= L_max || c.c < c_min || c.c >= c_max) {
        return false;
    }
    if (h_min <= h_max) {
        return c.h >= h_min && c.h < h_max;
    }
    return c.h >= h_min || c.h < h_max;
}

std::vector<CategoryRule> default_category_rules() {
    using T = BasicColorTerm;
    return {
        // Achromatic band, split by lightness; near-black at any chroma.
        {0, 20, 0, 10, 0, 360, T::Black},
        {0, 8, 10, kOpen, 0, 360, T::Black},
        {20, 85, 0, 10, 0, 360, T::Gray},
        {85, kOpen, 0, 10, 0, 360, T::White},
        // Light reds and magentas.
        {60, kOpen, 10, kOpen, 330, 45, T::Pink},
        // Dark oranges and yellows, dull dark reds.
        {0, 55, 10, kOpen, 45, 80, T::Brown},
        {0, 55, 10, 40, 20, 45, T::Brown},
        {0, 55, 10, kOpen, 80, 100, T::Brown},
        {0, 50, 10, kOpen, 310, 345, T::Purple},
        // Hue wheel.
        {0, kOpen, 10, kOpen, 330, 45, T::Red},
        {0, kOpen, 10, kOpen, 45, 80, T::Orange},
        {0, kOpen, 10, kOpen, 80, 110, T::Yellow},
        {0, kOpen, 10, kOpen, 110, 195, T::Green},
        {0, kOpen, 10, kOpen, 195, 310, T::Blue},
        {0, kOpen, 10, kOpen, 310, 330, T::Purple},
    };
}

void write_category_rules(std::span<const CategoryRule> rules, std::ostream& out) {
    out << "Lmin,Lmax,cmin,cmax,hmin,hmax,term\n";
    for (const auto& r : rules) {
        out << io::format_double(r.L_min) << ',' << io::format_double(r.L_max) << ','
            << io::format_double(r.c_min) << ',' << io::format_double(r.c_max) << ','
            << io::format_double(r.h_min) << ',' << io::format_double(r.h_max) << ','
            << term_name(r.term) << '\n';
    }
}

CategoryModel CategoryModel::compile(std::span<const CategoryRule> rules, std::string source,
                                     std::string version, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw InputError("category model quantization step must be positive");
    }
    std::set<BasicColorTerm> present;
    for (const auto& r : rules) {
        present.insert(r.term);
    }
    for (auto t : kAllTerms) {
        if (!present.contains(t)) {
            throw InputError(fmt::format("category rules have no mapping for term '{}'", term_name(t)));
        }
    }

    CategoryModel m;
    m.step_ = step;
    m.n_l_ = axis_cells(kLMin, kLMax, step);
    m.n_ab_ = axis_cells(kAbMin, kAbMax, step);
    m.source_ = std::move(source);
    m.version_ = std::move(version);
    m.cells_.resize(static_cast<std::size_t>(m.n_l_) * m.n_ab_ * m.n_ab_);
    std::size_t idx = 0;
    for (int li = 0; li < m.n_l_; ++li) {
        for (int ai = 0; ai < m.n_ab_; ++ai) {
            for (int bi = 0; bi < m.n_ab_; ++bi, ++idx) {
                const LabColor center{kLMin + li * step, kAbMin + ai * step, kAbMin + bi * step};
                const LchColor lch = lab_to_lch(center);
                const auto hit = std::find_if(rules.begin(), rules.end(),
                                              [&](const CategoryRule& r) { return r.matches(lch); });
                if (hit == rules.end()) {
                    throw InputError(fmt::format(
                        "category rules leave cell Lab({}, {}, {}) unassigned", center.L, center.a, center.b));
                }
                m.cells_[idx] = hit->term;
            }
        }
    }
    return m;
}

std::size_t CategoryModel::cell_of(const LabColor& c) const {
    auto snap = [this](double v, double lo, int n) {
        const double t = std::isfinite(v) ? (v - lo) / step_ : 0.0;
        const long i = std::lround(std::clamp(t, -1.0, static_cast<double>(n)));
        return static_cast<std::size_t>(std::clamp<long>(i, 0, n - 1));
    };
    const std::size_t li = snap(c.L, kLMin, n_l_);
    const std::size_t ai = snap(c.a, kAbMin, n_ab_);
    const std::size_t bi = snap(c.b, kAbMin, n_ab_);
    return (li * static_cast<std::size_t>(n_ab_) + ai) * static_cast<std::size_t>(n_ab_) + bi;
}

BasicColorTerm CategoryModel::categorize(const LabColor& c) const { return cells_[cell_of(c)]; }

void CategoryModel::save_compiled(const std::filesystem::path& path) const {
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, sizeof kMagic);
    put(out, kCacheFormat);
    put(out, step_);
    put(out, static_cast<std::int32_t>(n_l_));
    put(out, static_cast<std::int32_t>(n_ab_));
    put_string(out, source_);
    put_string(out, version_);
    out.write(reinterpret_cast<const char*>(cells_.data()), static_cast<std::streamsize>(cells_.size()));
    io::write_file(path, out.str());
}

CategoryModel CategoryModel::load_compiled(const std::filesystem::path& path) {
    std::istringstream in(io::read_file(path), std::ios::binary);
    char magic[4] = {};
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw InputError("not a compiled category model: " + path.string());
    }
    if (take<std::uint32_t>(in) != kCacheFormat) {
        throw InputError("unsupported category model cache version: " + path.string());
    }
    CategoryModel m;
    m.step_ = take<double>(in);
    m.n_l_ = take<std::int32_t>(in);
    m.n_ab_ = take<std::int32_t>(in);
    if (!(m.step_ > 0.0) || m.n_l_ != axis_cells(kLMin, kLMax, m.step_) ||
        m.n_ab_ != axis_cells(kAbMin, kAbMax, m.step_)) {
        throw InputError("category model cache has inconsistent geometry: " + path.string());
    }
    m.source_ = take_string(in);
    m.version_ = take_string(in);
    m.cells_.resize(static_cast<std::size_t>(m.n_l_) * m.n_ab_ * m.n_ab_);
    in.read(reinterpret_cast<char*>(m.cells_.data()), static_cast<std::streamsize>(m.cells_.size()));
    if (!in) {
        throw InputError("category model cache is missing cells: " + path.string());
    }
    for (auto t : m.cells_) {
        if (static_cast<std::size_t>(t) >= kAllTerms.size()) {
            throw InputError("category model cache holds an unknown term: " + path.string());
        }
    }
    return m;
}

const CategoryModel& default_category_model() {
    static const CategoryModel model = [] {
        const auto rules = default_category_rules();
        return CategoryModel::compile(rules, "builtin:lch-rules", "default-1");
    }();
    return model;
}

CategoryModel load_category_model(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    if (text.size() >= 4 && std::memcmp(text.data(), kMagic, 4) == 0) {
        return CategoryModel::load_compiled(path);
    }
    std::istringstream in(text);
    std::string line;
    std::vector<CategoryRule> rules;
    bool header = true;
    int line_no = 0;
    const std::string where = path.string();
    while (std::getline(in, line)) {
        ++line_no;
        if (io::trim(line).empty() || io::trim(line).front() == '#') {
            continue;
        }
        const auto f = io::split_csv_line(line);
        if (header) {
            const std::vector<std::string> expected{"Lmin", "Lmax", "cmin", "cmax", "hmin", "hmax", "term"};
            if (f != expected) {
                throw InputError(where + ": header must be Lmin,Lmax,cmin,cmax,hmin,hmax,term");
            }
            header = false;
            continue;
        }
        if (f.size() != 7) {
            throw InputError(fmt::format("{} line {}: expected 7 fields", where, line_no));
        }
        const auto term = parse_term(f[6]);
        if (!term) {
            throw InputError(fmt::format("{} line {}: unknown color term '{}'", where, line_no, f[6]));
        }
        rules.push_back({io::parse_double(f[0], where), io::parse_double(f[1], where),
                         io::parse_double(f[2], where), io::parse_double(f[3], where),
                         io::parse_double(f[4], where), io::parse_double(f[5], where), *term});
    }
    if (rules.empty()) {
        throw InputError(where + ": no category rules");
    }
    return CategoryModel::compile(rules, path.filename().string(), "rules-sha256:" + io::sha256_hex(text).substr(0, 16));
}

BasicColorTerm categorize(const CategoryModel& model, const LabColor& c) { return model.categorize(c); }

std::vector<BasicColorTerm> categorize_image(const CategoryModel& model, const LabImage& img) {
    std::vector<BasicColorTerm> out(img.size());
    std::transform(img.pixels.begin(), img.pixels.end(), out.begin(),
                   [&](const LabColor& c) { return model.categorize(c); });
    return out;
}

}  // namespace colorassoc
