#include "colorassoc/features.hpp"

#include "colorassoc/error.hpp"
#include "colorassoc/io.hpp"
#include "colorassoc/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace colorassoc {
namespace {

constexpr std::size_t kNumRadii = std::size(kRadii);
constexpr std::size_t kNumHues = std::size(kHueTolerances);
constexpr std::size_t kNumWindows = 6;

void require_mask(const LabImage& img, const WindowMask& mask) {
    if (mask.width != img.width || mask.height != img.height) {
        throw InputError("window mask does not match image dimensions");
    }
}

std::size_t window_slot(const Window& w) {
    if (w.kind == WindowKind::Segmented) {
        return kNumWindows - 1;
    }
    const auto it = std::find(std::begin(kCenterPercents), std::end(kCenterPercents), w.percent);
    if (it == std::end(kCenterPercents)) {
        throw InputError(fmt::format("unsupported window percent {}", w.percent));
    }
    return static_cast<std::size_t>(it - std::begin(kCenterPercents));
}

template <std::size_t N>
std::size_t tolerance_slot(const int (&values)[N], int v, std::string_view what) {
    const auto it = std::find(std::begin(values), std::end(values), v);
    if (it == std::end(values)) {
        throw InputError(fmt::format("{} {} is not a catalog tolerance", what, v));
    }
    return static_cast<std::size_t>(it - std::begin(values));
}

// Index of the smallest tolerance admitting `v`, or N when none does.
template <std::size_t N>
std::size_t first_admitting(const int (&values)[N], double v) {
    for (std::size_t i = 0; i < N; ++i) {
        if (v <= values[i]) {
            return i;
        }
    }
    return N;
}

int parse_tolerance(std::string_view token, std::string_view prefix, std::string_view id) {
    if (token.substr(0, prefix.size()) != prefix) {
        throw InputError(fmt::format("unknown feature id '{}'", id));
    }
    return static_cast<int>(io::parse_int(token.substr(prefix.size()), fmt::format("feature id '{}'", id)));
}

Window parse_window(std::string_view token, std::string_view id) {
    if (token == "seg") {
        return Window::segmented();
    }
    const int p = parse_tolerance(token, "w", id);
    if (std::find(std::begin(kCenterPercents), std::end(kCenterPercents), p) == std::end(kCenterPercents)) {
        throw InputError(fmt::format("unknown window in feature id '{}'", id));
    }
    return Window::center(p);
}

}  // namespace

std::string FeatureSpec::id() const {
    const std::string w = window_token(window);
    switch (kind) {
        case FeatureKind::Ball: return fmt::format("ball_dr{}_{}", radius, w);
        case FeatureKind::Sector: return fmt::format("sector_dr{}_dh{}_{}", radius, hue_tolerance, w);
        case FeatureKind::Category: return fmt::format("cat_{}", w);
    }
    return {};
}

FeatureSpec FeatureSpec::parse(std::string_view id) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = id.find('_', start);
        parts.push_back(id.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    FeatureSpec f;
    if (parts.size() == 3 && parts[0] == "ball") {
        f = ball(parse_tolerance(parts[1], "dr", id), parse_window(parts[2], id));
    } else if (parts.size() == 4 && parts[0] == "sector") {
        f = sector(parse_tolerance(parts[1], "dr", id), parse_tolerance(parts[2], "dh", id),
                   parse_window(parts[3], id));
    } else if (parts.size() == 2 && parts[0] == "cat") {
        f = category(parse_window(parts[1], id));
    } else {
        throw InputError(fmt::format("unknown feature id '{}'", id));
    }
    if (f.kind != FeatureKind::Category) {
        tolerance_slot(kRadii, f.radius, "radius");
    }
    if (f.kind == FeatureKind::Sector) {
        tolerance_slot(kHueTolerances, f.hue_tolerance, "hue tolerance");
    }
    return f;
}

std::string_view stage_name(CatalogStage s) {
    switch (s) {
        case CatalogStage::BallOnly: return "ball_only";
        case CatalogStage::BallSector: return "ball_sector";
        case CatalogStage::Full: return "full";
    }
    return "full";
}

CatalogStage parse_stage(std::string_view name) {
    for (auto s : {CatalogStage::BallOnly, CatalogStage::BallSector, CatalogStage::Full}) {
        if (stage_name(s) == name) {
            return s;
        }
    }
    throw InputError(fmt::format("unknown catalog stage '{}' (ball_only, ball_sector, full)", name));
}

FeatureCatalog catalog(CatalogStage stage) {
    FeatureCatalog c;
    c.stage = stage;
    const auto windows = all_windows();
    for (int r : kRadii) {
        for (const auto& w : windows) {
            c.features.push_back(FeatureSpec::ball(r, w));
        }
    }
    if (stage == CatalogStage::BallOnly) {
        return c;
    }
    for (int r : kRadii) {
        for (int h : kHueTolerances) {
            for (const auto& w : windows) {
                c.features.push_back(FeatureSpec::sector(r, h, w));
            }
        }
    }
    if (stage == CatalogStage::BallSector) {
        return c;
    }
    for (const auto& w : windows) {
        c.features.push_back(FeatureSpec::category(w));
    }
    return c;
}

double eval_ball(const LabImage& img, const WindowMask& mask, const LabColor& target, double radius) {
    require_mask(img, mask);
    std::size_t total = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!mask.bits[i]) {
            continue;
        }
        ++total;
        if (delta_e_76(img.pixels[i], target) <= radius) {
            ++hits;
        }
    }
    if (total == 0) {
        throw InputError("empty window mask");
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

double eval_sector(const LabImage& img, const WindowMask& mask, const LchColor& target, double radius,
                   double hue_tolerance) {
    require_mask(img, mask);
    const bool any_hue = is_achromatic(target);
    std::size_t total = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!mask.bits[i]) {
            continue;
        }
        ++total;
        const LchColor p = lab_to_lch(img.pixels[i]);
        if (std::fabs(p.L - target.L) <= radius && std::fabs(p.c - target.c) <= radius &&
            (any_hue || hue_delta(p.h, target.h) <= hue_tolerance)) {
            ++hits;
        }
    }
    if (total == 0) {
        throw InputError("empty window mask");
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

double eval_category(std::span<const BasicColorTerm> categories, const WindowMask& mask,
                     BasicColorTerm target) {
    if (categories.size() != mask.bits.size()) {
        throw InputError("category grid does not match mask dimensions");
    }
    std::size_t total = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (mask.bits[i]) {
            ++total;
            hits += categories[i] == target ? 1 : 0;
        }
    }
    if (total == 0) {
        throw InputError("empty window mask");
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

double eval_category(const LabImage& img, const WindowMask& mask, BasicColorTerm target,
                     const CategoryModel& model) {
    require_mask(img, mask);
    return eval_category(categorize_image(model, img), mask, target);
}

PreparedImage prepare_image(LabImage img, const CategoryModel& model, const SegmentationParams& seg) {
    PreparedImage p;
    p.lch.resize(img.size());
    std::transform(img.pixels.begin(), img.pixels.end(), p.lch.begin(), lab_to_lch);
    p.categories = categorize_image(model, img);
    for (int pct : kCenterPercents) {
        p.masks.push_back(center_window(pct, img.width, img.height));
    }
    p.masks.push_back(segment_figure(img, seg));
    p.lab = std::move(img);
    return p;
}

std::vector<TargetColor> prepare_targets(const ColorTable& colors, const CategoryModel& model) {
    std::vector<TargetColor> out;
    out.reserve(colors.size());
    for (const auto& e : colors.entries) {
        out.push_back({e.index, e.lab, e.lch, model.categorize(e.lab)});
    }
    return out;
}

void evaluate_features(const PreparedImage& img, const TargetColor& target,
                       std::span<const FeatureSpec> features, std::span<double> out) {
    if (out.size() != features.size()) {
        throw InputError("output span does not match feature count");
    }
    if (img.masks.size() != kNumWindows) {
        throw InputError("prepared image must carry six window masks");
    }
    // Histograms over the smallest admitting tolerance; cumulative sums give
    // the counts for every tolerance at once.
    std::array<std::array<std::size_t, kNumRadii + 1>, kNumWindows> ball{};
    std::array<std::array<std::array<std::size_t, kNumHues + 1>, kNumRadii + 1>, kNumWindows> sector{};
    std::array<std::size_t, kNumWindows> cat{};
    std::array<std::size_t, kNumWindows> total{};

    const bool any_hue = is_achromatic(target.lch);
    const std::size_t n = img.lab.size();
    for (std::size_t i = 0; i < n; ++i) {
        const LabColor& p = img.lab.pixels[i];
        const LchColor& q = img.lch[i];
        const std::size_t rb = first_admitting(kRadii, delta_e_76(p, target.lab));
        const double spread = std::max(std::fabs(q.L - target.lch.L), std::fabs(q.c - target.lch.c));
        const std::size_t rs = first_admitting(kRadii, spread);
        const std::size_t hs = any_hue ? 0 : first_admitting(kHueTolerances, hue_delta(q.h, target.lch.h));
        const bool same_term = img.categories[i] == target.term;
        for (std::size_t w = 0; w < kNumWindows; ++w) {
            if (!img.masks[w].bits[i]) {
                continue;
            }
            ++total[w];
            ++ball[w][rb];
            ++sector[w][rs][hs];
            cat[w] += same_term ? 1 : 0;
        }
    }

    for (std::size_t f = 0; f < features.size(); ++f) {
        const FeatureSpec& spec = features[f];
        const std::size_t w = window_slot(spec.window);
        if (total[w] == 0) {
            throw InputError("empty window mask");
        }
        std::size_t hits = 0;
        switch (spec.kind) {
            case FeatureKind::Ball: {
                const std::size_t r = tolerance_slot(kRadii, spec.radius, "radius");
                for (std::size_t k = 0; k <= r; ++k) {
                    hits += ball[w][k];
                }
                break;
            }
            case FeatureKind::Sector: {
                const std::size_t r = tolerance_slot(kRadii, spec.radius, "radius");
                const std::size_t h = tolerance_slot(kHueTolerances, spec.hue_tolerance, "hue tolerance");
                for (std::size_t a = 0; a <= r; ++a) {
                    for (std::size_t b = 0; b <= h; ++b) {
                        hits += sector[w][a][b];
                    }
                }
                break;
            }
            case FeatureKind::Category: hits = cat[w]; break;
        }
        out[f] = static_cast<double>(hits) / static_cast<double>(total[w]);
    }
}

Eigen::MatrixXd image_feature_block(const PreparedImage& img, std::span<const TargetColor> targets,
                                    std::span<const FeatureSpec> features) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> block(
        static_cast<Eigen::Index>(targets.size()), static_cast<Eigen::Index>(features.size()));
    for (std::size_t t = 0; t < targets.size(); ++t) {
        evaluate_features(img, targets[t], features,
                          std::span<double>(block.row(static_cast<Eigen::Index>(t)).data(), features.size()));
    }
    return block;
}

std::vector<std::string> DesignMatrix::concepts() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (out.empty() || out.back() != r.concept_name) {
            out.push_back(r.concept_name);
        }
    }
    return out;
}

std::size_t DesignMatrix::column_of(const FeatureSpec& f) const {
    const auto it = std::find(features.begin(), features.end(), f);
    if (it == features.end()) {
        throw InputError("design matrix has no column " + f.id());
    }
    return static_cast<std::size_t>(it - features.begin());
}

DesignMatrix build_design_matrix(const CorpusManifest& manifest, const ColorTable& colors,
                                 const FeatureCatalog& cat, const CategoryModel& model,
                                 const RatingsTable* ratings, const BuildOptions& options) {
    if (manifest.records.empty()) {
        throw InputError("manifest has no images");
    }
    if (colors.size() == 0 || cat.size() == 0) {
        throw InputError("need at least one color and one feature");
    }
    std::vector<const ImageRecord*> records;
    for (const auto& r : manifest.records) {
        records.push_back(&r);
    }
    std::sort(records.begin(), records.end(), [](const ImageRecord* a, const ImageRecord* b) {
        return std::tie(a->concept_name, a->rank) < std::tie(b->concept_name, b->rank);
    });

    std::vector<std::size_t> rating_rows(records.size());
    std::vector<std::size_t> rating_cols(colors.size());
    if (ratings != nullptr) {
        for (std::size_t j = 0; j < colors.size(); ++j) {
            const auto c = ratings->color_column(colors.entries[j].index);
            if (!c) {
                throw InputError(fmt::format("ratings have no column for color {}", colors.entries[j].index));
            }
            rating_cols[j] = *c;
        }
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto r = ratings->concept_row(records[i]->concept_name);
            if (!r) {
                throw InputError(fmt::format("no ratings for concept '{}'", records[i]->concept_name));
            }
            rating_rows[i] = *r;
        }
    }

    const auto targets = prepare_targets(colors, model);
    const std::size_t n_col = colors.size();
    const auto n_rows = static_cast<Eigen::Index>(records.size() * n_col);

    DesignMatrix m;
    m.features = cat.features;
    m.X.resize(n_rows, static_cast<Eigen::Index>(cat.size()));
    m.rows.resize(static_cast<std::size_t>(n_rows));
    if (ratings != nullptr) {
        m.y = Eigen::VectorXd(n_rows);
    }

    parallel_for(records.size(), options.jobs, [&](std::size_t i) {
        const ImageRecord& rec = *records[i];
        PreparedImage img;
        try {
            img = prepare_image(normalize_image_file(manifest.resolve(rec)), model, options.segmentation);
        } catch (const Error& e) {
            throw InputError(fmt::format("{} #{}: {}", rec.concept_name, rec.rank, e.what()));
        }
        const Eigen::MatrixXd block = image_feature_block(img, targets, cat.features);
        const auto base = static_cast<Eigen::Index>(i * n_col);
        m.X.middleRows(base, static_cast<Eigen::Index>(n_col)) = block;
        for (std::size_t j = 0; j < n_col; ++j) {
            const auto row = static_cast<std::size_t>(base) + j;
            m.rows[row] = {rec.concept_name, rec.rank, targets[j].index};
            if (ratings != nullptr) {
                (*m.y)(static_cast<Eigen::Index>(row)) =
                    ratings->values(static_cast<Eigen::Index>(rating_rows[i]),
                                    static_cast<Eigen::Index>(rating_cols[j]));
            }
        }
    });
    return m;
}

void write_design_matrix_csv(const DesignMatrix& m, std::ostream& out) {
    out << "concept,rank,color_index";
    for (const auto& f : m.features) {
        out << ',' << f.id();
    }
    out << ",y\n";
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        const auto& r = m.rows[i];
        out << r.concept_name << ',' << r.rank << ',' << r.color_index;
        for (Eigen::Index j = 0; j < m.X.cols(); ++j) {
            out << ',' << io::format_double(m.X(static_cast<Eigen::Index>(i), j));
        }
        out << ',';
        if (m.y) {
            out << io::format_double((*m.y)(static_cast<Eigen::Index>(i)));
        }
        out << '\n';
    }
}

DesignMatrix read_design_matrix_csv(const std::filesystem::path& path) {
    const std::string where = path.string();
    std::istringstream in(io::read_file(path));
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError(where + ": empty design matrix");
    }
    const auto header = io::split_csv_line(line);
    if (header.size() < 5 || header[0] != "concept" || header[1] != "rank" || header[2] != "color_index" ||
        header.back() != "y") {
        throw InputError(where + ": header must be concept,rank,color_index,<features...>,y");
    }
    DesignMatrix m;
    for (std::size_t j = 3; j + 1 < header.size(); ++j) {
        m.features.push_back(FeatureSpec::parse(header[j]));
    }
    const std::size_t n_feat = m.features.size();
    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t with_y = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::trim(line).empty()) {
            continue;
        }
        const auto f = io::split_csv_line(line);
        if (f.size() != header.size()) {
            throw InputError(fmt::format("{} line {}: expected {} fields", where, line_no, header.size()));
        }
        m.rows.push_back({f[0], static_cast<int>(io::parse_int(f[1], where)),
                          static_cast<int>(io::parse_int(f[2], where))});
        for (std::size_t j = 0; j < n_feat; ++j) {
            xs.push_back(io::parse_double(f[3 + j], where));
        }
        if (!f.back().empty()) {
            ys.push_back(io::parse_double(f.back(), where));
            ++with_y;
        }
    }
    if (m.rows.empty()) {
        throw InputError(where + ": design matrix has no rows");
    }
    if (with_y != 0 && with_y != m.rows.size()) {
        throw InputError(where + ": y column is only partially filled");
    }
    const auto n = static_cast<Eigen::Index>(m.rows.size());
    m.X = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        xs.data(), n, static_cast<Eigen::Index>(n_feat));
    if (with_y != 0) {
        m.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
    }
    return m;
}

std::string corpus_digest(const CorpusManifest& manifest) {
    std::string acc;
    for (const auto& r : manifest.records) {
        acc += fmt::format("{}\n{}\n{}\n{}\n", r.concept_name, r.rank, r.path,
                           io::sha256_hex(io::read_file(manifest.resolve(r))));
    }
    return io::sha256_hex(acc);
}

}  // namespace colorassoc

#include "json_util.hpp"

namespace colorassoc {

std::string metadata_to_json(const MatrixMetadata& m) {
    nlohmann::ordered_json j;
    j["stage"] = stage_name(m.stage);
    j["color_table"] = m.color_table;
    j["category_model_version"] = m.category_model_version;
    j["corpus_digest"] = m.corpus_digest;
    j["matrix_sha256"] = m.matrix_sha256;
    j["segmentation"] = detail::segmentation_json(m.segmentation);
    return j.dump(2) + "\n";
}

MatrixMetadata metadata_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        MatrixMetadata m;
        m.stage = parse_stage(j.at("stage").get<std::string>());
        m.color_table = j.at("color_table").get<std::string>();
        m.category_model_version = j.at("category_model_version").get<std::string>();
        m.corpus_digest = j.at("corpus_digest").get<std::string>();
        m.matrix_sha256 = j.at("matrix_sha256").get<std::string>();
        m.segmentation = detail::segmentation_from_json(j.at("segmentation"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed design matrix metadata: ") + e.what());
    }
}

}  // namespace colorassoc
