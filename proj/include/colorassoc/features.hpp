#pragma once

#include "colorassoc/categorization.hpp"
#include "colorassoc/color.hpp"
#include "colorassoc/corpus.hpp"
#include "colorassoc/datasets.hpp"
#include "colorassoc/image.hpp"

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace colorassoc {

inline constexpr int kRadii[] = {1, 10, 20, 30, 40};
inline constexpr int kHueTolerances[] = {5, 10, 20, 30, 40};

enum class FeatureKind { Ball, Sector, Category };

/// One column of the design matrix: a tolerance region around the target
/// color, evaluated over one spatial window.
///
/// Ball: Euclidean Lab distance <= radius.
/// Sector: |dL| <= radius, |dc| <= radius and hue difference <= hue_tolerance
///   (the hue test is dropped for achromatic targets).
/// Category: same basic color term as the target.
struct FeatureSpec {
    FeatureKind kind = FeatureKind::Ball;
    int radius = 0;
    int hue_tolerance = 0;
    Window window;

    static FeatureSpec ball(int dr, Window w) { return {FeatureKind::Ball, dr, 0, w}; }
    static FeatureSpec sector(int dr, int dh, Window w) { return {FeatureKind::Sector, dr, dh, w}; }
    static FeatureSpec category(Window w) { return {FeatureKind::Category, 0, 0, w}; }

    /// ball_dr40_w20, sector_dr40_dh30_seg, cat_w100, ...
    std::string id() const;
    /// Throws InputError on unknown ids or tolerances outside the catalog sets.
    static FeatureSpec parse(std::string_view id);

    auto operator<=>(const FeatureSpec&) const = default;
};

enum class CatalogStage { BallOnly, BallSector, Full };

std::string_view stage_name(CatalogStage s);
CatalogStage parse_stage(std::string_view name);

struct FeatureCatalog {
    CatalogStage stage = CatalogStage::Full;
    std::vector<FeatureSpec> features;

    std::size_t size() const { return features.size(); }
};

/// 30 ball / +150 sector / +6 category features, canonically ordered by
/// kind, then tolerances, then window.
FeatureCatalog catalog(CatalogStage stage);

/// Fraction of masked pixels within `radius` (inclusive) of the target.
double eval_ball(const LabImage& img, const WindowMask& mask, const LabColor& target, double radius);

double eval_sector(const LabImage& img, const WindowMask& mask, const LchColor& target, double radius,
                   double hue_tolerance);

double eval_category(const LabImage& img, const WindowMask& mask, BasicColorTerm target,
                     const CategoryModel& model);

/// Same as above with a precomputed per-pixel category grid.
double eval_category(std::span<const BasicColorTerm> categories, const WindowMask& mask,
                     BasicColorTerm target);

/// An image with everything features need: Lch pixels, categories, and the
/// six window masks in all_windows() order.
struct PreparedImage {
    LabImage lab;
    std::vector<LchColor> lch;
    std::vector<BasicColorTerm> categories;
    std::vector<WindowMask> masks;
};

PreparedImage prepare_image(LabImage img, const CategoryModel& model, const SegmentationParams& seg);

struct TargetColor {
    int index = 0;
    LabColor lab;
    LchColor lch;
    BasicColorTerm term = BasicColorTerm::Gray;
};

/// Targets use the table's published Lab/Lch; the term is looked up once per entry.
std::vector<TargetColor> prepare_targets(const ColorTable& colors, const CategoryModel& model);

/// Evaluates `features` for one image and one target in a single pass over
/// the pixels. Agrees exactly with the eval_* functions.
void evaluate_features(const PreparedImage& img, const TargetColor& target,
                       std::span<const FeatureSpec> features, std::span<double> out);

struct RowKey {
    std::string concept_name;
    int rank = 0;
    int color_index = 0;

    auto operator<=>(const RowKey&) const = default;
};

/// X over (concept, image rank, color index) rows; y replicates the mean
/// rating of each (concept, color) across that concept's images.
struct DesignMatrix {
    std::vector<RowKey> rows;
    std::vector<FeatureSpec> features;
    Eigen::MatrixXd X;
    std::optional<Eigen::VectorXd> y;

    std::vector<std::string> concepts() const;
    std::size_t column_of(const FeatureSpec& f) const;
};

struct BuildOptions {
    SegmentationParams segmentation;
    int jobs = 1;
};

/// Rows are ordered by (concept, rank, color index) regardless of the order
/// of manifest records. Throws if a concept lacks ratings or an image fails
/// to normalize.
DesignMatrix build_design_matrix(const CorpusManifest& manifest, const ColorTable& colors,
                                 const FeatureCatalog& catalog, const CategoryModel& model,
                                 const RatingsTable* ratings, const BuildOptions& options = {});

/// Features for every color of one image: result is colors x features.
Eigen::MatrixXd image_feature_block(const PreparedImage& img, std::span<const TargetColor> targets,
                                    std::span<const FeatureSpec> features);

/// Header: concept,rank,color_index,<feature ids>,y. The y field is empty
/// when the matrix carries no ratings.
void write_design_matrix_csv(const DesignMatrix& m, std::ostream& out);
DesignMatrix read_design_matrix_csv(const std::filesystem::path& path);

/// Hash over manifest records and image bytes.
std::string corpus_digest(const CorpusManifest& manifest);

}  // namespace colorassoc

namespace colorassoc {

/// Sidecar describing how a design matrix was produced.
struct MatrixMetadata {
    CatalogStage stage = CatalogStage::Full;
    std::string color_table;
    std::string category_model_version;
    std::string corpus_digest;
    std::string matrix_sha256;
    SegmentationParams segmentation;
};

std::string metadata_to_json(const MatrixMetadata& m);
MatrixMetadata metadata_from_json(std::string_view json);

}  // namespace colorassoc
