#include "colorassoc/error.hpp"
#include "colorassoc/features.hpp"
#include "colorassoc/io.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <random>
#include <set>
#include <sstream>

using namespace colorassoc;
namespace fs = std::filesystem;

TEST_CASE("catalog sizes and ids") {
    CHECK(catalog(CatalogStage::BallOnly).size() == 30);
    CHECK(catalog(CatalogStage::BallSector).size() == 180);
    const FeatureCatalog full = catalog(CatalogStage::Full);
    CHECK(full.size() == 186);
    std::set<std::string> ids;
    for (const auto& f : full.features) {
        ids.insert(f.id());
        CHECK(FeatureSpec::parse(f.id()) == f);
    }
    CHECK(ids.size() == 186);
    CHECK(full.features.front().id() == "ball_dr1_w20");
    CHECK(full.features.back().id() == "cat_seg");
    CHECK(FeatureSpec::parse("sector_dr40_dh30_seg") == FeatureSpec::sector(40, 30, Window::segmented()));
    for (const char* bad : {"ball_dr15_w20", "sector_dr10_w20", "cat_w50", "foo", "ball_dr10_w20_x", "sector_dr10_dh7_w20"}) {
        CHECK_THROWS_AS(FeatureSpec::parse(bad), InputError);
    }
    CHECK(parse_stage("ball_sector") == CatalogStage::BallSector);
    CHECK_THROWS_AS(parse_stage("sector"), InputError);
}

TEST_CASE("ball feature examples") {
    const LabColor t{50, 20, -10};
    const LabImage uniform(100, 100, t);
    const WindowMask all = center_window(100);
    for (int r : kRadii) {
        CHECK(eval_ball(uniform, all, t, r) == 1.0);
    }
    LabImage half(100, 100, t);
    for (std::size_t i = 0; i < half.size(); i += 2) {
        half.pixels[i] = LabColor{t.L, t.a + 100, t.b};
    }
    CHECK(eval_ball(half, all, t, 40) == 0.5);
    CHECK(eval_ball(half, all, t, 100) == 1.0);
}

TEST_CASE("sector feature examples") {
    const LchColor t{60, 40, 100};
    const LabImage uniform(100, 100, lch_to_lab(t));
    const WindowMask all = center_window(100);
    CHECK(eval_sector(uniform, all, lab_to_lch(lch_to_lab(t)), 1, 5) == 1.0);
    const LabImage off(100, 100, lch_to_lab({60, 40, 141}));
    CHECK(eval_sector(off, all, t, 40, 40) == 0.0);
    CHECK(eval_sector(off, all, t, 40, 30) == 0.0);
    // Achromatic target: hue is ignored, L and c still apply.
    const LchColor gray{60, 0, 0};
    CHECK(eval_sector(off, all, gray, 40, 5) == 1.0);
    CHECK(eval_sector(off, all, gray, 30, 40) == 0.0);
}

namespace {

LabImage random_image(std::mt19937& rng, int side, const LabColor& target) {
    std::uniform_real_distribution<double> L(0, 100), ab(-100, 100), u(0, 1);
    std::uniform_int_distribution<int> axis(0, 2), step(-45, 45);
    LabImage img(side, side);
    for (auto& p : img.pixels) {
        const double pick = u(rng);
        if (pick < 0.5) {
            p = {L(rng), ab(rng), ab(rng)};
        } else {
            // Exact offsets along one axis land on tolerance boundaries.
            p = target;
            const double d = step(rng);
            const int ax = axis(rng);
            (ax == 0 ? p.L : ax == 1 ? p.a : p.b) += d;
        }
    }
    return img;
}

}  // namespace

TEST_CASE("ball and sector match the brute-force oracle") {
    std::mt19937 rng(2024);
    const ColorTable uw = builtin_uw58();
    const CategoryModel& cm = default_category_model();
    const auto targets = prepare_targets(uw, cm);
    const auto features = catalog(CatalogStage::Full).features;
    std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
    for (int trial = 0; trial < 40; ++trial) {
        const TargetColor& t = targets[pick(rng)];
        LabImage img = random_image(rng, 10, t.lab);
        SegmentationParams seg;
        seg.iterations = 20;
        const PreparedImage prep = prepare_image(img, cm, seg);
        std::vector<double> fast(features.size());
        evaluate_features(prep, t, features, fast);
        for (std::size_t f = 0; f < features.size(); ++f) {
            const FeatureSpec& spec = features[f];
            const WindowMask& mask = prep.masks[f % 6];
            REQUIRE(mask.window == spec.window);
            double slow = 0.0;
            if (spec.kind == FeatureKind::Ball) {
                slow = eval_ball(img, mask, t.lab, spec.radius);
                CHECK(slow == testsupport::oracle_ball(img, mask.bits, t.lab, spec.radius));
            } else if (spec.kind == FeatureKind::Sector) {
                slow = eval_sector(img, mask, t.lch, spec.radius, spec.hue_tolerance);
                CHECK(slow == testsupport::oracle_sector(img, mask.bits, t.lch, spec.radius, spec.hue_tolerance));
            } else {
                slow = eval_category(img, mask, t.term, cm);
            }
            CHECK(fast[f] == slow);
        }
    }
}

TEST_CASE("features grow with tolerance") {
    std::mt19937 rng(5);
    const auto targets = prepare_targets(builtin_uw58(), default_category_model());
    for (int trial = 0; trial < 10; ++trial) {
        const TargetColor& t = targets[static_cast<std::size_t>(trial) * 5];
        const LabImage img = random_image(rng, 20, t.lab);
        const WindowMask m = center_window(100, 20, 20);
        for (std::size_t i = 0; i + 1 < std::size(kRadii); ++i) {
            CHECK(eval_ball(img, m, t.lab, kRadii[i]) <= eval_ball(img, m, t.lab, kRadii[i + 1]));
            for (int h : kHueTolerances) {
                CHECK(eval_sector(img, m, t.lch, kRadii[i], h) <= eval_sector(img, m, t.lch, kRadii[i + 1], h));
            }
        }
    }
}

TEST_CASE("category features") {
    const CategoryModel& cm = default_category_model();
    const LabColor blue = srgb_to_lab({0, 0, 255});
    LabImage img(100, 100, srgb_to_lab({255, 255, 0}));
    for (std::size_t i = 0; i < 6000; ++i) {
        img.pixels[i] = blue;
    }
    CHECK(eval_category(img, center_window(100), BasicColorTerm::Blue, cm) == 0.6);
    CHECK(eval_category(LabImage(100, 100, LabColor{100, 0, 0}), center_window(100), BasicColorTerm::White, cm) ==
          1.0);

    // Every pair of same-term UW-58 targets gets the same value.
    const auto targets = prepare_targets(builtin_uw58(), cm);
    std::mt19937 rng(9);
    const LabImage rnd = random_image(rng, 100, {50, 0, 0});
    SegmentationParams seg;
    seg.iterations = 5;
    const PreparedImage prep = prepare_image(rnd, cm, seg);
    const auto full = catalog(CatalogStage::Full).features;
    const std::vector<FeatureSpec> cat_features(full.end() - 6, full.end());
    std::vector<std::vector<double>> values;
    for (const auto& t : targets) {
        std::vector<double> v(6);
        evaluate_features(prep, t, cat_features, v);
        values.push_back(v);
    }
    int pairs = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (std::size_t j = i + 1; j < targets.size(); ++j) {
            if (targets[i].term == targets[j].term) {
                CHECK(values[i] == values[j]);
                ++pairs;
            }
        }
    }
    CHECK(pairs > 0);
}

TEST_CASE("empty or mismatched masks are rejected") {
    LabImage img(10, 10);
    WindowMask m = center_window(100, 10, 10);
    std::fill(m.bits.begin(), m.bits.end(), 0);
    CHECK_THROWS_AS(eval_ball(img, m, {}, 10), InputError);
    CHECK_THROWS_AS(eval_ball(img, center_window(100), {}, 10), InputError);
}

namespace {

struct Fixture {
    fs::path dir;
    CorpusManifest manifest;
    RatingsTable ratings;
};

Fixture small_corpus(const std::string& name) {
    Fixture fx;
    fx.dir = testsupport::scratch_dir(name);
    const auto rows = testsupport::fruit_ratings({"lime", "blueberry"});
    const auto corpus = testsupport::write_mixture_corpus(fx.dir / "corpus", rows, builtin_uw58(), 3, 17);
    fx.ratings = rows;
    fx.manifest = scan_corpus(corpus.root, {});
    return fx;
}

}  // namespace

TEST_CASE("design matrix layout") {
    const Fixture fx = small_corpus("features_dm");
    const ColorTable uw = builtin_uw58();
    BuildOptions opts;
    opts.segmentation.iterations = 50;
    const DesignMatrix m =
        build_design_matrix(fx.manifest, uw, catalog(CatalogStage::Full), default_category_model(), &fx.ratings, opts);
    REQUIRE(m.X.rows() == 348);
    CHECK(m.X.cols() == 186);
    CHECK(m.rows.size() == 348);
    CHECK(std::is_sorted(m.rows.begin(), m.rows.end()));
    CHECK(m.rows.front().concept_name == "blueberry");
    CHECK(m.rows.front().rank == 1);
    CHECK(m.rows.front().color_index == 1);
    CHECK(m.concepts() == std::vector<std::string>{"blueberry", "lime"});
    REQUIRE(m.y.has_value());
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        CHECK((*m.y)(static_cast<Eigen::Index>(i)) == fx.ratings.at(m.rows[i].concept_name, m.rows[i].color_index));
    }
    CHECK((m.X.array() >= 0.0).all());
    CHECK((m.X.array() <= 1.0).all());

    opts.jobs = 4;
    const DesignMatrix par =
        build_design_matrix(fx.manifest, uw, catalog(CatalogStage::Full), default_category_model(), &fx.ratings, opts);
    CHECK(par.X == m.X);

    std::ostringstream out;
    write_design_matrix_csv(m, out);
    io::write_file(fx.dir / "dm.csv", out.str());
    const DesignMatrix back = read_design_matrix_csv(fx.dir / "dm.csv");
    CHECK(back.X == m.X);
    CHECK(*back.y == *m.y);
    CHECK(back.rows == m.rows);
    CHECK(back.features == m.features);

    const DesignMatrix no_y =
        build_design_matrix(fx.manifest, uw, catalog(CatalogStage::BallOnly), default_category_model(), nullptr, opts);
    CHECK_FALSE(no_y.y.has_value());
    CHECK(no_y.X.cols() == 30);

    const auto mango = testsupport::fruit_ratings({"mango"});
    CHECK_THROWS_AS(build_design_matrix(fx.manifest, uw, catalog(CatalogStage::BallOnly), default_category_model(),
                                        &mango, opts),
                    InputError);
}

TEST_CASE("uniform image of the only target color") {
    const fs::path dir = testsupport::scratch_dir("features_uniform");
    const Rgb8 rgb{40, 160, 90};
    const LabColor lab = srgb_to_lab(rgb);
    const LchColor lch = lab_to_lch(lab);
    io::write_file(dir / "one.csv", fmt::format("index,label,x,y,Y,L,a,b,c,h\n1,c1,0.3,0.3,20,{},{},{},{},{}\n",
                                                io::format_double(lab.L), io::format_double(lab.a),
                                                io::format_double(lab.b), io::format_double(lch.c),
                                                io::format_double(lch.h)));
    fs::create_directories(dir / "corpus" / "leaf");
    write_rgb_image(dir / "corpus" / "leaf" / "a.png", 100, 100, std::vector<Rgb8>(10000, rgb));
    const CorpusManifest manifest = scan_corpus(dir / "corpus", {});
    const DesignMatrix m = build_design_matrix(manifest, load_color_table(dir / "one.csv"),
                                               catalog(CatalogStage::Full), default_category_model(), nullptr, {});
    REQUIRE(m.X.rows() == 1);
    for (Eigen::Index j = 0; j < m.X.cols(); ++j) {
        CHECK(m.X(0, j) == 1.0);
    }
}
