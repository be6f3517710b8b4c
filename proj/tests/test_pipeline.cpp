#include "colorassoc/error.hpp"
#include "colorassoc/io.hpp"
#include "colorassoc/pipeline.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

using namespace colorassoc;
namespace fs = std::filesystem;

TEST_CASE("config file parsing") {
    const auto kv = parse_config_text("# comment\ncorpus = /data/fruit\nk=3  # trailing\n\nconcepts = a, b ,c\n");
    CHECK(kv.at("corpus") == "/data/fruit");
    CHECK(kv.at("k") == "3");
    RunConfig c;
    apply_config(c, kv);
    CHECK(c.k == 3);
    CHECK(c.concepts == std::vector<std::string>{"a", "b", "c"});
    CHECK_THROWS_AS(parse_config_text("k 3\n"), InputError);
    CHECK_THROWS_AS(parse_config_text("k=3\nk=4\n"), InputError);
    CHECK_THROWS_AS(apply_config(c, {{"colour", "x"}}), InputError);
    CHECK_THROWS_AS(apply_config(c, {{"k", "four"}}), InputError);
    CHECK_THROWS_AS(apply_config(c, {{"stage", "sector"}}), InputError);
}

TEST_CASE("labeled paths") {
    const LabeledPath a = parse_labeled_path("ball=out/est.csv");
    CHECK(a.label == "ball");
    CHECK(a.path == fs::path("out/est.csv"));
    CHECK(parse_labeled_path("runs/full.csv").label == "full");
    CHECK_THROWS_AS(parse_labeled_path("=x.csv"), InputError);
}

TEST_CASE("pipeline on a small corpus") {
    const fs::path dir = testsupport::scratch_dir("pipeline_small");
    const auto rows = testsupport::fruit_ratings({"lime", "blueberry", "mango"});
    const auto corpus = testsupport::write_mixture_corpus(dir / "corpus", rows, builtin_uw58(), 3, 21);
    RunConfig cfg;
    cfg.corpus = corpus.root;
    cfg.ratings = corpus.ratings;
    cfg.output = dir / "out";
    cfg.segmentation_iterations = 50;
    cfg.stage = CatalogStage::BallOnly;
    cfg.k = 2;

    run_featurize(cfg);
    const fs::path matrix = cfg.output / "design_matrix.csv";
    const std::string text = io::read_file(matrix);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 3 * 58);
    CHECK(fs::exists(cfg.output / "manifest.json"));
    const MatrixMetadata meta = metadata_from_json(io::read_file(metadata_path(matrix)));
    CHECK(meta.matrix_sha256 == io::sha256_hex(text));
    CHECK(meta.stage == CatalogStage::BallOnly);

    run_cv_curve(matrix, cfg);
    const std::string curve = io::read_file(cfg.output / "cv_curve.csv");
    CHECK(curve.rfind("k,mean_mse,folds\n0,", 0) == 0);
    CHECK(io::read_file(cfg.output / "path.csv").rfind("lambda,nonzeros\n", 0) == 0);

    run_train(matrix, cfg);
    const std::string model = io::read_file(cfg.output / "model.json");
    run_train(matrix, cfg);
    CHECK(io::read_file(cfg.output / "model.json") == model);
    CHECK_THROWS_AS(run_train(matrix, cfg, {"kiwi"}), InputError);

    run_estimate(cfg.output / "model.json", cfg);
    const ConceptColorMatrix est = load_matrix_csv(cfg.output / "estimates.csv");
    CHECK(est.concepts.size() == 3);
    CHECK(est.color_indices.size() == 58);

    run_evaluate({{"m", cfg.output / "estimates.csv"}, {"self", corpus.ratings}}, cfg);
    CHECK(fs::exists(cfg.output / "report_m.csv"));
    CHECK(fs::exists(cfg.output / "scatter_self.csv"));
    CHECK(io::read_file(cfg.output / "summary.csv").find("overall,") != std::string::npos);
    CHECK(io::read_file(cfg.output / "comparisons.csv").find("m,self,") != std::string::npos);

    RunConfig bcp = cfg;
    bcp.colors = "bcp37";
    bcp.output = dir / "bcp";
    run_estimate(cfg.output / "model.json", bcp);
    CHECK(load_matrix_csv(bcp.output / "estimates.csv").color_indices.size() == 37);

    RunConfig bad = cfg;
    bad.corpus = dir / "missing";
    CHECK_THROWS_AS(run_featurize(bad), Error);
    bad = cfg;
    bad.k = 0;
    CHECK_THROWS_AS(run_train(matrix, bad), InputError);
    bad = cfg;
    bad.k = 31;
    CHECK_THROWS_AS(run_train(matrix, bad), InputError);
    bad = cfg;
    bad.max_images = 0;
    CHECK_THROWS_AS(run_corpus_scan(bad), InputError);
    bad = cfg;
    bad.concepts = {"lime"};
    bad.output = dir / "one";
    run_featurize(bad);
    CHECK_THROWS_AS(run_cv_curve(bad.output / "design_matrix.csv", bad), InputError);
}
