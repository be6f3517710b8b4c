#include "colorassoc/datasets.hpp"
#include "colorassoc/error.hpp"
#include "colorassoc/io.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace colorassoc;
namespace fs = std::filesystem;

TEST_CASE("UW-58 table") {
    const ColorTable t = builtin_uw58();
    REQUIRE(t.size() == 58);
    CHECK(t.name == "uw58");
    CHECK(t.at_index(27).lab.L == 100.0);
    CHECK(t.at_index(27).lab.a == 0.0);
    CHECK(t.at_index(23).lab.L == 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t.entries[i].index == static_cast<int>(i) + 1);
    }
    CHECK_THROWS_AS(t.at_index(59), InputError);
}

TEST_CASE("BCP-37 table") {
    const ColorTable t = builtin_bcp37();
    REQUIRE(t.size() == 37);
    const ColorEntry& sr = t.entries.front();
    CHECK(sr.label == "SR");
    CHECK(sr.lch.L == 51.573);
    CHECK(sr.lch.c == 70.07);
    CHECK(sr.lch.h == 27.356);
    CHECK(t.entries[32].label == "BK");
    CHECK(t.entries[32].lab.L == 2.3361);
}

TEST_CASE("stored coordinates agree with recomputed ones") {
    for (const ColorTable& t : {builtin_uw58(), builtin_bcp37()}) {
        const ConsistencyReport r = check_consistency(t);
        CHECK(r.max_lab_error <= 0.05);
        CHECK(r.max_chroma_error <= 0.05);
        CHECK(r.max_hue_error <= 0.1);
    }
}

TEST_CASE("resolve_color_table") {
    CHECK(resolve_color_table("uw58").size() == 58);
    CHECK(resolve_color_table("bcp37").size() == 37);
    CHECK_THROWS_AS(resolve_color_table("nope58"), InputError);
}

TEST_CASE("color table CSV round trip") {
    const fs::path dir = testsupport::scratch_dir("datasets_table");
    const ColorTable t = builtin_bcp37();
    std::ostringstream out;
    write_color_table(t, out);
    io::write_file(dir / "bcp.csv", out.str());
    const ColorTable back = load_color_table(dir / "bcp.csv", kBcpWhite);
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(back.entries[i].label == t.entries[i].label);
        CHECK(back.entries[i].xyy.Y == t.entries[i].xyy.Y);
        CHECK(back.entries[i].lab.b == t.entries[i].lab.b);
        CHECK(back.entries[i].lch.h == t.entries[i].lch.h);
    }
    CHECK(resolve_color_table((dir / "bcp.csv").string()).size() == 37);
}

TEST_CASE("shipped fruit ratings") {
    const RatingsTable r = testsupport::fruit_ratings();
    CHECK(r.concepts.size() == 12);
    CHECK(r.color_indices.size() == 58);
    CHECK(r.values.size() == 696);
    CHECK(r.at("blueberry", 2) == doctest::Approx(0.8081).epsilon(1e-4));
    CHECK(r.at("orange", 51) == doctest::Approx(0.8497).epsilon(1e-4));
    CHECK((r.values.array() >= 0.0).all());
    CHECK((r.values.array() <= 1.0).all());
}

TEST_CASE("ratings round trip and validation") {
    const fs::path dir = testsupport::scratch_dir("datasets_ratings");
    const ColorTable uw = builtin_uw58();
    const RatingsTable r = testsupport::fruit_ratings({"lime", "mango"});
    write_matrix_csv(r, dir / "r.csv");
    const RatingsTable back = load_ratings(dir / "r.csv", uw);
    CHECK(back.concepts == r.concepts);
    CHECK(back.values == r.values);

    std::string text = io::read_file(dir / "r.csv");
    const auto pos = text.find('\n', text.find('\n') + 1);
    std::string bad = text;
    bad.replace(text.find('\n') + 1, pos - text.find('\n') - 1, "1,1.2,0.5");
    io::write_file(dir / "bad.csv", bad);
    CHECK_THROWS_AS(load_ratings(dir / "bad.csv", uw), InputError);

    std::string missing = text;
    missing.replace(text.find('\n') + 1, pos - text.find('\n') - 1, "1,0.3,");
    io::write_file(dir / "missing.csv", missing);
    CHECK_THROWS_AS(load_ratings(dir / "missing.csv", uw), InputError);

    CHECK_THROWS_AS(load_ratings(dir / "r.csv", builtin_bcp37()), InputError);
}

TEST_CASE("ratings tolerate trailing whitespace and column order") {
    const fs::path dir = testsupport::scratch_dir("datasets_ws");
    const ColorTable uw = builtin_uw58();
    std::string text = "color,a,b\n";
    for (int i = 58; i >= 1; --i) {
        text += std::to_string(i) + ", 0.5 ,0.25  \n";
    }
    io::write_file(dir / "r.csv", text);
    const RatingsTable r = load_ratings(dir / "r.csv", uw);
    CHECK(r.color_indices.front() == 1);
    CHECK(r.at("b", 7) == 0.25);
}
