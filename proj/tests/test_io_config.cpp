#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "mfgpi/config.hpp"
#include "mfgpi/errors.hpp"
#include "mfgpi/io.hpp"

using namespace mfgpi;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "mfgpi_test_io";
    fs::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_CASE("format_double round-trips every bit") {
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("stacked field binary dump round-trips exactly") {
    SpaceTimeGrid g{-2.0, 3.0, 11, 0.5, 7};
    FieldSurface f(g, Axis{-1.0, 1.0, 5});
    for (std::size_t p = 0; p < 5; ++p)
        for (std::size_t n = 0; n < g.nt; ++n)
            for (std::size_t i = 0; i < g.ny; ++i) f(i, n, p) = std::sin(0.3 * i + 1.7 * n - 0.9 * p) / 7.0;
    const auto path = scratch("stacked.bin");
    write_field_binary(f, path);
    const FieldSurface r = read_field_binary(path);
    REQUIRE(r.stacked());
    CHECK(r.grid().ny == 11);
    CHECK(r.grid().nt == 7);
    CHECK(r.grid().y_lo == -2.0);
    CHECK(r.grid().T == 0.5);
    CHECK(r.param().n == 5);
    CHECK(r.values() == f.values());
}

TEST_CASE("unstacked field binary dump and corrupt input") {
    SpaceTimeGrid g{0.0, 1.0, 4, 1.0, 3};
    FieldSurface f(g, 2.5);
    const auto path = scratch("flat.bin");
    write_field_binary(f, path);
    const FieldSurface r = read_field_binary(path);
    CHECK_FALSE(r.stacked());
    CHECK(r.values() == f.values());

    const auto bad = scratch("bad.bin");
    std::FILE* out = std::fopen(bad.c_str(), "wb");
    std::fputs("NOTMAGIC", out);
    std::fclose(out);
    CHECK_THROWS(read_field_binary(bad));
}

TEST_CASE("field csv has the documented header and one row per node") {
    SpaceTimeGrid g{0.0, 1.0, 3, 1.0, 2};
    FieldSurface f(g, Axis{0.0, 1.0, 2}, 1.0);
    const auto path = scratch("f.csv");
    write_field_csv(f, path, "f", "mbar");
    const std::string text = read_file(path);
    CHECK(text.rfind("y,t,mbar,f\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : text) lines += c == '\n';
    CHECK(lines == 1 + 3 * 2 * 2);
}

TEST_CASE("csv writer rejects a wrong column count") {
    CsvWriter w(scratch("w.csv"), {"a", "b"});
    w.row({1.0, 2.0});
    CHECK_THROWS_AS(w.row({1.0}), InputError);
    CHECK_THROWS_AS(w.row(3, {1.0, 2.0}), InputError);
}

TEST_CASE("config parses sections, multi-line arrays and bare words") {
    const auto cfg = parse_config(R"(
# comment
[prior]
atoms = [
  [0.1, 0.25],
  [0.9, 0.75]
]
[utility]
kind = sahara
A = 2.0
[coupling]
kind = linear
theta = 0.3
[simulation]
y0 = 0.5
n_paths = 17
[nplayer]
N = [5, 50, 500]
)");
    REQUIRE(cfg.prior.size() == 2);
    CHECK(cfg.prior[1].theta == 0.9);
    CHECK(cfg.prior[1].weight == 0.75);
    CHECK(cfg.utility_kind == "sahara");
    CHECK(cfg.utility_A == 2.0);
    CHECK(cfg.coupling.kind == "linear");
    CHECK(cfg.coupling.theta == 0.3);
    CHECK(cfg.y0 == 0.5);
    CHECK(cfg.n_paths == 17);
    CHECK(cfg.nplayer.N_list == std::vector<std::size_t>{5, 50, 500});
    CHECK(make_coupling(cfg).has_value());
}

TEST_CASE("config errors name the problem") {
    CHECK_THROWS_WITH_AS(parse_config("[grid]\nny = 10\nbogus = 1\n"), doctest::Contains("line 3"), InputError);
    CHECK_THROWS_AS(parse_config("[grid]\nny = 10\nny = 11\n"), InputError);
    CHECK_THROWS_AS(parse_config("[grid]\nny = -4\n"), InputError);
    CHECK_THROWS_AS(parse_config("[simulation]\nmeasure = 3\n"), InputError);
    CHECK_THROWS_AS(parse_config("[nowhere]\nx = 1\n"), InputError);
    auto cfg = parse_config("[coupling]\nkind = linear\ntheta = 1.5\n");
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("(0,1)"), InputError);
}

TEST_CASE("config hash is stable and ignores output location") {
    auto a = parse_config("[simulation]\nseed = 3\n");
    auto b = a;
    b.out_dir = "elsewhere";
    b.threads = 4;
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.seed = 4;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(canonical_json(a) == canonical_json(parse_config("[simulation]\nseed = 3\n")));
}
