#include "sisprof/errors.hpp"
#include "sisprof/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace sisprof;

TEST_SUITE("io") {
  TEST_CASE("ramp maps to 0, 128, 255") {
    auto g = build_grid(DomainSpec::interval(0, 1, 3));
    Field f(*g, Eigen::Vector3d(0.0, 0.5, 1.0));
    HeatmapImage img = make_heatmap(f, *g);
    CHECK(img.width == 3);
    CHECK(img.height == 1);
    CHECK(img.pixels == std::vector<std::uint8_t>{0, 128, 255});
    CHECK(encode_pgm(img) == std::string("P5\n3 1\n255\n") + std::string("\x00\x80\xff", 3));
  }

  TEST_CASE("constant field is flat grey") {
    auto g = build_grid(DomainSpec::rectangle(0, 1, 0, 1, 4, 3));
    HeatmapImage img = make_heatmap(Field(*g, 0.7), *g);
    CHECK(img.pixels.size() == 12);
    for (auto px : img.pixels) CHECK(px == 128);
  }

  TEST_CASE("top row is the largest y and masked cells are black") {
    auto g = build_grid(DomainSpec::rectangle(0, 1, 0, 1, 3, 3));
    Field f(*g, 0.0);
    for (int k = 0; k < g->size(); ++k) f[k] = g->node(k).y;
    HeatmapImage img = make_heatmap(f, *g);
    CHECK(img.pixels[0] == 255);
    CHECK(img.pixels[8] == 0);
    CHECK(img.pixels[4] == 128);

    auto d = build_grid(DomainSpec::disk(1.0, 9));
    Field c(*d, 0.0);
    for (int k = 0; k < d->size(); ++k) c[k] = 1.0 + d->node(k).x;
    HeatmapImage disk = make_heatmap(c, *d);
    CHECK(disk.pixels[0] == 0);  // corner of the bounding square lies outside the disk
    CHECK(disk.width * disk.height == 81);
  }

  TEST_CASE("file output is bit exact") {
    auto g = build_grid(DomainSpec::interval(0, 1, 3));
    Field f(*g, Eigen::Vector3d(2.0, 3.0, 4.0));
    auto path = std::filesystem::temp_directory_path() / "sisprof_ramp.pgm";
    emit_heatmap(f, *g, path.string());
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(bytes == std::string("P5\n3 1\n255\n") + std::string("\x00\x80\xff", 3));
    std::filesystem::remove(path);
  }

  TEST_CASE("fields csv schema") {
    auto g = build_grid(DomainSpec::rectangle(0, 1.5, 0, 1.5, 3, 3));
    Field S(*g, 0.1), I(*g, 1.0 / 3.0);
    std::string csv = fields_csv(*g, {"S", "I"}, {&S, &I});
    std::istringstream in(csv);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "x,y,S,I");
    CHECK(first == "0.25,0.25,0.10000000000000001,0.33333333333333331");

    auto line = build_grid(DomainSpec::interval(0, 1, 3));
    Field a(*line, 1.0);
    CHECK(fields_csv(*line, {"S"}, {&a}).substr(0, 4) == "x,S\n");
  }

  TEST_CASE("unwritable path fails") {
    CHECK_THROWS(write_text("/nonexistent_dir/x/y.txt", "a"));
  }
}
