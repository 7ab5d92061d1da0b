#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "lipo/image.hpp"
#include "support/synthetic.hpp"

using namespace lipo;
namespace ts = lipo::testsupport;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("binary PGM round-trips through save and load") {
  const fs::path dir = fresh_dir("lipo_image_pgm");
  const Image img = ts::make_checkerboard(64, 48, 8, 42);
  const std::string path = (dir / "img.pgm").string();
  save_pgm(img, path);
  const Image loaded = load_image(path);
  CHECK(loaded.width == img.width);
  CHECK(loaded.height == img.height);
  CHECK(loaded.pixels == img.pixels);
  fs::remove_all(dir);
}

TEST_CASE("ASCII PGM with comments loads correctly") {
  const fs::path dir = fresh_dir("lipo_image_p2");
  const std::string path = (dir / "img.pgm").string();
  std::ofstream(path) << "P2\n# a comment\n3 2\n255\n0 128 255\n10 20 30\n";
  const Image img = load_image(path);
  REQUIRE(img.width == 3);
  REQUIRE(img.height == 2);
  CHECK(img.at(0, 0) == 0);
  CHECK(img.at(1, 0) == 128);
  CHECK(img.at(2, 0) == 255);
  CHECK(img.at(2, 1) == 30);
  fs::remove_all(dir);
}

TEST_CASE("grayscale PNG decodes to the same pixels") {
  const fs::path dir = fresh_dir("lipo_image_png");
  const Image img = ts::make_checkerboard(60, 40, 10, 7);
  const std::string path = (dir / "img.png").string();
  ts::write_png_gray(img, path);
  const Image loaded = load_image(path);
  CHECK(loaded.width == img.width);
  CHECK(loaded.height == img.height);
  CHECK(loaded.pixels == img.pixels);
  fs::remove_all(dir);
}

TEST_CASE("color PNG converts with BT.601 luma") {
  const fs::path dir = fresh_dir("lipo_image_png_rgb");
  Image red(8, 8, 0);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) red.at(x, y) = static_cast<std::uint8_t>(x * 30);
  const std::string path = (dir / "img.png").string();
  ts::write_png_rgb(red, 100, 50, path);
  const Image loaded = load_image(path);
  REQUIRE(loaded.width == 8);
  for (int x = 0; x < 8; ++x) {
    const int expected = (299 * x * 30 + 587 * 100 + 114 * 50 + 500) / 1000;
    CHECK(loaded.at(x, 3) == expected);
  }
  fs::remove_all(dir);
}

TEST_CASE("corrupt and missing rasters raise errors") {
  const fs::path dir = fresh_dir("lipo_image_bad");
  CHECK_THROWS(load_image((dir / "missing.pgm").string()));

  const std::string garbage = (dir / "garbage.pgm").string();
  std::ofstream(garbage) << "JUNKJUNKJUNK";
  CHECK_THROWS(load_image(garbage));

  const std::string truncated = (dir / "trunc.pgm").string();
  std::ofstream(truncated) << "P5\n100 100\n255\nxx";
  CHECK_THROWS(load_image(truncated));
  fs::remove_all(dir);
}
