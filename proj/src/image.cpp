#include "lipo/image.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace lipo {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

int next_pgm_token(std::istream& in) {
  // Skips whitespace and '#' comment lines, then reads one integer.
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return in ? value : -1;
}

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  char p, kind;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '2' && kind != '5')) fail(path, "not a PGM (P2/P5) file");

  const int width = next_pgm_token(in);
  const int height = next_pgm_token(in);
  const int maxval = next_pgm_token(in);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    fail(path, "invalid PGM header");

  Image img(width, height);
  const std::size_t n = img.pixels.size();
  if (kind == '5') {
    in.get();  // single whitespace after maxval
    if (maxval < 256) {
      in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
      if (static_cast<std::size_t>(in.gcount()) != n) fail(path, "truncated pixel data");
    } else {
      std::vector<std::uint8_t> raw(2 * n);
      in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
      if (static_cast<std::size_t>(in.gcount()) != raw.size()) fail(path, "truncated pixel data");
      for (std::size_t i = 0; i < n; ++i) {
        const int v = (raw[2 * i] << 8) | raw[2 * i + 1];
        img.pixels[i] = static_cast<std::uint8_t>(v * 255 / maxval);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const int v = next_pgm_token(in);
      if (v < 0) fail(path, "truncated pixel data");
      img.pixels[i] = static_cast<std::uint8_t>(maxval == 255 ? v : v * 255 / maxval);
    }
  }
  return img;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

Image load_png(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "corrupt PNG data");
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const png_size_t rowbytes = png_get_rowbytes(png, info);
  const int channels = png_get_channels(png, info);
  std::vector<std::uint8_t> row(rowbytes);

  Image img(static_cast<int>(width), static_cast<int>(height));
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x) {
      std::uint8_t gray;
      if (channels >= 3) {
        // BT.601 integer luma
        const int r = row[x * channels];
        const int g = row[x * channels + 1];
        const int b = row[x * channels + 2];
        gray = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
      } else {
        gray = row[x * channels];
      }
      img.at(static_cast<int>(x), static_cast<int>(y)) = gray;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) fail(path, "cannot open file");
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();
  if (magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5')) return load_pgm(path);
  if (magic[0] == 0x89 && magic[1] == 'P') return load_png(path);
  fail(path, "unsupported image format (expected PGM or PNG)");
}

void save_pgm(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) fail(path, "write failed");
}

}  // namespace lipo
