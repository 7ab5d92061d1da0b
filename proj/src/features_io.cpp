#include <cstdio>
#include <fstream>
#include <sstream>

#include "lipo/features.hpp"

namespace lipo {

namespace {

constexpr const char* kMagic = "LIPO-FEATURES";
constexpr const char* kVersion = "v1";

std::string format_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

float parse_float(const std::string& path, int line, const std::string& token) {
  try {
    std::size_t pos = 0;
    const float v = std::stof(token, &pos);
    if (pos != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    parse_fail(path, line, "expected a number, got '" + token + "'");
  }
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string t;
  while (is >> t) tokens.push_back(t);
  return tokens;
}

}  // namespace

void save_features(const FrameFeatures& features, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");

  out << kMagic << " " << kVersion << " " << features.frame_id << " "
      << features.points.size() << " " << features.lines.size() << " "
      << BinaryDescriptor::kBits << "\n";
  for (const PointFeature& p : features.points) {
    out << "P " << format_float(p.keypoint.x) << " " << format_float(p.keypoint.y) << " "
        << format_float(p.keypoint.orientation) << " " << format_float(p.keypoint.response)
        << " " << p.descriptor.to_hex() << "\n";
  }
  for (const LineFeature& l : features.lines) {
    out << "L " << format_float(l.segment.start_x) << " " << format_float(l.segment.start_y)
        << " " << format_float(l.segment.end_x) << " " << format_float(l.segment.end_y) << " "
        << l.descriptor.to_hex() << "\n";
  }
  if (!out.flush()) throw std::runtime_error(path + ": write failed");
}

FrameFeatures load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");

  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
  const auto header = split_tokens(line);
  if (header.size() != 6 || header[0] != kMagic || header[1] != kVersion)
    parse_fail(path, 1, "bad header (expected 'LIPO-FEATURES v1 <frame> <np> <nl> <bits>')");

  FrameFeatures f;
  std::size_t n_points = 0, n_lines = 0;
  unsigned bits = 0;
  try {
    f.frame_id = std::stoll(header[2]);
    n_points = std::stoul(header[3]);
    n_lines = std::stoul(header[4]);
    bits = static_cast<unsigned>(std::stoul(header[5]));
  } catch (const std::exception&) {
    parse_fail(path, 1, "bad header counts");
  }
  if (bits != BinaryDescriptor::kBits)
    parse_fail(path, 1, "descriptor width " + std::to_string(bits) + " does not match configured width " +
                            std::to_string(BinaryDescriptor::kBits));

  int line_no = 1;
  f.points.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    ++line_no;
    if (!std::getline(in, line)) parse_fail(path, line_no, "unexpected end of file");
    const auto t = split_tokens(line);
    if (t.size() != 6 || t[0] != "P") parse_fail(path, line_no, "expected 'P <x> <y> <ori> <resp> <hex>'");
    PointFeature p;
    p.keypoint.x = parse_float(path, line_no, t[1]);
    p.keypoint.y = parse_float(path, line_no, t[2]);
    p.keypoint.orientation = parse_float(path, line_no, t[3]);
    p.keypoint.response = parse_float(path, line_no, t[4]);
    try {
      p.descriptor = BinaryDescriptor::from_hex(t[5]);
    } catch (const std::invalid_argument& e) {
      parse_fail(path, line_no, e.what());
    }
    f.points.push_back(std::move(p));
  }
  f.lines.reserve(n_lines);
  for (std::size_t i = 0; i < n_lines; ++i) {
    ++line_no;
    if (!std::getline(in, line)) parse_fail(path, line_no, "unexpected end of file");
    const auto t = split_tokens(line);
    if (t.size() != 6 || t[0] != "L") parse_fail(path, line_no, "expected 'L <sx> <sy> <ex> <ey> <hex>'");
    LineFeature l;
    l.segment.start_x = parse_float(path, line_no, t[1]);
    l.segment.start_y = parse_float(path, line_no, t[2]);
    l.segment.end_x = parse_float(path, line_no, t[3]);
    l.segment.end_y = parse_float(path, line_no, t[4]);
    try {
      l.descriptor = BinaryDescriptor::from_hex(t[5]);
    } catch (const std::invalid_argument& e) {
      parse_fail(path, line_no, e.what());
    }
    f.lines.push_back(std::move(l));
  }
  return f;
}

}  // namespace lipo
