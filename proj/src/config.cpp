#include "lipo/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace lipo {

namespace {

constexpr double kDegToRad = 3.141592653589793 / 180.0;
constexpr double kRadToDeg = 180.0 / 3.141592653589793;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct Setter {
  std::function<void(PipelineConfig&, const std::string&)> apply;
};

long parse_int(const std::string& v) {
  std::size_t pos = 0;
  const long x = std::stol(v, &pos);
  if (pos != v.size()) throw std::invalid_argument(v);
  return x;
}

double parse_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument(v);
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument(v);
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      // extraction
      {"max_points", {[](PipelineConfig& c, const std::string& v) { c.extraction.max_points = static_cast<int>(parse_int(v)); }}},
      {"max_lines", {[](PipelineConfig& c, const std::string& v) { c.extraction.max_lines = static_cast<int>(parse_int(v)); }}},
      {"min_line_length", {[](PipelineConfig& c, const std::string& v) { c.extraction.min_line_length = static_cast<float>(parse_double(v)); }}},
      {"fast_threshold", {[](PipelineConfig& c, const std::string& v) { c.extraction.fast_threshold = static_cast<int>(parse_int(v)); }}},
      {"band_count", {[](PipelineConfig& c, const std::string& v) { c.extraction.band_count = static_cast<int>(parse_int(v)); }}},
      {"band_width", {[](PipelineConfig& c, const std::string& v) { c.extraction.band_width = static_cast<int>(parse_int(v)); }}},
      // vocabulary
      {"vocab_branching", {[](PipelineConfig& c, const std::string& v) { c.vocab.branching = static_cast<int>(parse_int(v)); }}},
      {"vocab_leaf_capacity", {[](PipelineConfig& c, const std::string& v) { c.vocab.leaf_capacity = static_cast<int>(parse_int(v)); }}},
      {"vocab_merge_threshold", {[](PipelineConfig& c, const std::string& v) { c.vocab.merge_threshold = static_cast<int>(parse_int(v)); }}},
      {"vocab_backtrack_branches", {[](PipelineConfig& c, const std::string& v) { c.vocab.backtrack_branches = static_cast<int>(parse_int(v)); }}},
      {"vocab_exact_search", {[](PipelineConfig& c, const std::string& v) { c.vocab.exact_search = parse_bool(v); }}},
      {"prune_threshold", {[](PipelineConfig& c, const std::string& v) { c.vocab.prune_threshold = parse_double(v); }}},
      {"max_candidates", {[](PipelineConfig& c, const std::string& v) { c.vocab.max_candidates = static_cast<int>(parse_int(v)); }}},
      // fusion
      {"penalty_factor", {[](PipelineConfig& c, const std::string& v) { c.penalty_factor = parse_double(v); }}},
      // islands
      {"island_gap", {[](PipelineConfig& c, const std::string& v) { c.island_gap = parse_int(v); }}},
      // geometry
      {"nndr_ratio", {[](PipelineConfig& c, const std::string& v) { c.geometry.nndr_ratio = parse_double(v); }}},
      {"single_match_max_distance", {[](PipelineConfig& c, const std::string& v) { c.geometry.single_match_max_distance = static_cast<int>(parse_int(v)); }}},
      {"alpha_max_deg", {[](PipelineConfig& c, const std::string& v) { c.geometry.alpha_max = parse_double(v) * kDegToRad; }}},
      {"theta_bin_deg", {[](PipelineConfig& c, const std::string& v) { c.geometry.theta_bin = parse_double(v) * kDegToRad; }}},
      {"theta_salience", {[](PipelineConfig& c, const std::string& v) { c.geometry.theta_salience = parse_double(v); }}},
      {"theta_prefilter", {[](PipelineConfig& c, const std::string& v) { c.geometry.theta_prefilter = static_cast<int>(parse_int(v)); }}},
      {"epi_tolerance_px", {[](PipelineConfig& c, const std::string& v) { c.geometry.epi_tolerance = parse_double(v); }}},
      {"min_inliers", {[](PipelineConfig& c, const std::string& v) { c.geometry.min_inliers = static_cast<int>(parse_int(v)); }}},
      {"ransac_max_iterations", {[](PipelineConfig& c, const std::string& v) { c.geometry.ransac_max_iterations = static_cast<int>(parse_int(v)); }}},
      {"ransac_confidence", {[](PipelineConfig& c, const std::string& v) { c.geometry.ransac_confidence = parse_double(v); }}},
      // pipeline
      {"gating_window", {[](PipelineConfig& c, const std::string& v) { c.gating_window = parse_int(v); }}},
      {"seed", {[](PipelineConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(parse_int(v)); }}},
      {"log_timings", {[](PipelineConfig& c, const std::string& v) { c.log_timings = parse_bool(v); }}},
  };
  return table;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text, const std::string& source_name) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string entry = trim(line);
    if (entry.empty()) continue;

    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source_name + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": unknown key '" + key +
                        "'");
    try {
      it->second.apply(cfg, value);
    } catch (const std::exception&) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": bad value '" + value +
                        "' for key '" + key + "'");
    }
  }
  cfg.geometry.ransac_seed = cfg.seed;
  return cfg;
}

PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

std::string config_to_text(const PipelineConfig& c) {
  std::ostringstream os;
  os << "# feature extraction\n"
     << "max_points = " << c.extraction.max_points << "\n"
     << "max_lines = " << c.extraction.max_lines << "\n"
     << "min_line_length = " << c.extraction.min_line_length << "\n"
     << "fast_threshold = " << c.extraction.fast_threshold << "\n"
     << "band_count = " << c.extraction.band_count << "\n"
     << "band_width = " << c.extraction.band_width << "\n"
     << "# vocabularies\n"
     << "vocab_branching = " << c.vocab.branching << "\n"
     << "vocab_leaf_capacity = " << c.vocab.leaf_capacity << "\n"
     << "vocab_merge_threshold = " << c.vocab.merge_threshold << "\n"
     << "vocab_backtrack_branches = " << c.vocab.backtrack_branches << "\n"
     << "vocab_exact_search = " << (c.vocab.exact_search ? "true" : "false") << "\n"
     << "prune_threshold = " << c.vocab.prune_threshold << "\n"
     << "max_candidates = " << c.vocab.max_candidates << "\n"
     << "# candidate fusion\n"
     << "penalty_factor = " << c.penalty_factor << "\n"
     << "# islands\n"
     << "island_gap = " << c.island_gap << "\n"
     << "# spatial verification\n"
     << "nndr_ratio = " << c.geometry.nndr_ratio << "\n"
     << "single_match_max_distance = " << c.geometry.single_match_max_distance << "\n"
     << "alpha_max_deg = " << c.geometry.alpha_max * kRadToDeg << "\n"
     << "theta_bin_deg = " << c.geometry.theta_bin * kRadToDeg << "\n"
     << "theta_salience = " << c.geometry.theta_salience << "\n"
     << "theta_prefilter = " << c.geometry.theta_prefilter << "\n"
     << "epi_tolerance_px = " << c.geometry.epi_tolerance << "\n"
     << "min_inliers = " << c.geometry.min_inliers << "\n"
     << "ransac_max_iterations = " << c.geometry.ransac_max_iterations << "\n"
     << "ransac_confidence = " << c.geometry.ransac_confidence << "\n"
     << "# pipeline\n"
     << "gating_window = " << c.gating_window << "\n"
     << "seed = " << c.seed << "\n"
     << "log_timings = " << (c.log_timings ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace lipo
