// Command-line entry point: feature extraction, loop closure detection runs,
// precision-recall evaluation and sweeps, and the line-matcher comparison
// harness, wired together through a flat key=value config file.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lipo/config.hpp"
#include "lipo/eval.hpp"
#include "lipo/log.hpp"
#include "lipo/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lipo;

namespace {

constexpr int kExitRuntimeError = 1;
constexpr int kExitUsageError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> list_files_sorted(const std::string& dir,
                                           const std::vector<std::string>& extensions) {
  if (!fs::is_directory(dir)) throw UsageError(dir + ": not a directory");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end())
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end(),
            [](const std::string& a, const std::string& b) {
              return fs::path(a).filename().string() < fs::path(b).filename().string();
            });
  return paths;
}

PipelineConfig load_config(const std::string& config_path, std::optional<std::uint64_t> seed) {
  PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : parse_config_file(config_path);
  if (seed) {
    cfg.seed = *seed;
    cfg.geometry.ransac_seed = *seed;
  }
  return cfg;
}

std::unique_ptr<FrameSource> open_dataset(const std::string& dataset, const std::string& mode,
                                          const PipelineConfig& cfg) {
  if (mode == "import") {
    auto paths = list_files_sorted(dataset, {".feat"});
    if (paths.empty()) throw UsageError(dataset + ": no .feat files found");
    return std::make_unique<FeatureFileSource>(std::move(paths));
  }
  auto paths = list_files_sorted(dataset, {".pgm", ".png"});
  if (paths.empty()) throw UsageError(dataset + ": no .pgm/.png images found");
  return std::make_unique<ImageSequenceSource>(std::move(paths), cfg.extraction);
}

std::vector<FrameFeatures> load_dataset_frames(const std::string& dataset,
                                               const std::string& mode,
                                               const PipelineConfig& cfg) {
  auto source = open_dataset(dataset, mode, cfg);
  std::vector<FrameFeatures> frames;
  double unused = 0.0;
  while (auto f = source->next(&unused)) frames.push_back(std::move(*f));
  return frames;
}

int cmd_extract(const std::string& images_dir, const std::string& out_dir,
                const std::string& config_path, bool continue_on_error) {
  const PipelineConfig cfg = load_config(config_path, std::nullopt);
  fs::create_directories(out_dir);

  const auto paths = list_files_sorted(images_dir, {".pgm", ".png"});
  std::int64_t frame_id = 0;
  int failures = 0;
  for (const std::string& path : paths) {
    try {
      const Image image = load_image(path);
      const FrameFeatures features = extract_frame(image, frame_id, cfg.extraction);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%06lld.feat",
                    static_cast<long long>(frame_id));
      save_features(features, (fs::path(out_dir) / name).string());
      LIPO_INFO("extracted " << path << ": " << features.points.size() << " points, "
                             << features.lines.size() << " lines");
      ++frame_id;
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "error: " << path << ": " << e.what() << "\n";
      if (!continue_on_error) return kExitRuntimeError;
    }
  }
  std::cout << "extracted " << frame_id << " frames";
  if (failures > 0) std::cout << " (" << failures << " failed)";
  std::cout << "\n";
  return failures == 0 ? 0 : kExitRuntimeError;
}

int cmd_run(const std::string& dataset, const std::string& mode, const std::string& out_dir,
            const std::string& config_path, std::optional<std::uint64_t> seed) {
  const PipelineConfig cfg = load_config(config_path, seed);
  fs::create_directories(out_dir);

  const std::string log_path = (fs::path(out_dir) / "decisions.log").string();
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw std::runtime_error(log_path + ": cannot open file for writing");

  auto source = open_dataset(dataset, mode, cfg);
  const RunSummary summary = run_sequence(*source, cfg, [&](const LoopDecision& d) {
    log << format_decision_line(d, cfg.log_timings) << "\n";
  });
  log.flush();
  if (!log) throw std::runtime_error(log_path + ": write failed");

  const std::string summary_text = format_summary(summary);
  std::ofstream summary_file((fs::path(out_dir) / "summary.txt").string());
  summary_file << summary_text;
  std::cout << summary_text;
  return 0;
}

int cmd_eval(const std::string& log_path, const std::string& gt_path) {
  const auto decisions = parse_decision_log(log_path);
  const GroundTruth gt = load_ground_truth(gt_path);
  PRStats stats;
  try {
    stats = score_run(decisions, gt);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  const double max_recall = stats.false_positives == 0 ? stats.recall : 0.0;
  std::printf("precision = %.6f\n", stats.precision);
  std::printf("recall = %.6f\n", stats.recall);
  std::printf("tp = %zu\nfp = %zu\n", stats.true_positives, stats.false_positives);
  std::printf("max_recall_at_p100 = %.6f\n", max_recall);
  return 0;
}

int cmd_sweep(const std::string& dataset, const std::string& mode, const std::string& gt_path,
              const std::string& out_dir, const std::string& config_path,
              std::optional<std::uint64_t> seed, int from, int to, int step) {
  if (from <= 0 || to < from || step <= 0)
    throw UsageError("invalid min-inliers range");
  const PipelineConfig cfg = load_config(config_path, seed);
  const GroundTruth gt = load_ground_truth(gt_path);
  const auto frames = load_dataset_frames(dataset, mode, cfg);

  std::vector<int> thresholds;
  for (int v = from; v <= to; v += step) thresholds.push_back(v);
  const auto points = pr_sweep(frames, cfg, gt, thresholds);

  fs::create_directories(out_dir);
  const std::string csv_path = (fs::path(out_dir) / "pr.csv").string();
  std::ofstream csv(csv_path, std::ios::binary);
  csv << pr_points_to_csv(points);
  if (!csv.flush()) throw std::runtime_error(csv_path + ": write failed");

  std::printf("points = %zu\n", points.size());
  std::printf("max_recall_at_p100 = %.6f\n", max_recall_at_full_precision(points));
  return 0;
}

int cmd_ab_lines(const std::string& dataset, const std::string& mode,
                 const std::string& config_path, std::optional<std::uint64_t> seed) {
  const PipelineConfig cfg = load_config(config_path, seed);
  const auto frames = load_dataset_frames(dataset, mode, cfg);
  const LineInlierComparison cmp = line_inlier_comparison(frames, cfg);
  std::printf("verified pairs = %zu\n", cmp.pairs);
  std::printf("mean line inliers:\n");
  std::printf("  nndr      %8.2f\n", cmp.mean_nndr);
  std::printf("  proposed  %8.2f\n", cmp.mean_proposed);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lipo: loop closure detection from binary point and line features"};
  app.require_subcommand(1);

  std::string images_dir, dataset, out_dir, config_path, log_path, gt_path;
  std::string mode = "extract";
  bool continue_on_error = false;
  std::optional<std::uint64_t> seed;
  int sweep_from = 8, sweep_to = 40, sweep_step = 2;

  auto* extract = app.add_subcommand("extract", "extract features from an image directory");
  extract->add_option("--images", images_dir, "image directory (.pgm/.png)")->required();
  extract->add_option("--out", out_dir, "output directory for .feat files")->required();
  extract->add_option("--config", config_path, "config file");
  extract->add_flag("--continue-on-error", continue_on_error,
                    "keep going past unreadable images");

  auto* run = app.add_subcommand("run", "detect loop closures over a sequence");
  run->add_option("--dataset", dataset, "image or feature directory")->required();
  run->add_option("--features", mode, "feature source")
      ->check(CLI::IsMember({"extract", "import"}));
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--config", config_path, "config file");
  run->add_option("--seed", seed, "override the config seed");

  auto* eval = app.add_subcommand("eval", "score a decision log against ground truth");
  eval->add_option("--log", log_path, "decision log")->required();
  eval->add_option("--gt", gt_path, "ground truth file")->required();

  auto* sweep = app.add_subcommand("sweep", "precision-recall sweep over min_inliers");
  sweep->add_option("--dataset", dataset)->required();
  sweep->add_option("--features", mode)->check(CLI::IsMember({"extract", "import"}));
  sweep->add_option("--gt", gt_path)->required();
  sweep->add_option("--out", out_dir)->required();
  sweep->add_option("--config", config_path);
  sweep->add_option("--seed", seed);
  sweep->add_option("--min-inliers-from", sweep_from);
  sweep->add_option("--min-inliers-to", sweep_to);
  sweep->add_option("--min-inliers-step", sweep_step);

  auto* ab = app.add_subcommand("ab-lines", "compare line matching variants by inlier count");
  ab->add_option("--dataset", dataset)->required();
  ab->add_option("--features", mode)->check(CLI::IsMember({"extract", "import"}));
  ab->add_option("--config", config_path);
  ab->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (extract->parsed())
      return cmd_extract(images_dir, out_dir, config_path, continue_on_error);
    if (run->parsed()) return cmd_run(dataset, mode, out_dir, config_path, seed);
    if (eval->parsed()) return cmd_eval(log_path, gt_path);
    if (sweep->parsed())
      return cmd_sweep(dataset, mode, gt_path, out_dir, config_path, seed, sweep_from, sweep_to,
                       sweep_step);
    if (ab->parsed()) return cmd_ab_lines(dataset, mode, config_path, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitUsageError;
}
