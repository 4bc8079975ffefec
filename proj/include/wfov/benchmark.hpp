#pragma once

// Dataset-level pipeline: scene manifest -> rendered stereo samples on disk, sweep
// evaluation of predictions over the (FOV x baseline) grid, dataset statistics.

#include <map>
#include <string>
#include <vector>

#include "wfov/dataset_io.hpp"

namespace wfov {

struct LoadedScene {
  SceneManifest manifest;
  fs::path base_dir;
  std::vector<PointCloud> scans;  // central scan first
  std::vector<WorldRegion> regions;
};

/// Reads and validates a manifest and everything it references.
LoadedScene load_scene(const fs::path& manifest_path);

struct GenerationSettings {
  BenchmarkGrid grid{};
  int height{512};  // equirectangular sample height; width is 2 * height
  double splat_radius_px{1.0};
};

/// Renders every rig of the grid for one scene into
/// `out_dir/<scene_id>/<rig id>/{rgb_ref.png, rgb_sec.png, depth_ref.png, disparity_ref.pfm}`
/// and returns the records (paths relative to out_dir), sorted by rig id.
std::vector<SampleRecord> generate_scene_samples(const LoadedScene& scene, const GenerationSettings& settings,
                                                 const fs::path& out_dir);

/// Ground truth and prediction file names follow the sample layout; predictions live
/// under `pred_dir` with the same relative paths as the ground truth.
enum class EvalKind { disparity, depth };

EvalKind parse_eval_kind(std::string_view s);
std::string_view to_string(EvalKind k);

DepthMap read_depth_any(const fs::path& path, double baseline_m = 0);

EvalReport evaluate_sample(const SampleRecord& rec, const fs::path& samples_dir, const fs::path& pred_dir,
                           EvalKind kind);

struct SweepTable {
  std::string metric;
  std::vector<double> fovs_deg;     // rows
  std::vector<double> baselines_m;  // columns
  /// Mean metric over samples per (fov, baseline) cell; NaN where no sample exists.
  std::vector<std::vector<double>> cells;
  std::vector<std::vector<std::size_t>> counts;
};

/// Aggregates `metric` over every sample of the index, by FOV and baseline. Pinhole
/// samples appear in the row of their FOV.
SweepTable evaluate_sweep(const SampleIndex& index, const fs::path& samples_dir, const fs::path& pred_dir,
                          EvalKind kind, const std::string& metric);

/// CSV with a "fov_deg" header column and one column per baseline.
std::string sweep_csv(const SweepTable& table);

/// Depth histogram over all samples plus mean local entropy of the reference images
/// (restricted to valid depth).
Json dataset_stats(const SampleIndex& index, const fs::path& samples_dir, const std::vector<double>& bin_edges);

}  // namespace wfov
