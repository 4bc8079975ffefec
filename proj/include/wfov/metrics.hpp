#pragma once

// Disparity and depth error metrics, plus dataset statistics (depth histogram,
// local image entropy). Every reduction is deterministic across thread counts.

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wfov/common.hpp"
#include "wfov/spherical_stereo.hpp"

namespace wfov {

struct MetricValue {
  std::string name;
  double value{0};
  std::string unit;
  std::size_t valid_pixel_count{0};
};

struct EvalDomain {
  std::string kind;  // "disparity" or "depth"
  double fov_deg{std::numeric_limits<double>::quiet_NaN()};
  double baseline_m{std::numeric_limits<double>::quiet_NaN()};
  std::string projection;
};

struct EvalReport {
  EvalDomain domain;
  std::vector<MetricValue> metrics;

  /// Throws std::out_of_range for an unknown name.
  const MetricValue& at(const std::string& name) const;
};

/// Floor on the ground-truth disparity in the RelEPE denominator, in pixels.
inline constexpr double kRelEpeFloorPx = 0.5;

/// p-th percentile (p in [0, 100]) with linear interpolation between closest ranks.
/// Reorders `values`.
double percentile(std::vector<double>& values, double p);

/// EPE, Q50/Q95 of the end-point error, bad-1/2/3 and RelEPE over the intersection of
/// both validity masks. Throws DataError when the intersection is empty.
EvalReport disparity_metrics(const DisparityMap& pred, const DisparityMap& gt);

/// AbsRel, MAE, RMSE and delta accuracies (thresholds 1.25^k, strict) over the mask
/// intersection.
EvalReport depth_metrics(const DepthMap& pred, const DepthMap& gt);

/// mean(|pred - gt| / max(gt, kRelEpeFloorPx)) over the mask intersection.
double rel_epe(const DisparityMap& pred, const DisparityMap& gt);

/// Rec. 601 luma rounded to 8 bits.
Plane<std::uint8_t> to_gray(const RgbImage& rgb);

struct EntropyStats {
  Plane<double> entropy;  // bits; 0 where the center is masked out
  double mean{0};
};

inline constexpr int kEntropyWindow = 11;

/// Shannon entropy (base 2) of the 256-bin histogram in a window x window
/// neighborhood clipped at the borders. With a mask, only valid pixels enter the
/// histograms and the mean.
EntropyStats local_entropy_stats(const Plane<std::uint8_t>& gray, const Mask* valid = nullptr,
                                 int window = kEntropyWindow);

/// Fraction of valid depth pixels in each [edge_i, edge_{i+1}) bin.
std::vector<double> depth_histogram(const DepthMap& depth, std::span<const double> bin_edges);

/// Accumulates bin counts for a histogram spanning several maps.
void depth_histogram_counts(const DepthMap& depth, std::span<const double> bin_edges,
                            std::vector<std::size_t>& counts);

}  // namespace wfov
