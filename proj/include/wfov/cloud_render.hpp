#pragma once

// Z-buffered splatting of colored point clouds into any projection, occlusion
// filling from adjacent scans, and stereo sample synthesis.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "wfov/projections.hpp"
#include "wfov/spherical_stereo.hpp"
#include "wfov/virtual_rig.hpp"

namespace wfov {

struct PointCloud {
  Eigen::Matrix<float, 3, Eigen::Dynamic> positions;         // world frame, meters
  Eigen::Matrix<std::uint8_t, 3, Eigen::Dynamic> colors;     // RGB
  std::vector<std::uint16_t> scan_id;                        // per point
  std::vector<std::uint32_t> point_index;                    // stable ordinal, tie breaker
  std::vector<std::uint8_t> reflective;                      // optional; nonzero masks depth

  Eigen::Index size() const { return positions.cols(); }
  void resize(Eigen::Index n);
  /// Appends `other`, renumbering its point_index after the current maximum.
  void append(const PointCloud& other);
};

/// Throws ContractError on inconsistent channel sizes or non-finite positions.
void validate(const PointCloud& cloud);

struct RenderSettings {
  double splat_radius_px{1.0};
  /// Scan ids in fill order, central scan first. Empty: order of first appearance.
  std::vector<std::uint16_t> hole_fill_order{};
};

/// A camera center with an output projection, optionally restricted to the field of
/// view of a physical camera sharing the center (e.g. an equirectangular view of
/// what a fisheye sees).
struct RenderView {
  Eigen::Isometry3d world_from_camera{Eigen::Isometry3d::Identity()};
  ProjectionSpec projection{};
  std::optional<ProjectionSpec> aperture{};
};

inline constexpr std::uint32_t kNoPoint = 0xFFFFFFFFu;
inline constexpr std::int32_t kNoScan = -1;

struct RenderResult {
  RgbImage rgb;
  DepthMap depth;                    // geometry.height = projection height, baseline unset
  Plane<std::uint32_t> point_index;  // winning point per pixel, kNoPoint if empty
  Plane<std::int32_t> source_scan;   // provenance, kNoScan if empty
  Plane<std::uint8_t> reflective;    // winner carried the reflective flag
};

/// Valid target pixels of a view (projection validity intersected with the aperture).
Mask view_coverage(const RenderView& view);

RenderResult render(const PointCloud& cloud, const RenderView& view, const RenderSettings& settings);

/// Renders scans in hole_fill_order; later scans only write pixels that earlier
/// scans left empty.
RenderResult render_with_hole_fill(std::span<const PointCloud> bundle, const RenderView& view,
                                   const RenderSettings& settings);

struct StereoSample {
  RenderResult reference;
  RenderResult secondary;
  DepthMap depth_ref;          // reflective pixels zeroed; geometry carries H and B
  DisparityMap disparity_ref;
};

/// Renders both rig views into `projection` (whose orientation is replaced by the
/// rig's) limited to `camera`, then converts the reference depth to disparity.
/// The projection must be a full-latitude equirectangular grid.
StereoSample synthesize_stereo_sample(std::span<const PointCloud> bundle, const StereoRig& rig,
                                      const ProjectionSpec& camera, const ProjectionSpec& projection,
                                      const RenderSettings& settings);

enum class MaskMode { zero_out, clip_to };

struct MaskRegion {
  std::vector<Eigen::Vector2d> polygon;  // pixel coordinates
  MaskMode mode{MaskMode::zero_out};
  double clip_m{0};
};

/// Applies polygon regions (even-odd rule on pixel centers).
DepthMap mask_regions(const DepthMap& depth, std::span<const MaskRegion> regions);

/// Applies one mode over a precomputed pixel region.
DepthMap mask_regions(const DepthMap& depth, const Mask& region, MaskMode mode, double clip_m = 0);

/// World-space planar polygon annotation (a window or a mirror).
struct WorldRegion {
  std::vector<Eigen::Vector3d> polygon;
  MaskMode mode{MaskMode::zero_out};
  double clip_m{0};
};

/// Pixels whose center ray crosses the polygon.
Mask rasterize_world_region(const WorldRegion& region, const RenderView& view);

}  // namespace wfov
