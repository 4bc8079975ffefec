#include "wfov/cloud_render.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numeric>

#include <tbb/parallel_for.h>

namespace wfov {

void PointCloud::resize(Eigen::Index n) {
  positions.resize(3, n);
  colors.resize(3, n);
  scan_id.assign(std::size_t(n), 0);
  point_index.resize(std::size_t(n));
  std::iota(point_index.begin(), point_index.end(), 0u);
  reflective.clear();
}

void PointCloud::append(const PointCloud& other) {
  const Eigen::Index n0 = size(), n1 = other.size();
  const std::uint32_t base =
      point_index.empty() ? 0u : *std::max_element(point_index.begin(), point_index.end()) + 1u;
  Eigen::Matrix<float, 3, Eigen::Dynamic> pos(3, n0 + n1);
  Eigen::Matrix<std::uint8_t, 3, Eigen::Dynamic> col(3, n0 + n1);
  pos << positions, other.positions;
  col << colors, other.colors;
  positions = std::move(pos);
  colors = std::move(col);
  scan_id.insert(scan_id.end(), other.scan_id.begin(), other.scan_id.end());
  for (Eigen::Index i = 0; i < n1; ++i) point_index.push_back(base + std::uint32_t(i));
  if (!reflective.empty() || !other.reflective.empty()) {
    reflective.resize(std::size_t(n0), 0);
    if (other.reflective.empty())
      reflective.resize(std::size_t(n0 + n1), 0);
    else
      reflective.insert(reflective.end(), other.reflective.begin(), other.reflective.end());
  }
}

void validate(const PointCloud& cloud) {
  const auto n = std::size_t(cloud.size());
  if (std::size_t(cloud.colors.cols()) != n || cloud.scan_id.size() != n || cloud.point_index.size() != n)
    throw ContractError("point cloud: channel sizes differ");
  if (!cloud.reflective.empty() && cloud.reflective.size() != n)
    throw ContractError("point cloud: reflective channel size differs");
  if (!cloud.positions.allFinite()) throw ContractError("point cloud: non-finite position");
}

Mask view_coverage(const RenderView& view) {
  const RayGrid grid = make_ray_grid(view.projection);
  if (!view.aperture) return grid.valid;
  validate(*view.aperture);
  Mask cov = grid.valid;
  const Eigen::Matrix3d to_aperture = view.aperture->orientation.transpose() * view.projection.orientation;
  parallel_rows(grid.height, [&](Eigen::Index r) {
    for (Eigen::Index c = 0; c < grid.width; ++c)
      if (cov(r, c) && !ray_to_pixel(*view.aperture, to_aperture * grid.at(r, c))) cov(r, c) = false;
  });
  return cov;
}

namespace {

constexpr std::uint64_t kEmptyKey = ~std::uint64_t{0};

std::uint64_t depth_key(float range, std::uint32_t point_index) {
  // Positive IEEE floats order like their bit patterns.
  return (std::uint64_t(std::bit_cast<std::uint32_t>(range)) << 32) | point_index;
}

RenderResult empty_result(Eigen::Index rows, Eigen::Index cols) {
  RenderResult out;
  out.rgb = RgbImage(rows, cols);
  out.depth = DepthMap{Plane<float>::Zero(rows, cols), Mask::Constant(rows, cols, false), {int(rows), 0.0}};
  out.point_index = Plane<std::uint32_t>::Constant(rows, cols, kNoPoint);
  out.source_scan = Plane<std::int32_t>::Constant(rows, cols, kNoScan);
  out.reflective = Plane<std::uint8_t>::Zero(rows, cols);
  return out;
}

// Visits every pixel covered by a point's splat footprint.
template <typename Visit>
void for_each_splat_pixel(const Vec2<double>& px, int radius, double radius_sq, const ProjectionSpec& spec,
                          Visit&& visit) {
  const long cx = long(std::floor(px.x() + 0.5)), cy = long(std::floor(px.y() + 0.5));
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      if (double(dx * dx + dy * dy) > radius_sq) continue;
      long x = cx + dx, y = cy + dy;
      if (spec.wraps_u()) x = ((x % spec.width) + spec.width) % spec.width;
      if (spec.wraps_v()) y = ((y % spec.height) + spec.height) % spec.height;
      if (x < 0 || x >= spec.width || y < 0 || y >= spec.height) continue;
      visit(Eigen::Index(y), Eigen::Index(x));
    }
}

// One z-buffer pass writing only pixels in `writable`, from points whose scan id
// passes `scan_filter` (every point when empty). Winners are the lexicographic
// minimum of (range, point_index), so the outcome is independent of scheduling.
void render_pass(const PointCloud& cloud, const RenderView& view, const RenderSettings& settings,
                 const Mask& writable, std::optional<std::uint16_t> scan_filter, RenderResult& out) {
  const ProjectionSpec& spec = view.projection;
  const std::size_t npix = std::size_t(spec.width) * std::size_t(spec.height);
  std::vector<std::atomic<std::uint64_t>> keys(npix);
  for (auto& k : keys) k.store(kEmptyKey, std::memory_order_relaxed);

  const Eigen::Isometry3d camera_from_world = view.world_from_camera.inverse();
  const Eigen::Matrix3d proj_from_camera = spec.orientation.transpose();
  const int radius = int(std::floor(settings.splat_radius_px + 0.5));
  const double radius_sq = (settings.splat_radius_px + 0.5) * (settings.splat_radius_px + 0.5);

  struct Projected {
    float range;
    Vec2<double> px;
  };
  const auto project_point = [&](Eigen::Index i) -> std::optional<Projected> {
    if (scan_filter && cloud.scan_id[std::size_t(i)] != *scan_filter) return std::nullopt;
    const Eigen::Vector3d pc = camera_from_world * cloud.positions.col(i).cast<double>();
    const double range = pc.norm();
    if (!(range > 0)) return std::nullopt;
    const auto px = ray_to_pixel(spec, proj_from_camera * pc);
    if (!px) return std::nullopt;
    return Projected{static_cast<float>(range), *px};
  };

  const Eigen::Index n = cloud.size();
  tbb::parallel_for(tbb::blocked_range<Eigen::Index>(0, n, 4096), [&](const tbb::blocked_range<Eigen::Index>& blk) {
    for (Eigen::Index i = blk.begin(); i != blk.end(); ++i) {
      const auto p = project_point(i);
      if (!p) continue;
      const std::uint64_t key = depth_key(p->range, cloud.point_index[std::size_t(i)]);
      for_each_splat_pixel(p->px, radius, radius_sq, spec, [&](Eigen::Index y, Eigen::Index x) {
        if (!writable(y, x)) return;
        auto& slot = keys[std::size_t(y) * spec.width + std::size_t(x)];
        std::uint64_t cur = slot.load(std::memory_order_relaxed);
        while (key < cur && !slot.compare_exchange_weak(cur, key, std::memory_order_relaxed)) {
        }
      });
    }
  });

  // Second sweep: each winning key belongs to exactly one point (point_index is
  // unique), which writes its attributes.
  tbb::parallel_for(tbb::blocked_range<Eigen::Index>(0, n, 4096), [&](const tbb::blocked_range<Eigen::Index>& blk) {
    for (Eigen::Index i = blk.begin(); i != blk.end(); ++i) {
      const auto p = project_point(i);
      if (!p) continue;
      const std::uint64_t key = depth_key(p->range, cloud.point_index[std::size_t(i)]);
      for_each_splat_pixel(p->px, radius, radius_sq, spec, [&](Eigen::Index y, Eigen::Index x) {
        if (keys[std::size_t(y) * spec.width + std::size_t(x)].load(std::memory_order_relaxed) != key) return;
        out.depth.values(y, x) = p->range;
        out.depth.valid(y, x) = true;
        for (int ch = 0; ch < 3; ++ch) out.rgb.channel[ch](y, x) = cloud.colors(ch, i);
        out.point_index(y, x) = cloud.point_index[std::size_t(i)];
        out.source_scan(y, x) = cloud.scan_id[std::size_t(i)];
        out.reflective(y, x) = cloud.reflective.empty() ? 0 : cloud.reflective[std::size_t(i)];
      });
    }
  });
}

void check_settings(const RenderSettings& settings) {
  if (!(settings.splat_radius_px >= 0) || !std::isfinite(settings.splat_radius_px))
    throw ConfigError("render: splat radius must be non-negative");
}

}  // namespace

RenderResult render(const PointCloud& cloud, const RenderView& view, const RenderSettings& settings) {
  if (cloud.size() == 0) throw ContractError("render: empty point cloud");
  validate(cloud);
  check_settings(settings);
  const Mask coverage = view_coverage(view);
  RenderResult out = empty_result(view.projection.height, view.projection.width);
  render_pass(cloud, view, settings, coverage, std::nullopt, out);
  return out;
}

RenderResult render_with_hole_fill(std::span<const PointCloud> bundle, const RenderView& view,
                                   const RenderSettings& settings) {
  if (bundle.empty()) throw ContractError("render: empty scan bundle");
  check_settings(settings);

  std::vector<std::uint16_t> present;
  for (const auto& cloud : bundle) {
    validate(cloud);
    for (auto id : cloud.scan_id)
      if (std::find(present.begin(), present.end(), id) == present.end()) present.push_back(id);
  }
  if (present.empty()) throw ContractError("render: empty scan bundle");
  std::vector<std::uint16_t> order = settings.hole_fill_order.empty() ? present : settings.hole_fill_order;
  for (auto id : present)
    if (std::find(order.begin(), order.end(), id) == order.end())
      throw ContractError("render: hole_fill_order misses scan " + std::to_string(id));

  // Point indices are only unique within a cloud; merge so one z-buffer sees all.
  std::optional<PointCloud> merged;
  if (bundle.size() > 1) {
    merged = bundle[0];
    for (std::size_t i = 1; i < bundle.size(); ++i) merged->append(bundle[i]);
  }
  const PointCloud& cloud = merged ? *merged : bundle[0];

  const Mask coverage = view_coverage(view);
  RenderResult out = empty_result(view.projection.height, view.projection.width);
  for (auto id : order) {
    const Mask writable = coverage && !out.depth.valid;
    if (!writable.any()) break;
    render_pass(cloud, view, settings, writable, id, out);
  }
  return out;
}

StereoSample synthesize_stereo_sample(std::span<const PointCloud> bundle, const StereoRig& rig,
                                      const ProjectionSpec& camera, const ProjectionSpec& projection,
                                      const RenderSettings& settings) {
  if (projection.kind != ProjectionKind::equirectangular)
    throw ConfigError("stereo sample: disparity geometry needs an equirectangular projection");
  ProjectionSpec proj = projection;
  proj.orientation = rig.projection_orientation;

  StereoSample s;
  s.reference = render_with_hole_fill(bundle, RenderView{rig.reference_pose, proj, camera}, settings);
  s.secondary = render_with_hole_fill(bundle, RenderView{rig.secondary_pose(), proj, camera}, settings);

  s.depth_ref = s.reference.depth;
  s.depth_ref.geometry = {proj.height, rig.baseline_m};
  const Mask reflective = s.reference.reflective != std::uint8_t{0};
  if (reflective.any()) s.depth_ref = mask_regions(s.depth_ref, reflective, MaskMode::zero_out);
  s.disparity_ref = depth_to_disparity(s.depth_ref);
  return s;
}

namespace {

bool inside_polygon(const std::vector<Eigen::Vector2d>& poly, double x, double y) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y() > y) != (b.y() > y) && x < (b.x() - a.x()) * (y - a.y()) / (b.y() - a.y()) + a.x()) inside = !inside;
  }
  return inside;
}

}  // namespace

DepthMap mask_regions(const DepthMap& depth, const Mask& region, MaskMode mode, double clip_m) {
  if (region.rows() != depth.values.rows() || region.cols() != depth.values.cols())
    throw ContractError("mask_regions: region shape mismatch");
  if (mode == MaskMode::clip_to && !(clip_m > 0)) throw ConfigError("mask_regions: clip distance must be positive");
  DepthMap out = depth;
  for (Eigen::Index r = 0; r < region.rows(); ++r)
    for (Eigen::Index c = 0; c < region.cols(); ++c) {
      if (!region(r, c)) continue;
      if (mode == MaskMode::zero_out) {
        out.values(r, c) = 0.0f;
        out.valid(r, c) = false;
      } else if (out.valid(r, c)) {
        out.values(r, c) = std::min(out.values(r, c), static_cast<float>(clip_m));
      }
    }
  return out;
}

DepthMap mask_regions(const DepthMap& depth, std::span<const MaskRegion> regions) {
  DepthMap out = depth;
  for (const auto& reg : regions) {
    if (reg.polygon.size() < 3) throw ConfigError("mask_regions: polygon needs at least three vertices");
    Mask m = Mask::Constant(depth.values.rows(), depth.values.cols(), false);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = inside_polygon(reg.polygon, double(c), double(r));
    out = mask_regions(out, m, reg.mode, reg.clip_m);
  }
  return out;
}

Mask rasterize_world_region(const WorldRegion& region, const RenderView& view) {
  if (region.polygon.size() < 3) throw ConfigError("world region: polygon needs at least three vertices");
  // Newell normal tolerates slightly non-planar input.
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < region.polygon.size(); ++i) {
    const auto& a = region.polygon[i];
    const auto& b = region.polygon[(i + 1) % region.polygon.size()];
    normal += a.cross(b);
    centroid += a;
  }
  centroid /= double(region.polygon.size());
  if (normal.norm() < 1e-12) throw ConfigError("world region: degenerate polygon");
  normal.normalize();
  const Eigen::Vector3d e1 = (region.polygon[0] - centroid).normalized();
  const Eigen::Vector3d e2 = normal.cross(e1);
  std::vector<Eigen::Vector2d> flat;
  for (const auto& p : region.polygon) flat.emplace_back((p - centroid).dot(e1), (p - centroid).dot(e2));

  const RayGrid grid = make_ray_grid(view.projection);
  const Eigen::Matrix3d world_from_proj = view.world_from_camera.linear() * view.projection.orientation;
  const Eigen::Vector3d origin = view.world_from_camera.translation();
  Mask out = Mask::Constant(grid.height, grid.width, false);
  parallel_rows(grid.height, [&](Eigen::Index r) {
    for (Eigen::Index c = 0; c < grid.width; ++c) {
      if (!grid.valid(r, c)) continue;
      const Eigen::Vector3d dir = world_from_proj * grid.at(r, c);
      const double denom = normal.dot(dir);
      if (std::abs(denom) < 1e-12) continue;
      const double s = normal.dot(centroid - origin) / denom;
      if (!(s > 0)) continue;
      const Eigen::Vector3d q = origin + s * dir - centroid;
      out(r, c) = inside_polygon(flat, q.dot(e1), q.dot(e2));
    }
  });
  return out;
}

}  // namespace wfov
