#include "wfov/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace wfov {

namespace {

std::uint32_t mix(std::uint32_t x) {
  x ^= x >> 16;
  x *= 0x7feb352dU;
  x ^= x >> 15;
  x *= 0x846ca68bU;
  x ^= x >> 16;
  return x;
}

bool segment_hits_box(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const AlignedBox& box) {
  const Eigen::Vector3d d = b - a;
  const double len = d.norm();
  if (len <= 0) return false;
  // Stop 1 mm short of the point so surfaces never occlude themselves.
  double t0 = 0.0, t1 = 1.0 - 1e-3 / len;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (a[k] < box.lo[k] || a[k] > box.hi[k]) return false;
      continue;
    }
    double ta = (box.lo[k] - a[k]) / d[k], tb = (box.hi[k] - a[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

std::array<std::uint8_t, 3> procedural_texture(double s, double t) {
  // 4 cm cells of hashed color modulated by a fine sinusoid.
  const auto i = static_cast<std::int32_t>(std::floor(s / 0.04));
  const auto j = static_cast<std::int32_t>(std::floor(t / 0.04));
  const std::uint32_t h = mix(std::uint32_t(i) * 73856093U ^ std::uint32_t(j) * 19349663U);
  const double shade = 0.75 + 0.25 * std::sin(s * 97.0) * std::cos(t * 83.0);
  std::array<std::uint8_t, 3> out{};
  for (int k = 0; k < 3; ++k) {
    const double base = 40.0 + double((h >> (8 * k)) & 0xFF) * (200.0 / 255.0);
    out[std::size_t(k)] = static_cast<std::uint8_t>(std::clamp(std::floor(base * shade + 0.5), 0.0, 255.0));
  }
  return out;
}

PointCloud textured_rectangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& u, const Eigen::Vector3d& v,
                              double spacing, std::uint16_t scan_id) {
  if (!(spacing > 0)) throw ConfigError("textured_rectangle: spacing must be positive");
  const double lu = u.norm(), lv = v.norm();
  const auto nu = static_cast<Eigen::Index>(std::floor(lu / spacing)) + 1;
  const auto nv = static_cast<Eigen::Index>(std::floor(lv / spacing)) + 1;
  PointCloud cloud;
  cloud.resize(nu * nv);
  for (Eigen::Index j = 0; j < nv; ++j)
    for (Eigen::Index i = 0; i < nu; ++i) {
      const Eigen::Index k = j * nu + i;
      const double a = nu > 1 ? double(i) / double(nu - 1) : 0.0;
      const double b = nv > 1 ? double(j) / double(nv - 1) : 0.0;
      cloud.positions.col(k) = (origin + a * u + b * v).cast<float>();
      const auto rgb = procedural_texture(a * lu, b * lv);
      for (int c = 0; c < 3; ++c) cloud.colors(c, k) = rgb[std::size_t(c)];
      cloud.scan_id[std::size_t(k)] = scan_id;
    }
  return cloud;
}

PointCloud visible_from(const PointCloud& cloud, const Eigen::Vector3d& station, const std::vector<AlignedBox>& boxes,
                        std::uint16_t scan_id) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = cloud.positions.col(i).cast<double>();
    if (std::none_of(boxes.begin(), boxes.end(), [&](const AlignedBox& b) { return segment_hits_box(station, p, b); }))
      keep.push_back(i);
  }
  PointCloud out;
  out.resize(Eigen::Index(keep.size()));
  if (!cloud.reflective.empty()) out.reflective.resize(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const Eigen::Index i = keep[k];
    out.positions.col(Eigen::Index(k)) = cloud.positions.col(i);
    out.colors.col(Eigen::Index(k)) = cloud.colors.col(i);
    out.scan_id[k] = scan_id;
    if (!cloud.reflective.empty()) out.reflective[k] = cloud.reflective[std::size_t(i)];
  }
  return out;
}

PointCloud box_surface(const AlignedBox& box, double spacing) {
  const Eigen::Vector3d e = box.hi - box.lo;
  const Eigen::Vector3d ex(e.x(), 0, 0), ey(0, e.y(), 0), ez(0, 0, e.z());
  PointCloud out;
  out.resize(0);
  out.append(textured_rectangle(box.lo, ex, ey, spacing));
  out.append(textured_rectangle(box.lo + ez, ex, ey, spacing));
  out.append(textured_rectangle(box.lo, ey, ez, spacing));
  out.append(textured_rectangle(box.lo + ex, ey, ez, spacing));
  out.append(textured_rectangle(box.lo, ex, ez, spacing));
  out.append(textured_rectangle(box.lo + ey, ex, ez, spacing));
  return out;
}

DoubleSphereIntrinsics<double> reference_ds_camera() {
  return DoubleSphereIntrinsics<double>{560.0, 560.0, 1023.5, 575.5, -0.2, 0.6, 2048, 1152};
}

namespace {

SyntheticScene assemble(const std::string& scene_id, const PointCloud& geometry, const std::vector<AlignedBox>& boxes,
                        const std::vector<Eigen::Vector3d>& stations) {
  SyntheticScene s;
  s.stations = stations;
  s.manifest.scene_id = scene_id;
  s.manifest.camera.reference = reference_ds_camera();
  for (std::size_t k = 0; k < stations.size(); ++k) {
    const auto id = static_cast<std::uint16_t>(k);
    s.scans.push_back(visible_from(geometry, stations[k], boxes, id));
    s.manifest.scans.push_back({id, "scans/scan_" + std::to_string(k) + ".ply"});
  }
  s.manifest.central_scan = 0;
  return s;
}

}  // namespace

SyntheticScene make_room_scene(const std::string& scene_id, double spacing) {
  // World frame = camera frame of the rig center: x right, y down, z forward.
  const double h = 1.65;
  const Eigen::Vector3d lo(-3.0, h - 3.0, -3.0), hi(3.0, h, 3.0);
  PointCloud geometry = box_surface({lo, hi}, spacing);
  const AlignedBox occluder{{-0.4, h - 1.0, 1.0}, {0.4, h, 1.6}};
  geometry.append(box_surface(occluder, spacing));

  SyntheticScene s = assemble(scene_id, geometry, {occluder}, {{0, 0, 0}, {-0.6, 0, 0}, {0.6, 0, 0}});
  s.manifest.capture_height_m = h;
  s.manifest.lighting = "office";
  WorldRegion window;
  window.polygon = {{-1.0, -0.8, 3.0}, {1.0, -0.8, 3.0}, {1.0, 0.4, 3.0}, {-1.0, 0.4, 3.0}};
  window.mode = MaskMode::zero_out;
  s.regions.push_back(window);
  s.manifest.masks = "masks/regions.json";
  return s;
}

SyntheticScene make_occluder_scene(double wall_z, double plate_z, double plate_half, double spacing) {
  PointCloud geometry = textured_rectangle({-3.0, -3.0, wall_z}, {6.0, 0, 0}, {0, 6.0, 0}, spacing);
  geometry.append(textured_rectangle({-plate_half, -plate_half, plate_z}, {2 * plate_half, 0, 0},
                                     {0, 2 * plate_half, 0}, spacing));
  const AlignedBox plate{{-plate_half, -plate_half, plate_z}, {plate_half, plate_half, plate_z + 0.02}};
  return assemble("occluder", geometry, {plate}, {{0, 0, 0}, {-0.5, 0, 0}, {0.5, 0, 0}});
}

fs::path write_scene(const SyntheticScene& scene, const fs::path& dir) {
  fs::create_directories(dir / "scans");
  for (std::size_t k = 0; k < scene.scans.size(); ++k) write_ply(dir / scene.manifest.scans[k].path, scene.scans[k]);
  if (scene.manifest.masks) {
    fs::create_directories((dir / *scene.manifest.masks).parent_path());
    write_world_regions(dir / *scene.manifest.masks, scene.regions);
  }
  const fs::path manifest = dir / "manifest.json";
  write_scene_manifest(manifest, scene.manifest);
  return manifest;
}

}  // namespace wfov
