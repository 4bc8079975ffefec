#pragma once

// Procedural scenes standing in for LiDAR scan bundles: textured planes, a room with
// an occluding box, and per-scan visibility so that adjacent scans see what the
// central one misses.

#include <cstdint>
#include <vector>

#include <Eigen/Geometry>

#include "wfov/cloud_render.hpp"
#include "wfov/dataset_io.hpp"

namespace wfov {

/// Deterministic color texture on two surface coordinates (meters). Neighboring
/// samples differ strongly so that correspondences are unambiguous.
std::array<std::uint8_t, 3> procedural_texture(double s, double t);

/// Points on the rectangle origin + a * u + b * v for a, b in [0, 1] sampled every
/// `spacing` meters, colored by procedural_texture(a * |u|, b * |v|).
PointCloud textured_rectangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& u, const Eigen::Vector3d& v,
                              double spacing, std::uint16_t scan_id = 0);

struct AlignedBox {
  Eigen::Vector3d lo, hi;
};

/// Keeps the points whose line of sight from `station` is not blocked by any box.
PointCloud visible_from(const PointCloud& cloud, const Eigen::Vector3d& station, const std::vector<AlignedBox>& boxes,
                        std::uint16_t scan_id);

/// Surfaces of a box (all six faces).
PointCloud box_surface(const AlignedBox& box, double spacing);

struct SyntheticScene {
  SceneManifest manifest;
  std::vector<PointCloud> scans;  // in manifest order, central first
  std::vector<Eigen::Vector3d> stations;
  std::vector<WorldRegion> regions;
};

/// A closed room (6 x 3 x 6 m, floor at y = +capture height) with a box occluder in
/// front of the rig and a window annotation on the back wall. Three scans taken
/// from the center and 0.6 m to either side.
SyntheticScene make_room_scene(const std::string& scene_id, double spacing = 0.02);

/// A wall at z = wall_z behind a square plate occluder at z = plate_z; three scans.
SyntheticScene make_occluder_scene(double wall_z = 3.0, double plate_z = 1.5, double plate_half = 0.3,
                                   double spacing = 0.01);

/// A reference double sphere camera with the benchmark image size.
DoubleSphereIntrinsics<double> reference_ds_camera();

/// Writes scans/, masks/ and manifest.json under `dir`; returns the manifest path.
fs::path write_scene(const SyntheticScene& scene, const fs::path& dir);

}  // namespace wfov
