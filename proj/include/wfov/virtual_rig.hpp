#pragma once

// FOV-parameterized virtual cameras and the stereo rigs of the benchmark grid.

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Geometry>

#include "wfov/camera_models.hpp"
#include "wfov/projections.hpp"

namespace wfov {

/// Derives virtual DS intrinsics from a calibrated reference camera. The focal
/// length is scaled by n * 180 / FOV, xi by (1 - m * FOV / 180), and alpha moves
/// toward 1 by m * (1 - alpha) * FOV / 180.
struct VirtualIntrinsicsPolicy {
  DoubleSphereIntrinsics<double> reference{};
  double m{0.2};
  double n{1.25};
};

DoubleSphereIntrinsics<double> virtual_intrinsics(const VirtualIntrinsicsPolicy& policy, double fov_deg);

enum class RigOrientation { vertical, horizontal };
enum class CameraKind { ds_fisheye, pinhole };

std::string_view to_string(RigOrientation o);
std::string_view to_string(CameraKind k);
RigOrientation parse_rig_orientation(std::string_view s);
CameraKind parse_camera_kind(std::string_view s);

/// Two cameras with identical orientation. The reference camera is the upper (or
/// left) one; the second sits baseline_m away along `axis`.
///
/// Camera frames follow the usual vision convention (x right, y down, z forward).
/// The projection orientation puts the equirectangular v = H pole on the baseline,
/// pointing at the second camera, so epipolar curves are image columns.
struct StereoRig {
  Eigen::Isometry3d reference_pose{Eigen::Isometry3d::Identity()};  // world_from_camera
  double baseline_m{0};
  Eigen::Vector3d axis{0, 1, 0};  // world frame, unit
  double fov_deg{0};
  RigOrientation orientation{RigOrientation::vertical};
  Eigen::Matrix3d projection_orientation{Eigen::Matrix3d::Identity()};

  Eigen::Isometry3d secondary_pose() const;
};

/// Rotation from the spherical projection frame into the camera frame for a rig.
Eigen::Matrix3d stereo_projection_orientation(RigOrientation orientation);

StereoRig build_rig(const Eigen::Isometry3d& center_pose, double baseline_m, double fov_deg,
                    RigOrientation orientation);

struct BenchmarkGrid {
  std::vector<double> baselines_m{0.020, 0.065, 0.120, 0.200, 0.300};
  std::vector<double> fovs_deg{120, 140, 165, 195};
  double pinhole_fov_deg{90};
};

void validate(const BenchmarkGrid& grid);

struct RigDescriptor {
  std::string id;
  CameraKind camera{CameraKind::ds_fisheye};
  StereoRig rig;
};

/// Every fisheye (baseline x FOV) and pinhole (baseline) rig in both orientations,
/// sorted by id.
std::vector<RigDescriptor> enumerate_benchmark(const BenchmarkGrid& grid, const Eigen::Isometry3d& scene_pose);

/// The capturing camera of a rig view: virtual DS intrinsics limited to the rig FOV,
/// or a pinhole with the same image size.
ProjectionSpec rig_camera(const RigDescriptor& desc, const VirtualIntrinsicsPolicy& policy);

}  // namespace wfov
