#include "wfov/virtual_rig.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace wfov {

DoubleSphereIntrinsics<double> virtual_intrinsics(const VirtualIntrinsicsPolicy& policy, double fov_deg) {
  if (!(fov_deg > 0)) throw ConfigError("virtual intrinsics: FOV must be positive");
  if (!(policy.m >= 0 && policy.m < 1)) throw ConfigError("virtual intrinsics: m must lie in [0, 1)");
  if (!(policy.n > 0)) throw ConfigError("virtual intrinsics: n must be positive");

  const auto& ref = policy.reference;
  const double ratio = fov_deg / 180.0;
  DoubleSphereIntrinsics<double> out = ref;
  out.fx = ref.fx * (policy.n / ratio);
  out.fy = ref.fy * (policy.n / ratio);
  out.xi = ref.xi * (1.0 - policy.m * ratio);
  out.alpha = ref.alpha + policy.m * (1.0 - ref.alpha) * ratio;
  if (!(out.alpha >= 0 && out.alpha <= 1)) throw ConfigError("virtual intrinsics: alpha left [0, 1]");
  return out;
}

std::string_view to_string(RigOrientation o) { return o == RigOrientation::vertical ? "vertical" : "horizontal"; }
std::string_view to_string(CameraKind k) { return k == CameraKind::ds_fisheye ? "ds_fisheye" : "pinhole"; }

RigOrientation parse_rig_orientation(std::string_view s) {
  if (s == "vertical") return RigOrientation::vertical;
  if (s == "horizontal") return RigOrientation::horizontal;
  throw ConfigError("unknown rig orientation '" + std::string(s) + "'");
}

CameraKind parse_camera_kind(std::string_view s) {
  if (s == "ds_fisheye") return CameraKind::ds_fisheye;
  if (s == "pinhole") return CameraKind::pinhole;
  throw ConfigError("unknown camera kind '" + std::string(s) + "'");
}

Eigen::Isometry3d StereoRig::secondary_pose() const {
  Eigen::Isometry3d pose = reference_pose;
  pose.translation() += baseline_m * axis;
  return pose;
}

Eigen::Matrix3d stereo_projection_orientation(RigOrientation orientation) {
  if (orientation == RigOrientation::vertical) return Eigen::Matrix3d::Identity();
  // Maps the projection-frame pole (0, 1, 0) onto camera +x and keeps +z forward.
  Eigen::Matrix3d r;
  r << 0, 1, 0,
      -1, 0, 0,
       0, 0, 1;
  return r;
}

StereoRig build_rig(const Eigen::Isometry3d& center_pose, double baseline_m, double fov_deg,
                    RigOrientation orientation) {
  if (!(baseline_m > 0) || !std::isfinite(baseline_m)) throw ConfigError("rig: baseline must be positive");
  if (!(fov_deg >= 60 && fov_deg <= 200)) throw ConfigError("rig: FOV must lie in [60, 200] degrees");
  const Eigen::Matrix3d R = center_pose.linear();
  if (!(R.transpose() * R).isApprox(Eigen::Matrix3d::Identity(), 1e-9) || std::abs(R.determinant() - 1) > 1e-9)
    throw ConfigError("rig: pose rotation is not a proper rotation");

  StereoRig rig;
  rig.reference_pose = center_pose;
  rig.baseline_m = baseline_m;
  rig.fov_deg = fov_deg;
  rig.orientation = orientation;
  rig.projection_orientation = stereo_projection_orientation(orientation);
  // Camera-frame baseline: +y (down) for vertical rigs, +x (right) for horizontal.
  rig.axis = R * (rig.projection_orientation * Eigen::Vector3d::UnitY());
  return rig;
}

void validate(const BenchmarkGrid& grid) {
  for (double b : grid.baselines_m)
    if (!(b > 0)) throw ConfigError("grid: baselines must be positive");
  for (double f : grid.fovs_deg)
    if (!(f > 0)) throw ConfigError("grid: FOVs must be positive");
  if (!(grid.pinhole_fov_deg > 0)) throw ConfigError("grid: pinhole FOV must be positive");
}

namespace {

std::string descriptor_id(CameraKind cam, RigOrientation o, double baseline_m, double fov_deg) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s-%s-b%03ld-fov%03ld", cam == CameraKind::ds_fisheye ? "ds" : "pinhole",
                o == RigOrientation::vertical ? "vertical" : "horizontal", std::lround(baseline_m * 1000.0),
                std::lround(fov_deg));
  return buf;
}

}  // namespace

std::vector<RigDescriptor> enumerate_benchmark(const BenchmarkGrid& grid, const Eigen::Isometry3d& scene_pose) {
  validate(grid);
  std::vector<RigDescriptor> out;
  for (auto o : {RigOrientation::vertical, RigOrientation::horizontal}) {
    for (double b : grid.baselines_m) {
      for (double f : grid.fovs_deg)
        out.push_back({descriptor_id(CameraKind::ds_fisheye, o, b, f), CameraKind::ds_fisheye,
                       build_rig(scene_pose, b, f, o)});
      out.push_back({descriptor_id(CameraKind::pinhole, o, b, grid.pinhole_fov_deg), CameraKind::pinhole,
                    build_rig(scene_pose, b, grid.pinhole_fov_deg, o)});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

ProjectionSpec rig_camera(const RigDescriptor& desc, const VirtualIntrinsicsPolicy& policy) {
  const auto& ref = policy.reference;
  if (desc.camera == CameraKind::pinhole)
    return ProjectionSpec::pinhole_camera(pinhole_from_fov(desc.rig.fov_deg, ref.width, ref.height));
  return ProjectionSpec::ds_camera(virtual_intrinsics(policy, desc.rig.fov_deg), desc.rig.fov_deg);
}

}  // namespace wfov
