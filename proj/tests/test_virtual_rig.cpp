#include <doctest.h>

#include <set>

#include "wfov/virtual_rig.hpp"

using namespace wfov;

TEST_SUITE("virtual_rig") {
  TEST_CASE("180 degree virtual camera") {
    VirtualIntrinsicsPolicy policy;
    policy.reference = {560, 540, 1023.5, 575.5, -0.2, 0.6, 2048, 1152};
    const auto K = virtual_intrinsics(policy, 180);
    CHECK(K.fx == 1.25 * 560);
    CHECK(K.fy == 1.25 * 540);
    CHECK(K.xi == 0.8 * -0.2);
    CHECK(K.alpha == 0.6 + 0.2 * (1 - 0.6));
    CHECK(K.cx == 1023.5);
    CHECK(K.cy == 575.5);
    CHECK(K.width == 2048);
  }

  TEST_CASE("virtual intrinsics are monotone in FOV") {
    VirtualIntrinsicsPolicy policy;
    policy.reference = {560, 560, 1023.5, 575.5, -0.2, 0.6, 2048, 1152};
    auto prev = virtual_intrinsics(policy, 120);
    for (int f = 121; f <= 195; ++f) {
      const auto K = virtual_intrinsics(policy, f);
      CHECK(K.fx < prev.fx);   // focal shrinks
      CHECK(K.xi > prev.xi);   // negative xi moves toward zero
      CHECK(K.alpha > prev.alpha);
      prev = K;
    }
  }

  TEST_CASE("virtual intrinsics reject bad policies") {
    VirtualIntrinsicsPolicy policy;
    policy.reference = {560, 560, 1023.5, 575.5, -0.2, 0.6, 2048, 1152};
    CHECK_THROWS_AS(virtual_intrinsics(policy, 0), ConfigError);
    policy.m = 1.0;
    CHECK_THROWS_AS(virtual_intrinsics(policy, 180), ConfigError);
  }

  TEST_CASE("rig geometry") {
    Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
    pose.translation() = Eigen::Vector3d(1, 2, 3);
    const StereoRig v = build_rig(pose, 0.065, 195, RigOrientation::vertical);
    CHECK((v.secondary_pose().translation() - Eigen::Vector3d(1, 2.065, 3)).norm() < 1e-15);
    CHECK(v.secondary_pose().linear() == pose.linear());
    const StereoRig h = build_rig(pose, 0.2, 120, RigOrientation::horizontal);
    CHECK((h.secondary_pose().translation() - Eigen::Vector3d(1.2, 2, 3)).norm() < 1e-15);
    // The horizontal projection frame keeps looking forward.
    CHECK((h.projection_orientation * Eigen::Vector3d::UnitZ() - Eigen::Vector3d::UnitZ()).norm() == 0);
    CHECK(h.projection_orientation.determinant() == doctest::Approx(1));
  }

  TEST_CASE("rig validation") {
    const auto I = Eigen::Isometry3d::Identity();
    CHECK_THROWS_AS(build_rig(I, 0, 120, RigOrientation::vertical), ConfigError);
    CHECK_THROWS_AS(build_rig(I, 0.1, 250, RigOrientation::vertical), ConfigError);
    Eigen::Isometry3d bad = I;
    bad.linear()(0, 0) = 2;
    CHECK_THROWS_AS(build_rig(bad, 0.1, 120, RigOrientation::vertical), ConfigError);
    CHECK(parse_rig_orientation("horizontal") == RigOrientation::horizontal);
    CHECK_THROWS_AS(parse_rig_orientation("diagonal"), ConfigError);
    CHECK(parse_camera_kind("pinhole") == CameraKind::pinhole);
  }

  TEST_CASE("default grid enumeration") {
    const auto rigs = enumerate_benchmark(BenchmarkGrid{}, Eigen::Isometry3d::Identity());
    CHECK(rigs.size() == 50);
    int fv = 0, fh = 0, pv = 0, ph = 0;
    std::set<std::string> ids;
    for (const auto& r : rigs) {
      ids.insert(r.id);
      const bool vert = r.rig.orientation == RigOrientation::vertical;
      if (r.camera == CameraKind::ds_fisheye)
        (vert ? fv : fh)++;
      else
        (vert ? pv : ph)++;
    }
    CHECK(fv == 20);
    CHECK(fh == 20);
    CHECK(pv == 5);
    CHECK(ph == 5);
    CHECK(ids.size() == 50);
    CHECK(std::is_sorted(rigs.begin(), rigs.end(), [](const auto& a, const auto& b) { return a.id < b.id; }));
    CHECK(ids.count("ds-vertical-b065-fov195") == 1);
    CHECK(ids.count("pinhole-horizontal-b300-fov090") == 1);
  }

  TEST_CASE("rig cameras") {
    VirtualIntrinsicsPolicy policy;
    policy.reference = {560, 560, 1023.5, 575.5, -0.2, 0.6, 2048, 1152};
    const auto rigs = enumerate_benchmark(BenchmarkGrid{}, Eigen::Isometry3d::Identity());
    for (const auto& r : rigs) {
      const auto cam = rig_camera(r, policy);
      CHECK(cam.width == 2048);
      CHECK(cam.height == 1152);
      if (r.camera == CameraKind::pinhole) {
        CHECK(cam.kind == ProjectionKind::pinhole);
        CHECK(cam.pinhole.fx == doctest::Approx(1024));
      } else {
        CHECK(cam.kind == ProjectionKind::ds_fisheye);
        REQUIRE(cam.max_fov_deg);
        CHECK(*cam.max_fov_deg == r.rig.fov_deg);
      }
    }
  }

  TEST_CASE("grid validation") {
    BenchmarkGrid g;
    g.baselines_m.push_back(-0.1);
    CHECK_THROWS_AS(validate(g), ConfigError);
  }
}
