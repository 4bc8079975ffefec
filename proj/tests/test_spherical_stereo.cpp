#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "wfov/cloud_render.hpp"
#include "wfov/spherical_stereo.hpp"
#include "wfov/synthetic.hpp"

using namespace wfov;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_SUITE("spherical_stereo") {
  TEST_CASE("analytic fixtures") {
    // Right angle at the reference camera with a 45 degree parallax: isosceles.
    const auto d = disparity_to_depth(kPi / 2, 0.25 * 1000, 1000, 1.0);
    REQUIRE(d);
    CHECK(std::abs(*d - 1.0) < 1e-12);
    CHECK(std::abs(depth_to_disparity(kPi / 2, 1.0, 1000, 1.0) - 250.0) < 1e-9);
  }

  TEST_CASE("law of sines against a frozen value") {
    // Parallax pi / 6 with B = 65 mm. At L = pi / 3 the triangle is isosceles; at
    // L = pi / 2 the value is frozen from a 40-digit evaluation.
    const int H = 600;
    const auto d = disparity_to_depth(kPi / 3, H / 6.0, H, 0.065);
    REQUIRE(d);
    CHECK(std::abs(*d - 0.065) < 1e-14);
    const auto e = disparity_to_depth(kPi / 2, H / 6.0, H, 0.065);
    REQUIRE(e);
    CHECK(std::abs(*e - 0.11258330249197702408) < 1e-14);
  }

  TEST_CASE("planar triangle oracle") {
    CHECK(std::abs(depth_to_disparity(kPi / 2, 2.0, 9, 0.3) - 0.42653828049740663227) < 1e-12);
    CHECK(std::abs(depth_to_disparity(3 * kPi / 4, 1.5, 128, 0.065) - 1.2874729033879501929) < 1e-12);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> lat(1e-3, kPi - 1e-3), depth(0.05, 80), base(0.01, 0.5);
    for (int i = 0; i < 20000; ++i) {
      const double L = lat(rng), z = depth(rng), b = base(rng);
      CHECK(std::abs(depth_to_disparity(L, z, 512, b) - oracle::triangle_disparity(L, z, b, 512)) < 1e-9);
      CHECK(std::abs(transfer_range(L, z, b) - oracle::triangle_range(L, z, b)) < 1e-10);
    }
  }

  TEST_CASE("round trip through depth") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> hd(64, 2048);
    std::uniform_real_distribution<double> u(0, 1), base(0.01, 0.5);
    int checked = 0;
    for (int i = 0; i < 200000; ++i) {
      const int H = hd(rng);
      const double L = row_latitude(std::floor(u(rng) * H), H);
      const double b = base(rng);
      // Disparity must leave gamma = L - rho positive.
      const double disp = 1e-3 + u(rng) * (L / kPi * H - 2e-3);
      const auto z = disparity_to_depth(L, disp, H, b);
      if (!z) continue;
      CHECK(std::abs(depth_to_disparity(L, *z, H, b) - disp) < 1e-6);
      ++checked;
    }
    CHECK(checked > 190000);
  }

  TEST_CASE("invalid disparities") {
    CHECK_FALSE(disparity_to_depth(1.0, 0.0, 100, 0.1));
    CHECK_FALSE(disparity_to_depth(1.0, 5e-5, 100, 0.1));
    CHECK_FALSE(disparity_to_depth(1.0, -1.0, 100, 0.1));
    CHECK_FALSE(disparity_to_depth(1.0, double(NAN), 100, 0.1));
    // gamma = L - rho <= 0.
    CHECK_FALSE(disparity_to_depth(kPi / 4, 25.0, 100, 0.1));
    CHECK_FALSE(disparity_to_depth(kPi / 4, 30.0, 100, 0.1));
  }

  TEST_CASE("disparity grows toward the pole facing away from the baseline") {
    const int H = 256;
    double prev = 0;
    for (int v = 1; v < H; ++v) {
      const double d = depth_to_disparity(row_latitude(double(v), H), 3.0, H, 0.1);
      CHECK(d > 0);
      if (v < H / 2) CHECK(d > prev);
      prev = d;
    }
  }

  TEST_CASE("map conversion uses pixel-center latitudes and masks") {
    DepthMap depth{Plane<float>::Constant(9, 4, 2.0f), Mask::Constant(9, 4, true), {9, 0.3}};
    depth.valid(0, 0) = false;
    depth.values(3, 1) = 0;
    const DisparityMap disp = depth_to_disparity(depth);
    CHECK_FALSE(disp.valid(0, 0));
    CHECK_FALSE(disp.valid(3, 1));
    CHECK(disp.values(0, 0) == 0);
    // Row 4 of 9 sits exactly on the equator.
    CHECK(std::abs(disp.values(4, 2) - 0.42653828049740663227) < 1e-6);
    const DepthMap back = disparity_to_depth(disp);
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 4; ++c) {
        CHECK(back.valid(r, c) == disp.valid(r, c));
        if (back.valid(r, c)) CHECK(std::abs(back.values(r, c) - 2.0) < 1e-4);
      }
  }

  TEST_CASE("double precision map conversion") {
    BasicDepthMap<double> depth{Plane<double>::Constant(64, 8, 5.0), Mask::Constant(64, 8, true), {64, 0.12}};
    const auto back = disparity_to_depth(depth_to_disparity(depth));
    for (int r = 0; r < 64; ++r) CHECK(std::abs(back.values(r, 3) - 5.0) < 1e-9);
  }

  TEST_CASE("missing geometry is a contract violation") {
    DepthMap depth{Plane<float>::Ones(4, 8), Mask::Constant(4, 8, true), {}};
    CHECK_THROWS_AS(depth_to_disparity(depth), ContractError);
    depth.geometry = {5, 0.1};
    CHECK_THROWS_AS(depth_to_disparity(depth), ContractError);
    depth.geometry = {4, 0.1};
    CHECK_THROWS_AS(depth_between_frames(depth, 0.2), ContractError);
  }

  TEST_CASE("depth_between_frames agrees with a direct render from the second camera") {
    // A textured room wall seen by a vertical rig: render the upper view, transfer its
    // ranges, and compare against the lower view wherever both pick the same point.
    const double B = 0.2;
    const int H = 128;
    PointCloud cloud = textured_rectangle({-3, -1.5, 2.5}, {6, 0, 0}, {0, 3, 0}, 0.01);
    cloud.append(textured_rectangle({-3, 1.5, -3}, {6, 0, 0}, {0, 0, 5.5}, 0.01));  // floor
    const auto proj = ProjectionSpec::equirectangular(H);
    const StereoRig rig = build_rig(Eigen::Isometry3d::Identity(), B, 195, RigOrientation::vertical);
    const RenderSettings exact{0.0, {}};
    const RenderResult upper = render(cloud, {rig.reference_pose, proj, {}}, exact);
    const RenderResult lower = render(cloud, {rig.secondary_pose(), proj, {}}, exact);

    DepthMap up = upper.depth;
    up.geometry = {H, B};
    const DepthMap moved = depth_between_frames(up, B);

    // Pixels where the transferred winner is also the lower view's winner.
    int matched = 0;
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < 2 * H; ++c) {
        if (!up.valid(r, c)) continue;
        const double L = row_latitude(double(r), H);
        const double z = up.values(r, c);
        const auto r2 = Eigen::Index(std::floor(r - depth_to_disparity(L, z, H, B) + 0.5));
        if (r2 < 0 || r2 >= H || !moved.valid(r2, c) || !lower.depth.valid(r2, c)) continue;
        if (lower.point_index(r2, c) != upper.point_index(r, c)) continue;
        if (std::abs(moved.values(r2, c) - float(transfer_range(L, z, B))) > 0) continue;  // collision winner
        CHECK(std::abs(moved.values(r2, c) - oracle::triangle_range(L, z, B)) < 1e-5);
        // The map works at pixel-center latitudes; with the point's exact latitude the
        // transferred range equals the lower camera's measured range.
        const Eigen::Vector3d p = cloud.positions.col(upper.point_index(r, c)).cast<double>();
        const double exact_lat = std::acos(-p.y() / p.norm());
        CHECK(std::abs(transfer_range(exact_lat, p.norm(), B) - lower.depth.values(r2, c)) < 1e-5);
        // Half a row of latitude error moves the range by at most B * pi / (2H).
        CHECK(std::abs(moved.values(r2, c) - lower.depth.values(r2, c)) < B * kPi / (2 * H) + 1e-5);
        ++matched;
      }
    CHECK(matched > 500);
  }

  TEST_CASE("depth_between_frames keeps the nearest of colliding ranges") {
    const int H = 64;
    const double B = 0.5;
    DepthMap up{Plane<float>::Zero(H, 1), Mask::Constant(H, 1, false), {H, B}};
    // Two rows whose transferred pixels coincide: search for a pair.
    std::map<Eigen::Index, std::vector<std::pair<int, float>>> landing;
    for (int r = 8; r < H - 8; ++r)
      for (float z : {0.6f, 0.9f, 1.4f, 3.0f}) {
        const double L = row_latitude(double(r), H);
        const auto r2 = Eigen::Index(std::floor(r - depth_to_disparity(L, double(z), H, B) + 0.5));
        landing[r2].push_back({r, z});
      }
    bool tested = false;
    for (const auto& [r2, list] : landing) {
      for (std::size_t i = 0; i < list.size() && !tested; ++i)
        for (std::size_t j = i + 1; j < list.size() && !tested; ++j) {
          if (list[i].first == list[j].first) continue;
          DepthMap m = up;
          m.values(list[i].first, 0) = list[i].second;
          m.valid(list[i].first, 0) = true;
          m.values(list[j].first, 0) = list[j].second;
          m.valid(list[j].first, 0) = true;
          const DepthMap out = depth_between_frames(m, B);
          const auto range = [&](int r, float z) {
            return float(transfer_range(row_latitude(double(r), H), double(z), B));
          };
          REQUIRE(out.valid(r2, 0));
          CHECK(out.values(r2, 0) ==
                std::min(range(list[i].first, list[i].second), range(list[j].first, list[j].second)));
          tested = true;
        }
      if (tested) break;
    }
    CHECK(tested);
  }
}
