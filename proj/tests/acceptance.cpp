// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>

#include <tbb/global_control.h>

#include "oracles.hpp"
#include "wfov/benchmark.hpp"
#include "wfov/synthetic.hpp"

using namespace wfov;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1. Disparity -> depth -> disparity over a million random tuples.
Outcome inversion() {
  tbb::global_control single(tbb::global_control::max_allowed_parallelism, 1);
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> hd(32, 4096);
  std::uniform_real_distribution<double> u(0, 1), base(0.005, 1.0);
  constexpr int kTuples = 1000000;
  std::vector<std::array<double, 4>> tuples;
  tuples.reserve(kTuples);
  while (int(tuples.size()) < kTuples) {
    const int H = hd(rng);
    const double v = std::floor(u(rng) * H);
    const double L = row_latitude(v, H);
    // Valid disparities leave a positive angle at the second camera.
    const double disp = kMinDisparityPx * 2 + u(rng) * (L / kPi * H - kMinDisparityPx * 4);
    if (!(disp > kMinDisparityPx) || !(L - disp / H * kPi > 0)) continue;
    tuples.push_back({v, disp, base(rng), double(H)});
  }
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  long invalid = 0;
  for (const auto& [v, disp, b, Hd] : tuples) {
    const int H = int(Hd);
    const double L = row_latitude(v, H);
    const auto z = disparity_to_depth(L, disp, H, b);
    if (!z) {
      ++invalid;
      continue;
    }
    worst = std::max(worst, std::abs(depth_to_disparity(L, *z, H, b) - disp));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {invalid == 0 && worst < 1e-6 && secs < 5.0,
          fmt("max |error| %.3g px over 1e6 tuples, %.3f s single-threaded, %.0f rejected", worst, secs,
              double(invalid))};
}

// 2. Analytic fixtures.
Outcome analytic() {
  const int H = 1000;
  const auto z = disparity_to_depth(kPi / 2, 0.25 * H, H, 1.0);  // rho = pi / 4
  const double depth_err = z ? std::abs(*z - 1.0) : 1.0;
  double disp_err = 0;
  for (int h : {9, 512, 1000, 1152})
    disp_err = std::max(disp_err, std::abs(depth_to_disparity(kPi / 2, 0.3, h, 0.3) - h / 4.0));
  // Pixel-center latitude reaches pi / 2 on the middle row of an odd-height grid.
  DepthMap m{Plane<float>::Constant(9, 2, 0.5f), Mask::Constant(9, 2, true), {9, 0.5}};
  const double map_err = std::abs(depth_to_disparity(m).values(4, 1) - 9 / 4.0);
  return {depth_err < 1e-12 && disp_err < 1e-9 && map_err < 1e-6,
          fmt("|depth - 1| = %.3g m, |disp - H/4| = %.3g px (map row: %.3g px)", depth_err, disp_err, map_err)};
}

// 3. Double sphere closed-form inverse and pinhole degeneration.
Outcome ds_inverse() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> xi_d(-0.4, 1.0), al_d(0.05, 0.95), dir(-1, 1), scale(0.05, 100);
  double worst = 0;
  int n = 0;
  while (n < 100000) {
    const DoubleSphereIntrinsics<double> K{420, 415, 960, 540, xi_d(rng), al_d(rng), 1920, 1080};
    Eigen::Vector3d p(dir(rng), dir(rng), dir(rng));
    if (p.norm() < 1e-3) continue;
    p *= scale(rng);
    const auto px = ds_project(K, p);
    if (!px) continue;
    const auto ray = ds_unproject(K, *px);
    if (!ray) return {false, "unprojection failed on an in-domain pixel"};
    worst = std::max(worst, std::atan2(ray->cross(p).norm(), ray->dot(p)));
    ++n;
  }
  const DoubleSphereIntrinsics<double> ds{320, 330, 400, 300, 0, 0, 800, 600};
  const PinholeIntrinsics<double> ph{320, 330, 400, 300, 800, 600};
  std::uniform_real_distribution<double> xy(-3, 3), zd(0.05, 10);
  double pin = 0;
  for (int i = 0; i < 100000; ++i) {
    const Eigen::Vector3d p(xy(rng), xy(rng), zd(rng));
    pin = std::max(pin, (*ds_project(ds, p) - *pinhole_project(ph, p)).norm());
  }
  return {worst < 1e-9 && pin < 1e-9, fmt("max angular error %.3g rad over 1e5 points, pinhole gap %.3g px", worst, pin)};
}

// 4. Virtual intrinsics plug-ins.
Outcome virtual_cameras() {
  VirtualIntrinsicsPolicy policy;
  policy.reference = reference_ds_camera();
  const auto& r = policy.reference;
  const auto K = virtual_intrinsics(policy, 180);
  const bool exact = K.fx == 1.25 * r.fx && K.fy == 1.25 * r.fy && K.xi == 0.8 * r.xi &&
                     K.alpha == r.alpha + 0.2 * (1 - r.alpha);
  bool monotone = true;
  auto prev = virtual_intrinsics(policy, 120);
  for (int f = 121; f <= 195; ++f) {
    const auto k = virtual_intrinsics(policy, f);
    monotone = monotone && k.fx < prev.fx && k.fy < prev.fy && k.alpha > prev.alpha &&
               (r.xi < 0 ? k.xi > prev.xi : k.xi < prev.xi);
    prev = k;
  }
  return {exact && monotone, std::string("180 deg exact: ") + (exact ? "yes" : "no") +
                                 ", monotone over 120..195 deg: " + (monotone ? "yes" : "no")};
}

// 5. Ground-truth disparity predicts where each rendered feature appears in the second view.
Outcome photo_consistency() {
  const double B = 0.065;
  const int H = 256;
  // A textured plane 2 m in front of the rig, large enough to fill the 195 degree view.
  const PointCloud plane = textured_rectangle({-12, -12, 2}, {24, 0, 0}, {0, 24, 0}, 0.02);
  const std::vector<PointCloud> bundle{plane};
  const StereoRig rig = build_rig(Eigen::Isometry3d::Identity(), B, 195, RigOrientation::vertical);
  VirtualIntrinsicsPolicy policy;
  policy.reference = reference_ds_camera();
  const auto camera = ProjectionSpec::ds_camera(virtual_intrinsics(policy, 195), 195.0);
  const auto proj = ProjectionSpec::equirectangular(H);
  const StereoSample s = synthesize_stereo_sample(bundle, rig, camera, proj, {1.0, {}});

  const auto image_of = [&](const Eigen::Isometry3d& pose, const Eigen::Vector3d& p) {
    return ray_to_pixel(proj, rig.projection_orientation.transpose() * (pose.inverse() * p));
  };
  long valid = 0, good = 0;
  double worst = 0;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < 2 * H; ++c) {
      if (!s.disparity_ref.valid(r, c)) continue;
      ++valid;
      const Eigen::Vector3d p = plane.positions.col(s.reference.point_index(r, c)).cast<double>();
      const auto a = image_of(rig.reference_pose, p), b = image_of(rig.secondary_pose(), p);
      if (!a || !b) continue;
      double du = std::abs(a->x() - b->x());
      du = std::min(du, 2.0 * H - du);
      const double dv = std::abs((a->y() - b->y()) - s.disparity_ref.values(r, c));
      worst = std::max(worst, std::max(du, dv));
      if (du < 0.5 && dv < 0.5) ++good;
    }
  const double frac = valid ? double(good) / double(valid) : 0;
  return {valid > 1000 && frac >= 0.99,
          fmt("%.4f%% of %.0f valid pixels within 0.5 px (worst %.3g px)", 100 * frac, double(valid), worst)};
}

// 6. Occlusion filling from adjacent scans.
Outcome occlusion_fill() {
  const SyntheticScene scene = make_occluder_scene();
  // The central scan has no holes from its own station, so look from a point in between.
  RenderView view{Eigen::Isometry3d::Identity(), ProjectionSpec::equirectangular(256), {}};
  view.world_from_camera.translation() = Eigen::Vector3d(0.3, 0, 0);
  const RenderSettings settings{1.0, {0, 1, 2}};
  const RenderResult central = render(scene.scans[0], view, settings);
  const std::vector<PointCloud> adjacent{scene.scans[1], scene.scans[2]};
  const RenderResult side = render_with_hole_fill(adjacent, view, settings);
  const RenderResult filled = render_with_hole_fill(scene.scans, view, settings);
  long occluded = 0, recovered = 0, overwrites = 0;
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 512; ++c) {
      if (central.depth.valid(r, c)) {
        if (!filled.depth.valid(r, c) || filled.source_scan(r, c) != 0 ||
            filled.depth.values(r, c) != central.depth.values(r, c) ||
            filled.point_index(r, c) != central.point_index(r, c))
          ++overwrites;
      } else if (side.depth.valid(r, c)) {
        ++occluded;
        if (filled.depth.valid(r, c) && filled.source_scan(r, c) != 0) ++recovered;
      }
    }
  const double frac = occluded ? double(recovered) / double(occluded) : 0;
  return {occluded > 100 && frac >= 0.95 && overwrites == 0,
          fmt("recovered %.2f%% of %.0f occluded pixels, %.0f overwrites", 100 * frac, double(occluded),
              double(overwrites))};
}

// 7. Metric implementations against scalar-loop oracles.
Outcome metric_oracles() {
  std::mt19937_64 rng(5150);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const auto gt = oracle::random_map<DisparityMap>(rng, 48, 64, 0, 64, 0.85);
    const auto pred = oracle::random_map<DisparityMap>(rng, 48, 64, 0, 64, 0.85);
    const auto o = oracle::disparity_loop(pred, gt);
    const EvalReport d = disparity_metrics(pred, gt);
    for (const auto& [name, v] : std::vector<std::pair<std::string, double>>{
             {"EPE", o.epe}, {"Q50_EPE", o.q50}, {"Q95_EPE", o.q95}, {"bad-1", o.bad1},
             {"bad-2", o.bad2}, {"bad-3", o.bad3}, {"RelEPE", o.rel}})
      worst = std::max(worst, std::abs(d.at(name).value - v));

    const auto dg = oracle::random_map<DepthMap>(rng, 48, 64, 0.2, 40, 0.85);
    const auto dp = oracle::random_map<DepthMap>(rng, 48, 64, 0.2, 40, 0.85);
    const auto od = oracle::depth_loop(dp, dg);
    const EvalReport e = depth_metrics(dp, dg);
    for (const auto& [name, v] : std::vector<std::pair<std::string, double>>{
             {"AbsRel", od.absrel}, {"MAE", od.mae}, {"RMSE", od.rmse}, {"delta_1.25", od.d1},
             {"delta_1.25^2", od.d2}, {"delta_1.25^3", od.d3}})
      worst = std::max(worst, std::abs(e.at(name).value - v));

    Plane<std::uint8_t> gray(48, 64);
    std::uniform_int_distribution<int> level(0, 12);
    for (Eigen::Index i = 0; i < gray.size(); ++i) gray.data()[i] = std::uint8_t(level(rng) * 20);
    const Mask* mask = (k % 2) ? &dg.valid : nullptr;
    const auto ent = local_entropy_stats(gray, mask);
    worst = std::max(worst, (ent.entropy - oracle::entropy_brute_force(gray, mask, kEntropyWindow)).abs().maxCoeff());
  }
  DisparityMap gt{Plane<float>::Constant(2, 2, 10), Mask::Constant(2, 2, true), {2, 0.1}};
  DisparityMap pred = gt;
  pred.values << 10.5f, 11.5f, 12.5f, 13.5f;
  const EvalReport f = disparity_metrics(pred, gt);
  const bool fixture = f.at("bad-1").value == 75.0 && f.at("bad-2").value == 50.0 && f.at("bad-3").value == 25.0;
  return {worst < 1e-9 && fixture,
          fmt("max deviation %.3g over 100 random maps; bad-tau fixture ", worst) + (fixture ? "exact" : "WRONG")};
}

// 8. Byte-identical CLI outputs for 1 and 8 worker threads.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(WFOV_CLI_PATH) + " -q " + args + " >/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool same_tree(const fs::path& a, const fs::path& b, long& files) {
  std::set<fs::path> names;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) names.insert(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file() && !names.count(fs::relative(e.path(), b))) return false;
  for (const auto& n : names) {
    if (!fs::exists(b / n) || read_file(a / n) != read_file(b / n)) return false;
    ++files;
  }
  return true;
}

Outcome determinism(const fs::path& work) {
  const fs::path room = work / "room", occl = work / "occluder";
  if (run_cli("synth-scene --kind room --spacing 0.05 --scene-id room --out " + room.string()) != 0 ||
      run_cli("synth-scene --kind occluder --spacing 0.03 --out " + occl.string()) != 0)
    return {false, "synth-scene failed"};
  const std::string manifests =
      " --manifest " + (room / "manifest.json").string() + " --manifest " + (occl / "manifest.json").string();
  long files = 0;
  bool same = true;
  std::vector<std::string> reports;
  for (int threads : {1, 8}) {
    const std::string t = " --threads " + std::to_string(threads) + " ";
    const fs::path gt = work / ("gt" + std::to_string(threads)), pr = work / ("pred" + std::to_string(threads));
    // Predictions: the same scenes splatted with a wider footprint.
    if (run_cli(t + "gen-stereo --height 64" + manifests + " --out " + gt.string()) != 0 ||
        run_cli(t + "gen-stereo --height 64 --splat-radius 2" + manifests + " --out " + pr.string()) !=
            0)
      return {false, "gen-stereo failed"};
    const fs::path rep = work / ("reports" + std::to_string(threads));
    fs::create_directories(rep);
    const SampleIndex idx = read_sample_index(gt / "samples.json");
    const auto& first = idx.samples.front();
    if (run_cli(t + "eval --sweep --kind disparity --samples " + gt.string() + " --pred-dir " + pr.string() +
                " --out " + (rep / "sweep_epe.csv").string()) != 0 ||
        run_cli(t + "eval --sweep --kind depth --metric AbsRel --samples " + gt.string() + " --pred-dir " +
                pr.string() + " --out " + (rep / "sweep_absrel.csv").string()) != 0 ||
        run_cli(t + "eval --kind disparity " + (pr / first.disparity_ref).string() + " " +
                (gt / first.disparity_ref).string() + " --out " + (rep / "single.json").string()) != 0 ||
        run_cli(t + "stats " + gt.string() + " --out " + (rep / "stats.json").string()) != 0)
      return {false, "eval failed"};
  }
  same = same_tree(work / "gt1", work / "gt8", files) && same_tree(work / "pred1", work / "pred8", files) &&
         same_tree(work / "reports1", work / "reports8", files);
  return {same && files > 100, fmt("%.0f files compared between --threads 1 and --threads 8", double(files)) +
                                   (same ? ", all identical" : ", DIFFERENCES FOUND")};
}

// 9. Default benchmark grid per scene.
Outcome enumeration(const fs::path& work) {
  const auto rigs = enumerate_benchmark(BenchmarkGrid{}, Eigen::Isometry3d::Identity());
  std::map<std::string, std::array<int, 4>> per_scene;
  const SampleIndex idx = read_sample_index(work / "gt1" / "samples.json");
  for (const auto& r : idx.samples) {
    auto& n = per_scene[r.scene_id];
    const bool v = r.orientation == RigOrientation::vertical;
    ++n[r.camera == CameraKind::pinhole ? (v ? 2 : 3) : (v ? 0 : 1)];
  }
  std::array<int, 4> lib{};
  for (const auto& r : rigs)
    ++lib[r.camera == CameraKind::pinhole ? (r.rig.orientation == RigOrientation::vertical ? 2 : 3)
                                          : (r.rig.orientation == RigOrientation::vertical ? 0 : 1)];
  const std::array<int, 4> want{20, 20, 5, 5};
  bool ok = lib == want && per_scene.size() == 2;
  for (const auto& [id, n] : per_scene) ok = ok && n == want;
  return {ok, fmt("library grid %.0f+%.0f+%.0f", lib[0], lib[1], lib[2]) + "+" + std::to_string(lib[3]) + "; " +
                  std::to_string(per_scene.size()) + " scenes on disk, " + (ok ? "all 20+20+5+5" : "MISMATCH")};
}

// 10. File format roundtrips.
Outcome io_roundtrips(const fs::path& work) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> z(0.001, 65.5);
  DepthMap d{Plane<float>::Zero(120, 240), Mask::Constant(120, 240, true), {120, 0.1}};
  for (Eigen::Index i = 0; i < d.values.size(); ++i) d.values.data()[i] = float(z(rng));
  d.valid(5, 5) = false;
  d.values(5, 5) = 0;
  write_depth_png(work / "d.png", d);
  const DepthMap dp = read_depth_png(work / "d.png");
  double png_err = 0;
  bool png_mask = (dp.valid == d.valid).all();
  for (Eigen::Index i = 0; i < d.values.size(); ++i)
    if (d.valid.data()[i])
      png_err = std::max(png_err, std::abs(double(dp.values.data()[i]) - double(d.values.data()[i])));

  write_depth_pfm(work / "d.pfm", d);
  const PfmImage pf = read_pfm(work / "d.pfm");
  const bool pfm = (pf.values == d.values).all() && (pf.valid == d.valid).all() &&
                   encode_pfm(pf.values, pf.valid) == read_file(work / "d.pfm");

  const fs::path manifest = work / "room" / "manifest.json";
  write_scene_manifest(work / "manifest_copy.json", read_scene_manifest(manifest));
  const bool man = read_file(manifest) == read_file(work / "manifest_copy.json");
  return {png_mask && png_err <= 0.0005 + 1e-6 && pfm && man,
          fmt("depth PNG max error %.4f mm", png_err * 1000) + ", PFM " + (pfm ? "bit-exact" : "DIFFERS") +
              ", manifest " + (man ? "bit-exact" : "DIFFERS")};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "wfov_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"depth/disparity inversion", inversion},
      {"analytic fixtures", analytic},
      {"double sphere closed-form inverse", ds_inverse},
      {"virtual intrinsics plug-ins", virtual_cameras},
      {"photo-consistency of ground-truth disparity", photo_consistency},
      {"occlusion fill", occlusion_fill},
      {"metric oracle equivalence", metric_oracles},
      {"determinism across thread counts", [&] { return determinism(work); }},
      {"benchmark enumeration", [&] { return enumeration(work); }},
      {"IO roundtrips", [&] { return io_roundtrips(work); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  fs::remove_all(work);
  return failed == 0 ? 0 : 1;
}
