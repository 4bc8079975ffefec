#include "wfov/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <tbb/parallel_for.h>

namespace wfov {

LoadedScene load_scene(const fs::path& manifest_path) {
  LoadedScene s;
  s.manifest = read_scene_manifest(manifest_path);
  s.base_dir = manifest_path.parent_path();
  std::vector<ScanEntry> ordered = s.manifest.scans;
  std::stable_partition(ordered.begin(), ordered.end(),
                        [&](const ScanEntry& e) { return e.id == s.manifest.central_scan; });
  for (const auto& e : ordered) {
    PointCloud cloud = read_ply(s.base_dir / e.path, e.id);
    std::fill(cloud.scan_id.begin(), cloud.scan_id.end(), e.id);
    s.scans.push_back(std::move(cloud));
  }
  if (s.manifest.masks) s.regions = read_world_regions(s.base_dir / *s.manifest.masks);
  return s;
}

std::vector<SampleRecord> generate_scene_samples(const LoadedScene& scene, const GenerationSettings& settings,
                                                 const fs::path& out_dir) {
  if (settings.height < 2) throw ConfigError("gen-stereo: sample height must be at least 2");
  if (scene.scans.empty()) throw DataError("gen-stereo: scene has no scans");
  const std::vector<RigDescriptor> rigs = enumerate_benchmark(settings.grid, scene.manifest.camera_pose);

  RenderSettings rs;
  rs.splat_radius_px = settings.splat_radius_px;
  for (const auto& cloud : scene.scans) rs.hole_fill_order.push_back(cloud.scan_id.empty() ? 0 : cloud.scan_id[0]);

  const ProjectionSpec base = ProjectionSpec::equirectangular(settings.height);
  std::vector<SampleRecord> records(rigs.size());

  tbb::parallel_for(std::size_t{0}, rigs.size(), [&](std::size_t i) {
    const RigDescriptor& desc = rigs[i];
    const ProjectionSpec camera = rig_camera(desc, scene.manifest.camera);
    StereoSample sample = synthesize_stereo_sample(scene.scans, desc.rig, camera, base, rs);

    if (!scene.regions.empty()) {
      ProjectionSpec proj = base;
      proj.orientation = desc.rig.projection_orientation;
      const RenderView view{desc.rig.reference_pose, proj, camera};
      for (const auto& region : scene.regions)
        sample.depth_ref =
            mask_regions(sample.depth_ref, rasterize_world_region(region, view), region.mode, region.clip_m);
      sample.disparity_ref = depth_to_disparity(sample.depth_ref);
    }

    SampleRecord& rec = records[i];
    rec.scene_id = scene.manifest.scene_id;
    rec.id = desc.id;
    rec.camera = desc.camera;
    rec.orientation = desc.rig.orientation;
    rec.projection = std::string(to_string(base.kind));
    rec.baseline_m = desc.rig.baseline_m;
    rec.fov_deg = desc.rig.fov_deg;
    rec.width = base.width;
    rec.height = base.height;
    const fs::path rel = fs::path(rec.scene_id) / rec.id;
    fs::create_directories(out_dir / rel);
    rec.rgb_ref = (rel / "rgb_ref.png").generic_string();
    rec.rgb_sec = (rel / "rgb_sec.png").generic_string();
    rec.depth_ref = (rel / "depth_ref.png").generic_string();
    rec.disparity_ref = (rel / "disparity_ref.pfm").generic_string();
    write_rgb_png(out_dir / rec.rgb_ref, sample.reference.rgb);
    write_rgb_png(out_dir / rec.rgb_sec, sample.secondary.rgb);
    rec.depth_clamped = write_depth_png(out_dir / rec.depth_ref, sample.depth_ref);
    write_disparity_pfm(out_dir / rec.disparity_ref, sample.disparity_ref);
  });
  return records;
}

EvalKind parse_eval_kind(std::string_view s) {
  if (s == "disparity") return EvalKind::disparity;
  if (s == "depth") return EvalKind::depth;
  throw ConfigError("unknown evaluation kind '" + std::string(s) + "' (expected disparity or depth)");
}

std::string_view to_string(EvalKind k) { return k == EvalKind::disparity ? "disparity" : "depth"; }

DepthMap read_depth_any(const fs::path& path, double baseline_m) {
  if (path.extension() == ".pfm") return read_depth_pfm(path, baseline_m);
  return read_depth_png(path, baseline_m);
}

EvalReport evaluate_sample(const SampleRecord& rec, const fs::path& samples_dir, const fs::path& pred_dir,
                           EvalKind kind) {
  EvalReport rep;
  if (kind == EvalKind::disparity) {
    const DisparityMap gt = read_disparity_pfm(samples_dir / rec.disparity_ref, rec.baseline_m);
    const DisparityMap pred = read_disparity_pfm(pred_dir / rec.disparity_ref, rec.baseline_m);
    rep = disparity_metrics(pred, gt);
  } else {
    const DepthMap gt = read_depth_png(samples_dir / rec.depth_ref, rec.baseline_m);
    fs::path pred_path = pred_dir / rec.depth_ref;
    if (!fs::exists(pred_path)) {
      const fs::path alt = fs::path(pred_path).replace_extension(".pfm");
      if (fs::exists(alt)) pred_path = alt;
    }
    rep = depth_metrics(read_depth_any(pred_path, rec.baseline_m), gt);
  }
  rep.domain.fov_deg = rec.fov_deg;
  rep.domain.baseline_m = rec.baseline_m;
  rep.domain.projection = rec.projection;
  return rep;
}

SweepTable evaluate_sweep(const SampleIndex& index, const fs::path& samples_dir, const fs::path& pred_dir,
                          EvalKind kind, const std::string& metric) {
  if (index.samples.empty()) throw DataError("sweep: sample index is empty");
  SweepTable t;
  t.metric = metric;
  for (const auto& r : index.samples) {
    t.fovs_deg.push_back(r.fov_deg);
    t.baselines_m.push_back(r.baseline_m);
  }
  const auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(t.fovs_deg);
  uniq(t.baselines_m);

  std::vector<double> values(index.samples.size());
  tbb::parallel_for(std::size_t{0}, index.samples.size(), [&](std::size_t i) {
    try {
      values[i] = evaluate_sample(index.samples[i], samples_dir, pred_dir, kind).at(metric).value;
    } catch (const std::out_of_range&) {
      throw ConfigError("sweep: unknown metric '" + metric + "' for " + std::string(to_string(kind)) + " evaluation");
    }
  });

  const auto nf = t.fovs_deg.size(), nb = t.baselines_m.size();
  std::vector<std::vector<double>> sums(nf, std::vector<double>(nb, 0.0));
  t.counts.assign(nf, std::vector<std::size_t>(nb, 0));
  for (std::size_t i = 0; i < index.samples.size(); ++i) {
    const auto& r = index.samples[i];
    const auto fi = std::size_t(std::lower_bound(t.fovs_deg.begin(), t.fovs_deg.end(), r.fov_deg) - t.fovs_deg.begin());
    const auto bi = std::size_t(std::lower_bound(t.baselines_m.begin(), t.baselines_m.end(), r.baseline_m) -
                                t.baselines_m.begin());
    sums[fi][bi] += values[i];
    ++t.counts[fi][bi];
  }
  t.cells.assign(nf, std::vector<double>(nb, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t b = 0; b < nb; ++b)
      if (t.counts[f][b] > 0) t.cells[f][b] = sums[f][b] / double(t.counts[f][b]);
  return t;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string sweep_csv(const SweepTable& table) {
  std::ostringstream out;
  out << "fov_deg";
  for (double b : table.baselines_m) out << ",b" << fmt(b) << "m";
  out << '\n';
  for (std::size_t f = 0; f < table.fovs_deg.size(); ++f) {
    out << fmt(table.fovs_deg[f]);
    for (std::size_t b = 0; b < table.baselines_m.size(); ++b) {
      out << ',';
      if (!std::isnan(table.cells[f][b])) out << fmt(table.cells[f][b]);
    }
    out << '\n';
  }
  return out.str();
}

Json dataset_stats(const SampleIndex& index, const fs::path& samples_dir, const std::vector<double>& bin_edges) {
  if (index.samples.empty()) throw DataError("stats: sample index is empty");
  std::vector<std::size_t> counts(bin_edges.size() > 1 ? bin_edges.size() - 1 : 0, 0);
  std::size_t valid_total = 0;
  Json per_sample = Json::array();
  std::vector<double> entropies;
  for (const auto& r : index.samples) {
    const DepthMap depth = read_depth_png(samples_dir / r.depth_ref);
    depth_histogram_counts(depth, bin_edges, counts);
    valid_total += std::size_t(depth.valid.count());
    const RgbImage rgb = read_rgb_png(samples_dir / r.rgb_ref);
    if (rgb.rows() != depth.values.rows() || rgb.cols() != depth.values.cols())
      throw DataError("stats: " + r.id + ": image and depth sizes differ");
    const EntropyStats e = local_entropy_stats(to_gray(rgb), &depth.valid);
    entropies.push_back(e.mean);
    per_sample.push_back(Json{{"scene_id", r.scene_id},
                              {"id", r.id},
                              {"valid_depth_pixels", std::size_t(depth.valid.count())},
                              {"mean_local_entropy", e.mean}});
  }
  if (valid_total == 0) throw DataError("stats: no valid depth pixels in the dataset");
  Json hist = Json::array();
  for (auto c : counts) hist.push_back(double(c) / double(valid_total));
  const double mean_entropy =
      deterministic_sum(entropies.size(), [&](std::size_t i) { return entropies[i]; }) / double(entropies.size());
  return Json{{"schema_version", kSchemaVersion},
              {"sample_count", index.samples.size()},
              {"valid_depth_pixels", valid_total},
              {"bin_edges_m", bin_edges},
              {"depth_histogram", hist},
              {"mean_local_entropy", mean_entropy},
              {"samples", per_sample}};
}

}  // namespace wfov
