// wfov: batch front end for the wide-FOV depth pipeline.
//
// Standard output carries machine-readable results only; logs go to standard error.
// Exit codes: 0 success, 2 usage error, 3 data error, 4 geometry-domain error. Every
// failure also prints one JSON line {"error": {...}} on standard error.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <tbb/global_control.h>
#include <tbb/task_arena.h>

#include "json_config.hpp"
#include "wfov/benchmark.hpp"
#include "wfov/synthetic.hpp"

namespace {

using namespace wfov;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDomain = 4;

bool g_quiet = false;

void log(const std::string& msg) {
  if (!g_quiet) std::cerr << "[wfov] " << msg << '\n';
}

int report_error(const char* type, int code, const std::string& message) {
  Json err{{"error", Json{{"type", type}, {"code", code}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("json: " + path.string() + ": " + e.what());
  }
}

std::string ext_of(const fs::path& p) { return p.extension().string(); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << dump_json(j);
  else
    write_file_atomically(out, dump_json(j));
}

// Range maps travel as 16-bit millimeter PNG or as PFM, chosen by extension.
void write_depth_any(const fs::path& path, const DepthMap& depth) {
  if (ext_of(path) == ".pfm") {
    write_depth_pfm(path, depth);
  } else if (ext_of(path) == ".png") {
    if (write_depth_png(path, depth)) log("warning: depths beyond 65.535 m were saturated in " + path.string());
  } else {
    throw ConfigError("depth output must end in .png or .pfm: " + path.string());
  }
}

// ---- render ----

struct RenderArgs {
  std::vector<std::string> clouds;
  std::string manifest, projection, camera, pose, out_rgb, out_depth;
  double splat_radius{1.0};
};

int run_render(const RenderArgs& a) {
  require(!a.projection.empty(), "render: --projection is required");
  require(!a.clouds.empty() || !a.manifest.empty(), "render: give --cloud or --manifest");
  require(!a.out_rgb.empty() || !a.out_depth.empty(), "render: give --out-rgb and/or --out-depth");

  std::vector<PointCloud> bundle;
  RenderView view;
  if (!a.manifest.empty()) {
    LoadedScene scene = load_scene(a.manifest);
    bundle = std::move(scene.scans);
    view.world_from_camera = scene.manifest.camera_pose;
  }
  for (std::size_t i = 0; i < a.clouds.size(); ++i)
    bundle.push_back(read_ply(a.clouds[i], static_cast<std::uint16_t>(bundle.size())));
  view.projection = projection_from_json(read_json(a.projection));
  if (!a.camera.empty()) view.aperture = projection_from_json(read_json(a.camera));
  if (!a.pose.empty()) view.world_from_camera = pose_from_json(read_json(a.pose));

  RenderSettings rs;
  rs.splat_radius_px = a.splat_radius;
  for (const auto& c : bundle)
    for (auto id : c.scan_id)
      if (std::find(rs.hole_fill_order.begin(), rs.hole_fill_order.end(), id) == rs.hole_fill_order.end())
        rs.hole_fill_order.push_back(id);
  log("rendering " + std::to_string(bundle.size()) + " scan(s)");
  const RenderResult res = render_with_hole_fill(bundle, view, rs);
  if (!a.out_rgb.empty()) write_rgb_png(a.out_rgb, res.rgb);
  if (!a.out_depth.empty()) write_depth_any(a.out_depth, res.depth);
  std::cout << dump_json(Json{{"width", view.projection.width},
                              {"height", view.projection.height},
                              {"valid_pixels", std::size_t(res.depth.valid.count())}});
  return kExitOk;
}

// ---- warp ----

struct WarpArgs {
  std::string input, source, target, out, mask_out, interp{"bilinear"}, kind{"color"};
};

int run_warp(const WarpArgs& a) {
  require(!a.input.empty() && !a.source.empty() && !a.target.empty() && !a.out.empty(),
          "warp: --input, --source, --target and --out are required");
  const ProjectionSpec src = projection_from_json(read_json(a.source));
  const ProjectionSpec dst = projection_from_json(read_json(a.target));
  Interpolation interp;
  if (a.interp == "nearest")
    interp = Interpolation::nearest;
  else if (a.interp == "bilinear")
    interp = Interpolation::bilinear;
  else
    throw ConfigError("warp: --interp must be nearest or bilinear");
  const WarpMap map = make_warp_map(src, dst);

  Mask valid;
  if (a.kind == "color") {
    const RgbImage img = read_rgb_png(a.input);
    const WarpedRgb w = warp_rgb(img, nullptr, map, interp);
    write_rgb_png(a.out, w.image);
    valid = w.valid;
  } else if (a.kind == "range") {
    const DepthMap depth = read_depth_any(a.input);
    const Warped<float> w = apply_warp(depth.values, &depth.valid, map, interp, SampleKind::range);
    write_depth_any(a.out, DepthMap{w.values, w.valid, {}});
    valid = w.valid;
  } else {
    throw ConfigError("warp: --kind must be color or range");
  }
  if (!a.mask_out.empty()) write_mask_png(a.mask_out, valid);
  std::cout << dump_json(Json{{"width", dst.width}, {"height", dst.height}, {"valid_pixels", std::size_t(valid.count())}});
  return kExitOk;
}

// ---- conversions ----

struct ConvertArgs {
  std::string input, output;
  int height{0};
  double baseline_m{0};
};

int run_disp2depth(const ConvertArgs& a) {
  require(a.baseline_m > 0, "disp2depth: --baseline-m must be positive");
  DisparityMap disp = read_disparity_pfm(a.input, a.baseline_m);
  disp.geometry.height = a.height > 0 ? a.height : int(disp.values.rows());
  const DepthMap depth = disparity_to_depth(disp);
  write_depth_any(a.output, depth);
  std::cout << dump_json(Json{{"valid_pixels", std::size_t(depth.valid.count())}});
  return kExitOk;
}

int run_depth2disp(const ConvertArgs& a) {
  require(a.baseline_m > 0, "depth2disp: --baseline-m must be positive");
  require(ext_of(a.output) == ".pfm", "depth2disp: output must be a .pfm file");
  DepthMap depth = read_depth_any(a.input, a.baseline_m);
  depth.geometry.height = a.height > 0 ? a.height : int(depth.values.rows());
  const DisparityMap disp = depth_to_disparity(depth);
  write_disparity_pfm(a.output, disp);
  std::cout << dump_json(Json{{"valid_pixels", std::size_t(disp.valid.count())}});
  return kExitOk;
}

// ---- gen-stereo ----

struct GenArgs {
  std::vector<std::string> manifests;
  std::string out;
  int height{512};
  double splat_radius{1.0};
  std::vector<double> baselines, fovs;
  double pinhole_fov{90};
};

int run_gen_stereo(const GenArgs& a) {
  require(!a.manifests.empty(), "gen-stereo: at least one --manifest is required");
  require(!a.out.empty(), "gen-stereo: --out is required");
  GenerationSettings gs;
  gs.height = a.height;
  gs.splat_radius_px = a.splat_radius;
  if (!a.baselines.empty()) gs.grid.baselines_m = a.baselines;
  if (!a.fovs.empty()) gs.grid.fovs_deg = a.fovs;
  gs.grid.pinhole_fov_deg = a.pinhole_fov;
  validate(gs.grid);

  const fs::path out(a.out);
  fs::create_directories(out);
  SampleIndex index;
  for (const auto& m : a.manifests) {
    const LoadedScene scene = load_scene(m);
    log("scene " + scene.manifest.scene_id + ": " + std::to_string(scene.scans.size()) + " scan(s)");
    auto recs = generate_scene_samples(scene, gs, out);
    log("scene " + scene.manifest.scene_id + ": wrote " + std::to_string(recs.size()) + " samples");
    index.samples.insert(index.samples.end(), recs.begin(), recs.end());
  }
  write_sample_index(out / "samples.json", index);

  std::size_t vertical = 0, horizontal = 0, pinhole = 0;
  for (const auto& r : index.samples) {
    if (r.camera == CameraKind::pinhole)
      ++pinhole;
    else if (r.orientation == RigOrientation::vertical)
      ++vertical;
    else
      ++horizontal;
  }
  std::cout << dump_json(Json{{"index", (out / "samples.json").generic_string()},
                              {"samples", index.samples.size()},
                              {"fisheye_vertical", vertical},
                              {"fisheye_horizontal", horizontal},
                              {"pinhole", pinhole}});
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::string pred, gt, kind{"disparity"}, out;
  bool sweep{false};
  std::string samples, pred_dir, metric;
  double height{0}, baseline_m{0};
};

int run_eval(const EvalArgs& a) {
  const EvalKind kind = parse_eval_kind(a.kind);
  if (a.sweep) {
    require(!a.samples.empty() && !a.pred_dir.empty(), "eval --sweep: --samples and --pred-dir are required");
    const std::string metric = a.metric.empty() ? (kind == EvalKind::disparity ? "EPE" : "AbsRel") : a.metric;
    const fs::path dir(a.samples);
    const SampleIndex index = read_sample_index(dir / "samples.json");
    const SweepTable t = evaluate_sweep(index, dir, a.pred_dir, kind, metric);
    const std::string csv = sweep_csv(t);
    if (a.out.empty() || a.out == "-")
      std::cout << csv;
    else
      write_file_atomically(a.out, csv);
    return kExitOk;
  }
  require(!a.pred.empty() && !a.gt.empty(), "eval: prediction and ground truth paths are required");
  EvalReport rep;
  if (kind == EvalKind::disparity) {
    rep = disparity_metrics(read_disparity_pfm(a.pred, a.baseline_m), read_disparity_pfm(a.gt, a.baseline_m));
  } else {
    rep = depth_metrics(read_depth_any(a.pred, a.baseline_m), read_depth_any(a.gt, a.baseline_m));
  }
  if (a.baseline_m > 0) rep.domain.baseline_m = a.baseline_m;
  emit(to_json(rep), a.out);
  return kExitOk;
}

// ---- stats ----

struct StatsArgs {
  std::string samples, out;
  std::vector<double> bins;
};

int run_stats(const StatsArgs& a) {
  require(!a.samples.empty(), "stats: a sample directory is required");
  std::vector<double> edges = a.bins;
  if (edges.empty())
    for (int i = 0; i <= 40; ++i) edges.push_back(0.5 * i);
  const fs::path dir(a.samples);
  emit(dataset_stats(read_sample_index(dir / "samples.json"), dir, edges), a.out);
  return kExitOk;
}

// ---- prep-stereo-input ----

struct PrepArgs {
  std::string input, output, crop, valid;
  bool undo{false};
};

Json crop_json(const StereoCrop& c) {
  return Json{{"rows", c.rows}, {"cols", c.cols}, {"row_trim", c.row_trim}, {"col_trim", c.col_trim}};
}

StereoCrop crop_from_json(const Json& j) {
  try {
    return StereoCrop{j.at("rows").get<int>(), j.at("cols").get<int>(), j.at("row_trim").get<int>(),
                      j.at("col_trim").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("crop sidecar: ") + e.what());
  }
}

int run_prep(const PrepArgs& a) {
  require(!a.input.empty() && !a.output.empty(), "prep-stereo-input: input and output paths are required");
  const std::string crop_path = a.crop.empty() ? a.output + ".crop.json" : a.crop;
  const std::string ext = ext_of(a.input);
  const bool is_rgb = ext == ".png" && probe_png(a.input).channels >= 3;

  if (a.undo) {
    const StereoCrop crop = crop_from_json(read_json(a.crop.empty() ? a.input + ".crop.json" : a.crop));
    if (is_rgb) {
      const RgbImage img = read_rgb_png(a.input);
      RgbImage out;
      for (int k = 0; k < 3; ++k) out.channel[std::size_t(k)] = uncrop_rotate(img.channel[std::size_t(k)], crop);
      write_rgb_png(a.output, out);
    } else {
      const DepthMap d = read_depth_any(a.input);
      write_depth_any(a.output, DepthMap{uncrop_rotate(d.values, crop), uncrop_rotate(d.valid, crop, false), {}});
    }
    return kExitOk;
  }

  StereoCrop crop;
  if (is_rgb) {
    const RgbImage img = read_rgb_png(a.input);
    Mask valid = a.valid.empty() ? Mask((img.channel[0] != std::uint8_t{0}) || (img.channel[1] != std::uint8_t{0}) || (img.channel[2] != std::uint8_t{0}))
                                 : read_mask_png(a.valid);
    crop = compute_stereo_crop(valid);
    RgbImage out;
    for (int k = 0; k < 3; ++k) out.channel[std::size_t(k)] = crop_rotate(img.channel[std::size_t(k)], crop);
    write_rgb_png(a.output, out);
  } else {
    const DepthMap d = read_depth_any(a.input);
    const Mask valid = a.valid.empty() ? d.valid : read_mask_png(a.valid);
    crop = compute_stereo_crop(valid);
    write_depth_any(a.output, DepthMap{crop_rotate(d.values, crop), crop_rotate(d.valid, crop), {}});
  }
  write_file_atomically(crop_path, dump_json(crop_json(crop)));
  std::cout << dump_json(Json{{"crop", crop_json(crop)}, {"sidecar", crop_path}});
  return kExitOk;
}

// ---- synth-scene ----

struct SynthArgs {
  std::string kind{"room"}, out, scene_id{"synthetic-room"};
  double spacing{0.02};
};

int run_synth(const SynthArgs& a) {
  require(!a.out.empty(), "synth-scene: --out is required");
  SyntheticScene scene;
  if (a.kind == "room")
    scene = make_room_scene(a.scene_id, a.spacing);
  else if (a.kind == "occluder")
    scene = make_occluder_scene(3.0, 1.5, 0.3, a.spacing);
  else
    throw ConfigError("synth-scene: --kind must be room or occluder");
  const fs::path manifest = write_scene(scene, a.out);
  std::size_t points = 0;
  for (const auto& s : scene.scans) points += std::size_t(s.size());
  std::cout << dump_json(Json{{"manifest", manifest.generic_string()}, {"points", points}});
  return kExitOk;
}

int default_threads() {
  if (const char* env = std::getenv("WFOV_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wide-FOV depth toolkit: rendering, projection warps, spherical stereo conversions and metrics",
               "wfov"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<wfov::cli::JsonConfig>());
  app.set_config("--config", "", "JSON file mirroring the command-line flags; flags win");

  int threads = default_threads();
  app.add_option("--threads", threads, "Worker threads (0: all cores; default from WFOV_THREADS)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("-q,--quiet", g_quiet, "Suppress log lines on standard error");

  RenderArgs render;
  auto* c_render = app.add_subcommand("render", "Render point clouds into a projection");
  c_render->add_option("--cloud", render.clouds, "PLY cloud (repeatable; later clouds fill holes)");
  c_render->add_option("--manifest", render.manifest, "Scene manifest instead of explicit clouds");
  c_render->add_option("--projection", render.projection, "Output projection JSON");
  c_render->add_option("--camera", render.camera, "Optional physical camera JSON limiting coverage");
  c_render->add_option("--pose", render.pose, "Camera pose JSON (world_from_camera)");
  c_render->add_option("--splat-radius", render.splat_radius, "Splat radius in pixels");
  c_render->add_option("--out-rgb", render.out_rgb, "RGB PNG output");
  c_render->add_option("--out-depth", render.out_depth, "Depth output (.png millimeters or .pfm meters)");

  WarpArgs warp;
  auto* c_warp = app.add_subcommand("warp", "Resample an image between projections sharing a center");
  c_warp->add_option("--input", warp.input, "Source image (RGB PNG, or depth PNG/PFM with --kind range)");
  c_warp->add_option("--source", warp.source, "Source projection JSON");
  c_warp->add_option("--target", warp.target, "Target projection JSON");
  c_warp->add_option("--out", warp.out, "Warped output");
  c_warp->add_option("--mask-out", warp.mask_out, "Validity mask PNG output");
  c_warp->add_option("--interp", warp.interp, "nearest or bilinear");
  c_warp->add_option("--kind", warp.kind, "color or range (range data is never blended)");

  ConvertArgs d2d, d2p;
  auto* c_d2d = app.add_subcommand("disp2depth", "Spherical disparity PFM to depth");
  c_d2d->add_option("input", d2d.input, "Disparity PFM")->required();
  c_d2d->add_option("output", d2d.output, "Depth output (.png or .pfm)")->required();
  c_d2d->add_option("--height", d2d.height, "Equirectangular height H (default: image rows)");
  c_d2d->add_option("--baseline-m", d2d.baseline_m, "Stereo baseline in meters");
  auto* c_d2p = app.add_subcommand("depth2disp", "Depth to spherical disparity PFM");
  c_d2p->add_option("input", d2p.input, "Depth (.png or .pfm)")->required();
  c_d2p->add_option("output", d2p.output, "Disparity PFM")->required();
  c_d2p->add_option("--height", d2p.height, "Equirectangular height H (default: image rows)");
  c_d2p->add_option("--baseline-m", d2p.baseline_m, "Stereo baseline in meters");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-stereo", "Render the benchmark rig grid for scene manifests");
  c_gen->add_option("--manifest", gen.manifests, "Scene manifest (repeatable)");
  c_gen->add_option("--out", gen.out, "Sample output directory");
  c_gen->add_option("--height", gen.height, "Equirectangular sample height");
  c_gen->add_option("--splat-radius", gen.splat_radius, "Splat radius in pixels");
  c_gen->add_option("--baselines", gen.baselines, "Baselines in meters")->delimiter(',');
  c_gen->add_option("--fovs", gen.fovs, "Fisheye FOVs in degrees")->delimiter(',');
  c_gen->add_option("--pinhole-fov", gen.pinhole_fov, "Pinhole FOV in degrees");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Score predictions against ground truth");
  c_eval->add_option("pred", eval.pred, "Predicted map");
  c_eval->add_option("gt", eval.gt, "Ground-truth map");
  c_eval->add_option("--kind", eval.kind, "disparity or depth");
  c_eval->add_option("--baseline-m", eval.baseline_m, "Baseline recorded in the report domain");
  c_eval->add_option("--out", eval.out, "Report path (default: standard output)");
  c_eval->add_flag("--sweep", eval.sweep, "FOV x baseline table over a sample directory, as CSV");
  c_eval->add_option("--samples", eval.samples, "Sample directory holding samples.json");
  c_eval->add_option("--pred-dir", eval.pred_dir, "Predictions mirroring the sample layout");
  c_eval->add_option("--metric", eval.metric, "Metric tabulated by --sweep (default EPE or AbsRel)");

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Depth histogram and mean local entropy of a sample directory");
  c_stats->add_option("samples", stats.samples, "Sample directory holding samples.json");
  c_stats->add_option("--bins", stats.bins, "Histogram bin edges in meters")->delimiter(',');
  c_stats->add_option("--out", stats.out, "Report path (default: standard output)");

  PrepArgs prep;
  auto* c_prep = app.add_subcommand("prep-stereo-input", "Crop empty borders and rotate 90 degrees CCW");
  c_prep->add_option("input", prep.input, "RGB PNG, depth PNG or PFM")->required();
  c_prep->add_option("output", prep.output, "Output path")->required();
  c_prep->add_option("--crop", prep.crop, "Crop sidecar JSON (default: <output>.crop.json, or <input>.crop.json)");
  c_prep->add_option("--valid", prep.valid, "Validity mask PNG (default: nonblack or valid-depth pixels)");
  c_prep->add_flag("--undo", prep.undo, "Invert a previous crop and rotation");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-scene", "Write a procedural scene (scans, masks, manifest)");
  c_synth->add_option("--kind", synth.kind, "room or occluder");
  c_synth->add_option("--out", synth.out, "Scene directory");
  c_synth->add_option("--scene-id", synth.scene_id, "Scene id");
  c_synth->add_option("--spacing", synth.spacing, "Point spacing in meters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", kExitUsage, e.what());
  }

  // An explicit arena makes --threads N mean N workers even on machines with fewer cores.
  std::optional<tbb::global_control> pool;
  if (threads > 0) pool.emplace(tbb::global_control::max_allowed_parallelism, std::size_t(threads));
  tbb::task_arena arena(threads > 0 ? threads : tbb::task_arena::automatic);

  const auto dispatch = [&]() -> int {
    if (c_render->parsed()) return run_render(render);
    if (c_warp->parsed()) return run_warp(warp);
    if (c_d2d->parsed()) return run_disp2depth(d2d);
    if (c_d2p->parsed()) return run_depth2disp(d2p);
    if (c_gen->parsed()) return run_gen_stereo(gen);
    if (c_eval->parsed()) return run_eval(eval);
    if (c_stats->parsed()) return run_stats(stats);
    if (c_prep->parsed()) return run_prep(prep);
    if (c_synth->parsed()) return run_synth(synth);
    return kExitUsage;
  };

  try {
    return arena.execute(dispatch);
  } catch (const ConfigError& e) {
    return report_error("ConfigError", kExitUsage, e.what());
  } catch (const ContractError& e) {
    return report_error("ContractError", kExitUsage, e.what());
  } catch (const DataError& e) {
    return report_error("DataError", kExitData, e.what());
  } catch (const DomainError& e) {
    return report_error("DomainError", kExitDomain, e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error("DataError", kExitData, e.what());
  } catch (const std::exception& e) {
    return report_error("InternalError", 1, e.what());
  }
}
