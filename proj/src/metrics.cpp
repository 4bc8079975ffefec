#include "wfov/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace wfov {

const MetricValue& EvalReport::at(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.name == name) return m;
  throw std::out_of_range("no metric named " + name);
}

double percentile(std::vector<double>& values, double p) {
  if (values.empty()) throw DataError("percentile of an empty set");
  if (!(p >= 0 && p <= 100)) throw ContractError("percentile outside [0, 100]");
  const double pos = p / 100.0 * double(values.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const double frac = pos - double(lo);
  std::nth_element(values.begin(), values.begin() + std::ptrdiff_t(lo), values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return a;
  const double b = *std::min_element(values.begin() + std::ptrdiff_t(lo) + 1, values.end());
  return a + frac * (b - a);
}

namespace {

template <typename Map>
void check_shapes(const Map& pred, const Map& gt) {
  if (pred.values.rows() != gt.values.rows() || pred.values.cols() != gt.values.cols())
    throw ContractError("metrics: prediction and ground truth shapes differ");
  if (pred.valid.rows() != pred.values.rows() || pred.valid.cols() != pred.values.cols() ||
      gt.valid.rows() != gt.values.rows() || gt.valid.cols() != gt.values.cols())
    throw ContractError("metrics: mask shape mismatch");
}

struct Pairs {
  std::vector<double> pred, gt;
};

template <typename Map, typename Accept>
Pairs collect(const Map& pred, const Map& gt, Accept&& accept) {
  Pairs out;
  for (Eigen::Index r = 0; r < gt.values.rows(); ++r)
    for (Eigen::Index c = 0; c < gt.values.cols(); ++c) {
      if (!pred.valid(r, c) || !gt.valid(r, c)) continue;
      const double p = pred.values(r, c), g = gt.values(r, c);
      if (!std::isfinite(p) || !std::isfinite(g) || !accept(p, g)) continue;
      out.pred.push_back(p);
      out.gt.push_back(g);
    }
  if (out.gt.empty()) throw DataError("metrics: empty valid-pixel intersection");
  return out;
}

}  // namespace

EvalReport disparity_metrics(const DisparityMap& pred, const DisparityMap& gt) {
  check_shapes(pred, gt);
  const Pairs px = collect(pred, gt, [](double, double) { return true; });
  const std::size_t n = px.gt.size();

  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i) err[i] = std::abs(px.pred[i] - px.gt[i]);

  EvalReport rep;
  rep.domain.kind = "disparity";
  const double epe = deterministic_sum(n, [&](std::size_t i) { return err[i]; }) / double(n);
  const double rel = deterministic_sum(n, [&](std::size_t i) { return err[i] / std::max(px.gt[i], kRelEpeFloorPx); }) /
                     double(n);
  std::vector<double> scratch = err;
  const double q50 = percentile(scratch, 50.0);
  const double q95 = percentile(scratch, 95.0);
  rep.metrics.push_back({"EPE", epe, "px", n});
  rep.metrics.push_back({"Q50_EPE", q50, "px", n});
  rep.metrics.push_back({"Q95_EPE", q95, "px", n});
  for (int tau : {1, 2, 3}) {
    const auto bad = std::count_if(err.begin(), err.end(), [tau](double e) { return e > double(tau); });
    rep.metrics.push_back({"bad-" + std::to_string(tau), 100.0 * double(bad) / double(n), "%", n});
  }
  rep.metrics.push_back({"RelEPE", rel, "ratio", n});
  return rep;
}

double rel_epe(const DisparityMap& pred, const DisparityMap& gt) {
  check_shapes(pred, gt);
  const Pairs px = collect(pred, gt, [](double, double) { return true; });
  return deterministic_sum(px.gt.size(),
                           [&](std::size_t i) {
                             return std::abs(px.pred[i] - px.gt[i]) / std::max(px.gt[i], kRelEpeFloorPx);
                           }) /
         double(px.gt.size());
}

EvalReport depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  check_shapes(pred, gt);
  const Pairs px = collect(pred, gt, [](double p, double g) { return p > 0 && g > 0; });
  const std::size_t n = px.gt.size();
  const auto& p = px.pred;
  const auto& g = px.gt;

  EvalReport rep;
  rep.domain.kind = "depth";
  const double absrel = deterministic_sum(n, [&](std::size_t i) { return std::abs(p[i] - g[i]) / g[i]; }) / double(n);
  const double mae = deterministic_sum(n, [&](std::size_t i) { return std::abs(p[i] - g[i]); }) / double(n);
  const double mse = deterministic_sum(n, [&](std::size_t i) { return (p[i] - g[i]) * (p[i] - g[i]); }) / double(n);
  rep.metrics.push_back({"AbsRel", absrel, "ratio", n});
  rep.metrics.push_back({"MAE", mae, "m", n});
  rep.metrics.push_back({"RMSE", std::sqrt(mse), "m", n});
  const std::array<std::pair<const char*, double>, 3> thresholds{
      {{"delta_1.25", 1.25}, {"delta_1.25^2", 1.25 * 1.25}, {"delta_1.25^3", 1.25 * 1.25 * 1.25}}};
  for (const auto& [name, t] : thresholds) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (std::max(p[i] / g[i], g[i] / p[i]) < t) ++hit;
    rep.metrics.push_back({name, 100.0 * double(hit) / double(n), "%", n});
  }
  return rep;
}

Plane<std::uint8_t> to_gray(const RgbImage& rgb) {
  Plane<std::uint8_t> out(rgb.rows(), rgb.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const double y = 0.299 * rgb.channel[0](r, c) + 0.587 * rgb.channel[1](r, c) + 0.114 * rgb.channel[2](r, c);
      out(r, c) = static_cast<std::uint8_t>(std::clamp(std::floor(y + 0.5), 0.0, 255.0));
    }
  return out;
}

EntropyStats local_entropy_stats(const Plane<std::uint8_t>& gray, const Mask* valid, int window) {
  if (window < 1 || window % 2 == 0) throw ConfigError("entropy: window must be a positive odd size");
  if (valid && (valid->rows() != gray.rows() || valid->cols() != gray.cols()))
    throw ContractError("entropy: mask shape mismatch");
  const Eigen::Index rows = gray.rows(), cols = gray.cols();
  const int half = window / 2;

  // c * log2(c) for every possible bin count.
  const int max_count = window * window;
  std::vector<double> clogc(std::size_t(max_count) + 1, 0.0);
  for (int c = 1; c <= max_count; ++c) clogc[std::size_t(c)] = c * std::log2(double(c));

  EntropyStats out{Plane<double>::Zero(rows, cols), 0.0};
  const auto usable = [&](Eigen::Index r, Eigen::Index c) { return !valid || (*valid)(r, c); };

  parallel_rows(rows, [&](Eigen::Index r) {
    const Eigen::Index r0 = std::max<Eigen::Index>(0, r - half), r1 = std::min<Eigen::Index>(rows - 1, r + half);
    std::array<int, 256> hist{};
    int total = 0;
    const auto add_column = [&](Eigen::Index c, int sign) {
      for (Eigen::Index y = r0; y <= r1; ++y)
        if (usable(y, c)) {
          hist[gray(y, c)] += sign;
          total += sign;
        }
    };
    for (Eigen::Index c = 0; c <= std::min<Eigen::Index>(cols - 1, half); ++c) add_column(c, +1);
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (c > 0) {
        if (c + half < cols) add_column(c + half, +1);
        if (c - half - 1 >= 0) add_column(c - half - 1, -1);
      }
      if (!usable(r, c) || total == 0) continue;
      double s = 0.0;
      int occupied = 0;
      for (int b = 0; b < 256; ++b) {
        s += clogc[std::size_t(hist[std::size_t(b)])];
        occupied += hist[std::size_t(b)] > 0 ? 1 : 0;
      }
      // A uniform window carries exactly zero bits; skip the rounding residue.
      if (occupied > 1) out.entropy(r, c) = std::max(0.0, std::log2(double(total)) - s / double(total));
    }
  });

  std::size_t count = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) count += usable(r, c) ? 1 : 0;
  if (count > 0)
    out.mean = deterministic_sum(std::size_t(rows * cols),
                                 [&](std::size_t i) {
                                   const Eigen::Index r = Eigen::Index(i) / cols, c = Eigen::Index(i) % cols;
                                   return usable(r, c) ? out.entropy(r, c) : 0.0;
                                 }) /
               double(count);
  return out;
}

void depth_histogram_counts(const DepthMap& depth, std::span<const double> bin_edges,
                            std::vector<std::size_t>& counts) {
  if (bin_edges.size() < 2) throw ConfigError("histogram: need at least two bin edges");
  if (!std::is_sorted(bin_edges.begin(), bin_edges.end())) throw ConfigError("histogram: bin edges must ascend");
  counts.resize(bin_edges.size() - 1, 0);
  for (Eigen::Index r = 0; r < depth.values.rows(); ++r)
    for (Eigen::Index c = 0; c < depth.values.cols(); ++c) {
      if (!depth.valid(r, c)) continue;
      const double z = depth.values(r, c);
      const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), z);
      if (it == bin_edges.begin() || it == bin_edges.end()) continue;
      ++counts[std::size_t(it - bin_edges.begin() - 1)];
    }
}

std::vector<double> depth_histogram(const DepthMap& depth, std::span<const double> bin_edges) {
  const auto valid = std::size_t(depth.valid.count());
  if (valid == 0) throw DataError("histogram: no valid depth pixels");
  std::vector<std::size_t> counts;
  depth_histogram_counts(depth, bin_edges, counts);
  std::vector<double> out;
  for (auto c : counts) out.push_back(double(c) / double(valid));
  return out;
}

}  // namespace wfov
