#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

namespace wfov {

/// Row-major dense 2D grid; row index is the image v coordinate.
template <typename T>
using Plane = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Mask = Plane<bool>;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

/// Unit viewing direction in a camera or projection frame.
template <typename Scalar>
using Ray = Vec3<Scalar>;

struct RgbImage {
  std::array<Plane<std::uint8_t>, 3> channel;

  RgbImage() = default;
  RgbImage(Eigen::Index rows, Eigen::Index cols) {
    for (auto& c : channel) c = Plane<std::uint8_t>::Zero(rows, cols);
  }
  Eigen::Index rows() const { return channel[0].rows(); }
  Eigen::Index cols() const { return channel[0].cols(); }
};

// Error taxonomy. The CLI maps each class onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or unsupported option (usage error).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or missing data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Geometry outside a model's valid domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Runs body(row) for every row in [0, rows), rows distributed over the TBB pool.
template <typename Body>
void parallel_rows(Eigen::Index rows, Body&& body) {
  tbb::parallel_for(tbb::blocked_range<Eigen::Index>(0, rows),
                    [&](const tbb::blocked_range<Eigen::Index>& r) {
                      for (Eigen::Index i = r.begin(); i != r.end(); ++i) body(i);
                    });
}

/// Sum of term(i) for i in [0, n). Fixed-size blocks are summed sequentially and the
/// block sums are then added in index order, so the result does not depend on the
/// number of worker threads.
template <typename Term>
double deterministic_sum(std::size_t n, Term&& term) {
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
  tbb::parallel_for(std::size_t{0}, blocks, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    double s = 0.0;
    for (std::size_t i = b * kBlock; i < end; ++i) s += term(i);
    partial[b] = s;
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

}  // namespace wfov
