#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtsynth/errors.hpp"
#include "qtsynth/quaternion.hpp"

namespace qtsynth {

/// One subject's tangent curve sampled on the grid, one row per time
/// point, columns (vx, vy, vz).
using TangentCurve = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Unit quaternion time series on a strictly increasing time grid.
struct Qts {
  std::vector<double> grid;
  std::vector<UnitQuaternion> values;

  std::size_t size() const { return grid.size(); }
};

inline void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw GridMismatch("empty time grid");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) {
      throw GridMismatch("time grid is not strictly increasing at index " + std::to_string(k));
    }
  }
}

/// Sample of n series sharing one grid.
struct QtsSample {
  std::vector<double> grid;
  std::vector<std::string> ids;
  std::vector<std::vector<UnitQuaternion>> series;

  std::size_t n_subjects() const { return series.size(); }
  std::size_t n_points() const { return grid.size(); }

  Qts subject(std::size_t i) const { return Qts{grid, series[i]}; }

  void validate() const {
    validate_grid(grid);
    if (series.size() < 2) throw InvalidConfig("sample needs at least 2 subjects");
    if (ids.size() != series.size()) throw ShapeMismatch("ids/series length mismatch");
    for (const auto& s : series) {
      if (s.size() != grid.size()) throw GridMismatch("subject series length differs from grid");
    }
  }
};

/// Pointwise Frechet mean series and the left-translated residual sample.
///
/// At each time point the n quaternions are sign-aligned against a running
/// reference (the previous mean, so the mean curve cannot flip sheets
/// between adjacent points) and averaged; the centered value of subject i
/// is mean^-1 * q_i, sign-aligned to w >= 0.
inline std::pair<Qts, QtsSample> center_sample(const QtsSample& sample) {
  sample.validate();
  const std::size_t n = sample.n_subjects();
  const std::size_t p = sample.n_points();

  Qts mean;
  mean.grid = sample.grid;
  mean.values.reserve(p);

  QtsSample centered;
  centered.grid = sample.grid;
  centered.ids = sample.ids;
  centered.series.assign(n, std::vector<UnitQuaternion>());
  for (auto& s : centered.series) s.reserve(p);

  UnitQuaternion reference = sample.series[0][0].canonical();
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<UnitQuaternion> column;
    column.reserve(n);
    for (std::size_t i = 0; i < n; ++i) column.push_back(sample.series[i][k]);
    const auto aligned = sign_align(column, reference);
    UnitQuaternion m;
    try {
      m = frechet_mean(aligned);
    } catch (const NoConvergence&) {
      throw NoConvergence("pointwise mean did not converge at t = " + std::to_string(sample.grid[k]));
    }
    mean.values.push_back(m);
    reference = m;
    const UnitQuaternion minv = m.conjugate();
    for (std::size_t i = 0; i < n; ++i) {
      centered.series[i].push_back((minv * aligned[i]).canonical());
    }
  }
  return {std::move(mean), std::move(centered)};
}

/// Left-translates a sample by the inverse of a given mean series, without
/// re-estimating the mean. Used to push a second sample through a model
/// fitted elsewhere.
inline QtsSample center_with(const QtsSample& sample, const Qts& mean) {
  sample.validate();
  if (mean.grid != sample.grid) throw GridMismatch("mean series grid differs from sample grid");
  QtsSample centered;
  centered.grid = sample.grid;
  centered.ids = sample.ids;
  centered.series.assign(sample.n_subjects(), std::vector<UnitQuaternion>());
  for (std::size_t i = 0; i < sample.n_subjects(); ++i) {
    centered.series[i].reserve(sample.n_points());
    for (std::size_t k = 0; k < sample.n_points(); ++k) {
      centered.series[i].push_back((mean.values[k].conjugate() * sample.series[i][k]).canonical());
    }
  }
  return centered;
}

/// Projects a centered sample into the Lie algebra: v_ik = log(q_ik).
/// Errors carry the offending (subject, time point).
inline std::vector<TangentCurve> to_log_qts(const QtsSample& centered) {
  centered.validate();
  std::vector<TangentCurve> out;
  out.reserve(centered.n_subjects());
  for (std::size_t i = 0; i < centered.n_subjects(); ++i) {
    TangentCurve curve(centered.n_points(), 3);
    for (std::size_t k = 0; k < centered.n_points(); ++k) {
      try {
        curve.row(k) = quat_log(centered.series[i][k]).transpose();
      } catch (const AntipodalInput&) {
        throw AntipodalInput("antipodal centered value at subject " + std::to_string(i) +
                             ", grid index " + std::to_string(k));
      }
    }
    out.push_back(std::move(curve));
  }
  return out;
}

}  // namespace qtsynth
