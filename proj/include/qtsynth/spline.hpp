#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qtsynth/errors.hpp"
#include "qtsynth/qts.hpp"

namespace qtsynth {

/// Natural cubic interpolating spline through one scalar curve. Second
/// derivatives vanish at both ends; the interpolant reproduces the data at
/// every knot exactly.
class CubicSpline {
public:
  CubicSpline() = default;

  CubicSpline(const Eigen::VectorXd& grid, const Eigen::VectorXd& values)
      : grid_(grid), values_(values) {
    const Eigen::Index p = grid.size();
    if (p < 4) throw GridTooShort("cubic interpolation needs at least 4 grid points");
    if (values.size() != p) throw GridMismatch("spline values/grid length mismatch");

    // Tridiagonal system for the knot second derivatives (Thomas solve).
    Eigen::VectorXd h(p - 1);
    for (Eigen::Index k = 0; k + 1 < p; ++k) h[k] = grid[k + 1] - grid[k];

    Eigen::VectorXd diag(p), upper(p), rhs(p);
    diag[0] = 1.0;
    upper[0] = 0.0;
    rhs[0] = 0.0;
    for (Eigen::Index k = 1; k + 1 < p; ++k) {
      diag[k] = 2.0 * (h[k - 1] + h[k]);
      upper[k] = h[k];
      rhs[k] = 6.0 * ((values[k + 1] - values[k]) / h[k] - (values[k] - values[k - 1]) / h[k - 1]);
    }
    diag[p - 1] = 1.0;
    rhs[p - 1] = 0.0;

    Eigen::VectorXd c(p), d(p);
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for (Eigen::Index k = 1; k < p; ++k) {
      const double lower = (k + 1 < p) ? h[k - 1] : 0.0;
      const double denom = diag[k] - lower * c[k - 1];
      c[k] = (k + 1 < p) ? upper[k] / denom : 0.0;
      d[k] = (rhs[k] - lower * d[k - 1]) / denom;
    }
    second_ = Eigen::VectorXd(p);
    second_[p - 1] = d[p - 1];
    for (Eigen::Index k = p - 2; k >= 0; --k) second_[k] = d[k] - c[k] * second_[k + 1];
  }

  /// Evaluates the interpolant; arguments outside the grid are clamped to
  /// the boundary segments.
  double operator()(double t) const {
    const Eigen::Index k = segment(t);
    const double h = grid_[k + 1] - grid_[k];
    const double a = (grid_[k + 1] - t) / h;
    const double b = (t - grid_[k]) / h;
    return a * values_[k] + b * values_[k + 1] +
           ((a * a * a - a) * second_[k] + (b * b * b - b) * second_[k + 1]) * h * h / 6.0;
  }

  const Eigen::VectorXd& grid() const { return grid_; }
  const Eigen::VectorXd& knot_values() const { return values_; }

private:
  Eigen::Index segment(double t) const {
    const Eigen::Index p = grid_.size();
    if (t <= grid_[0]) return 0;
    if (t >= grid_[p - 1]) return p - 2;
    Eigen::Index lo = 0, hi = p - 1;
    while (hi - lo > 1) {
      const Eigen::Index mid = (lo + hi) / 2;
      (grid_[mid] <= t ? lo : hi) = mid;
    }
    return lo;
  }

  Eigen::VectorXd grid_;
  Eigen::VectorXd values_;
  Eigen::VectorXd second_;
};

/// Functional representation of one subject's 3-dimensional tangent curve:
/// a natural cubic spline per dimension, sharing the observation grid.
class LogQfd {
public:
  LogQfd() = default;

  LogQfd(const Eigen::VectorXd& grid, const TangentCurve& values) : grid_(grid), values_(values) {
    for (int j = 0; j < 3; ++j) dims_[j] = CubicSpline(grid, values.col(j));
  }

  Eigen::Vector3d operator()(double t) const {
    return {dims_[0](t), dims_[1](t), dims_[2](t)};
  }

  /// Knot values; identical to the observed tangent samples.
  const TangentCurve& grid_values() const { return values_; }
  const Eigen::VectorXd& grid() const { return grid_; }

private:
  Eigen::VectorXd grid_;
  TangentCurve values_;
  CubicSpline dims_[3];
};

/// Interpolates every subject's tangent curve.
inline std::vector<LogQfd> fit_splines(const std::vector<TangentCurve>& logqts,
                                       const std::vector<double>& grid) {
  if (grid.size() < 4) throw GridTooShort("cubic interpolation needs at least 4 grid points");
  validate_grid(grid);
  const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(grid.data(), grid.size());
  std::vector<LogQfd> out;
  out.reserve(logqts.size());
  for (const auto& curve : logqts) {
    if (curve.rows() != g.size()) throw GridMismatch("tangent curve length differs from grid");
    out.emplace_back(g, curve);
  }
  return out;
}

}  // namespace qtsynth
