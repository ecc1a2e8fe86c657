#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtsynth/errors.hpp"
#include "qtsynth/qts.hpp"
#include "qtsynth/quaternion.hpp"
#include "qtsynth/spline.hpp"

namespace qtsynth {

/// n x (n-1) matrix of functional scores; row i holds subject i's scores,
/// column k pairs with eigenfunction k.
using ScoreMatrix = Eigen::MatrixXd;

/// Trapezoid quadrature weights on an observation grid.
inline Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
  const Eigen::Index p = grid.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k + 1 < p; ++k) {
    const double h = grid[k + 1] - grid[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

/// Fitted functional PCA basis for 3-dimensional curves on a shared grid.
///
/// Holds the sample mean function, orthonormal eigenfunctions (under the
/// trapezoid inner product), nonincreasing eigenvalues clamped at zero,
/// and the quadrature grid everything is sampled on.
struct MfpcaModel {
  Eigen::VectorXd grid;
  Eigen::VectorXd quad_weights;
  TangentCurve mean;                       // p x 3
  std::vector<TangentCurve> eigenfunctions;  // each p x 3
  Eigen::VectorXd eigenvalues;             // descending, >= 0
  int n_samples = 0;
  bool degenerate = false;  // all curves identical: every eigenvalue null

  Eigen::Index n_components() const { return eigenvalues.size(); }

  /// Inertia share per component. Eigenvalues below 1e-12 * lambda_1 count
  /// as null and report zero share; shares sum to 1 over the kept ones.
  Eigen::VectorXd inertia_shares() const {
    Eigen::VectorXd kept = eigenvalues;
    if (eigenvalues.size() > 0) {
      const double floor = 1e-12 * eigenvalues[0];
      for (Eigen::Index k = 0; k < kept.size(); ++k) {
        if (kept[k] < floor) kept[k] = 0.0;
      }
    }
    const double total = kept.sum();
    if (total <= 0.0) return Eigen::VectorXd::Zero(kept.size());
    return kept / total;
  }
};

/// Pointwise average of the curves on their shared grid.
inline TangentCurve functional_mean(const std::vector<LogQfd>& data) {
  if (data.empty()) throw InvalidConfig("functional_mean needs at least one curve");
  TangentCurve mean = TangentCurve::Zero(data.front().grid().size(), 3);
  for (const auto& d : data) {
    if (d.grid().size() != mean.rows()) throw GridMismatch("curves on different grids");
    mean += d.grid_values();
  }
  return mean / static_cast<double>(data.size());
}

/// Multivariate functional PCA by quadrature discretization.
///
/// Each centered curve is sampled on the grid, the three dimensions are
/// stacked into one vector weighted by square-root trapezoid weights, and
/// the resulting sample covariance (1/(n-1) normalization) is
/// eigendecomposed. Unweighting the eigenvectors yields eigenfunctions
/// orthonormal under the quadrature inner product; scores are the
/// quadrature projections of the centered curves. Exactly n-1 components
/// are returned; ranks the data cannot reach carry null eigenvalues.
/// Every eigenfunction is sign-fixed so its grid value of largest
/// magnitude is positive.
inline std::pair<MfpcaModel, ScoreMatrix> mfpca(const std::vector<LogQfd>& data) {
  const std::size_t n = data.size();
  if (n < 2) throw InvalidConfig("mfpca needs at least 2 curves");

  MfpcaModel model;
  model.grid = data.front().grid();
  const Eigen::Index p = model.grid.size();
  for (const auto& d : data) {
    if (d.grid().size() != p || d.grid() != model.grid) {
      throw GridMismatch("mfpca curves on different grids");
    }
  }
  model.quad_weights = trapezoid_weights(model.grid);
  model.mean = functional_mean(data);
  model.n_samples = static_cast<int>(n);

  const Eigen::VectorXd sqw = model.quad_weights.cwiseSqrt();

  // Rows of Z are the weighted, stacked, centered curves.
  Eigen::MatrixXd Z(n, 3 * p);
  for (std::size_t i = 0; i < n; ++i) {
    const TangentCurve centered = data[i].grid_values() - model.mean;
    for (int j = 0; j < 3; ++j) {
      Z.row(i).segment(j * p, p) = (centered.col(j).array() * sqw.array()).transpose();
    }
  }

  const Eigen::MatrixXd cov = Z.transpose() * Z / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("mfpca eigendecomposition failed");

  const Eigen::Index r = std::min<Eigen::Index>(static_cast<Eigen::Index>(n) - 1, 3 * p);
  model.eigenvalues = Eigen::VectorXd(r);
  model.eigenfunctions.reserve(r);
  Eigen::MatrixXd basis(3 * p, r);  // weighted eigenvectors, sign-fixed
  for (Eigen::Index k = 0; k < r; ++k) {
    const Eigen::Index src = 3 * p - 1 - k;  // solver sorts ascending
    model.eigenvalues[k] = std::max(0.0, solver.eigenvalues()[src]);
    Eigen::VectorXd u = solver.eigenvectors().col(src);

    TangentCurve phi(p, 3);
    for (int j = 0; j < 3; ++j) {
      phi.col(j) = u.segment(j * p, p).array() / sqw.array();
    }
    // Deterministic sign: the grid value of largest magnitude is positive.
    // Ties within a relative window resolve to the first grid entry, so
    // sign-symmetric shapes cannot flip under fp jitter.
    const double peak = phi.cwiseAbs().maxCoeff();
    double anchor = 0.0;
    for (Eigen::Index g = 0; g < p && anchor == 0.0; ++g) {
      for (int j = 0; j < 3; ++j) {
        if (std::abs(phi(g, j)) >= peak * (1.0 - 1e-9)) {
          anchor = phi(g, j);
          break;
        }
      }
    }
    if (anchor < 0.0) {
      phi = -phi;
      u = -u;
    }
    model.eigenfunctions.push_back(std::move(phi));
    basis.col(k) = u;
  }

  ScoreMatrix scores = Z * basis;

  const double mean_scale = std::max(1.0, model.mean.squaredNorm());
  model.degenerate = (r == 0) || (model.eigenvalues[0] <= 1e-24 * mean_scale);
  if (model.degenerate) scores.setZero();

  return {std::move(model), std::move(scores)};
}

/// Quadrature projection of one curve onto the model's eigenfunctions:
/// f_k = sum_dims int (x - mean) phi_k dt.
inline Eigen::VectorXd project_scores(const LogQfd& datum, const MfpcaModel& model) {
  if (datum.grid().size() != model.grid.size() || datum.grid() != model.grid) {
    throw GridMismatch("datum grid differs from model grid");
  }
  const TangentCurve centered = datum.grid_values() - model.mean;
  Eigen::VectorXd f(model.n_components());
  for (Eigen::Index k = 0; k < model.n_components(); ++k) {
    const auto& phi = model.eigenfunctions[k];
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) {
      acc += (centered.col(j).array() * phi.col(j).array() * model.quad_weights.array()).sum();
    }
    f[k] = acc;
  }
  return f;
}

/// Rebuilds a unit QTS from scores: evaluates the truncated expansion on
/// the grid, adds the functional mean back (the scores are defined against
/// it; set include_mean = false to drop it), exponentiates, and
/// left-multiplies by the mean series. Output values carry w >= 0. Throws
/// TangentOverflow when the expansion leaves the injectivity radius.
inline Qts reconstruct_qts(const Eigen::VectorXd& scores, const MfpcaModel& model,
                           const Qts& mean_qts, const std::vector<double>& grid,
                           bool include_mean = true) {
  if (scores.size() > model.n_components()) {
    throw SizeMismatch("more scores than model components");
  }
  if (static_cast<Eigen::Index>(grid.size()) != model.grid.size()) {
    throw GridMismatch("requested grid differs from model grid");
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] != model.grid[static_cast<Eigen::Index>(k)]) {
      throw GridMismatch("requested grid differs from model grid");
    }
  }
  if (mean_qts.grid != grid) throw GridMismatch("mean series grid differs from requested grid");

  TangentCurve tangent =
      include_mean ? model.mean : TangentCurve::Zero(model.grid.size(), 3).eval();
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    tangent += scores[j] * model.eigenfunctions[j];
  }

  Qts out;
  out.grid = grid;
  out.values.reserve(grid.size());
  for (Eigen::Index k = 0; k < tangent.rows(); ++k) {
    const TangentVector v = tangent.row(k).transpose();
    if (v.norm() >= M_PI) {
      throw TangentOverflow("tangent norm " + std::to_string(v.norm()) + " at t = " +
                            std::to_string(grid[static_cast<std::size_t>(k)]) +
                            " leaves the injectivity radius");
    }
    out.values.push_back((mean_qts.values[static_cast<std::size_t>(k)] * quat_exp(v)).canonical());
  }
  return out;
}

}  // namespace qtsynth
