#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtsynth/errors.hpp"
#include "qtsynth/rng.hpp"
#include "qtsynth/stats.hpp"

namespace qtsynth {

/// Empirical distribution of one column: right-continuous CDF over the
/// sorted sample, left-continuous generalized inverse that maps back onto
/// the observed values.
class EmpiricalMarginal {
public:
  EmpiricalMarginal() = default;

  explicit EmpiricalMarginal(Eigen::VectorXd column) {
    sorted_.assign(column.data(), column.data() + column.size());
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::size_t size() const { return sorted_.size(); }

  /// Fraction of sample values <= x.
  double cdf(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  /// Smallest sample value whose CDF reaches u.
  double quantile(double u) const {
    const auto n = static_cast<double>(sorted_.size());
    const auto idx = static_cast<std::ptrdiff_t>(std::ceil(u * n)) - 1;
    return sorted_[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
        idx, 0, static_cast<std::ptrdiff_t>(sorted_.size()) - 1))];
  }

  const std::vector<double>& values() const { return sorted_; }

private:
  std::vector<double> sorted_;
};

/// Gaussian copula with empirical marginals. Constant columns are kept out
/// of the correlation structure and resampled as constants.
struct CopulaModel {
  std::vector<EmpiricalMarginal> marginals;  // one per input column
  std::vector<int> active;                   // columns inside the copula
  Eigen::MatrixXd correlation;               // repaired, unit diagonal
  Eigen::MatrixXd cholesky;                  // L with L L^T = correlation
};

namespace detail {

/// Renormalizes to unit diagonal, symmetrizes, and clamps eigenvalues when
/// the matrix is not positive definite.
inline Eigen::MatrixXd repair_correlation(Eigen::MatrixXd sigma) {
  const Eigen::Index p = sigma.rows();
  Eigen::VectorXd d = sigma.diagonal().cwiseMax(1e-300).cwiseSqrt();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) sigma(i, j) /= d[i] * d[j];
  }
  sigma = 0.5 * (sigma + sigma.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) return sigma;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-8);
  sigma = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  Eigen::VectorXd d2 = sigma.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) sigma(i, j) /= d2[i] * d2[j];
  }
  return 0.5 * (sigma + sigma.transpose()).eval();
}

}  // namespace detail

/// Fits the Gaussian copula: empirical CDFs per column, pseudo-observations
/// rescaled by n/(n+1) so the normal quantile stays finite, normal scores,
/// and their correlation matrix repaired to positive definite.
inline CopulaModel fit_copula(const Eigen::MatrixXd& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  if (n < 2) throw InvalidConfig("copula needs at least 2 rows");
  if (p < 1) throw InvalidConfig("copula needs at least 1 column");

  CopulaModel model;
  model.marginals.reserve(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    model.marginals.emplace_back(data.col(j));
    const auto& v = model.marginals.back().values();
    if (v.front() < v.back()) model.active.push_back(static_cast<int>(j));
  }

  const Eigen::Index q = static_cast<Eigen::Index>(model.active.size());
  if (q == 0) {
    model.correlation.resize(0, 0);
    model.cholesky.resize(0, 0);
    return model;
  }

  Eigen::MatrixXd z(n, q);
  for (Eigen::Index c = 0; c < q; ++c) {
    const auto& marginal = model.marginals[model.active[c]];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = marginal.cdf(data(i, model.active[c])) * n / (n + 1.0);
      z(i, c) = normal_quantile(u);
    }
  }

  const Eigen::MatrixXd sigma = z.transpose() * z / static_cast<double>(n);
  model.correlation = detail::repair_correlation(sigma);

  Eigen::LLT<Eigen::MatrixXd> llt(model.correlation);
  if (llt.info() != Eigen::Success) {
    throw SingularCorrelation("correlation matrix not positive definite after repair");
  }
  model.cholesky = llt.matrixL();
  return model;
}

/// Draws m synthetic rows: correlated normals through the Cholesky factor,
/// mapped through the normal CDF and inverted through each empirical
/// marginal. Every output value is one of the original column's values.
inline Eigen::MatrixXd sample_copula(const CopulaModel& model, Eigen::Index m, Rng& rng) {
  const Eigen::Index p = static_cast<Eigen::Index>(model.marginals.size());
  const Eigen::Index q = static_cast<Eigen::Index>(model.active.size());
  Eigen::MatrixXd out(m, p);

  // Constant columns first; they carry no randomness.
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::find(model.active.begin(), model.active.end(), static_cast<int>(j)) ==
        model.active.end()) {
      out.col(j).setConstant(model.marginals[j].values().front());
    }
  }

  Eigen::VectorXd z(q);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index c = 0; c < q; ++c) z[c] = rng.normal();
    const Eigen::VectorXd y = model.cholesky * z;
    for (Eigen::Index c = 0; c < q; ++c) {
      const int j = model.active[c];
      out(i, j) = model.marginals[j].quantile(normal_cdf(y[c]));
    }
  }
  return out;
}

}  // namespace qtsynth
