#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtsynth/errors.hpp"

namespace qtsynth {

/// Undirected k-nearest-neighbor graph as a dense binary adjacency matrix.
struct KnnGraph {
  Eigen::MatrixXi adjacency;  // symmetric, zero diagonal
  int k = 0;

  Eigen::Index size() const { return adjacency.rows(); }
};

/// How the directed k-NN relation is made symmetric.
enum class KnnSymmetrization { kUnion, kMutual };

/// Builds the k-NN graph of a point cloud under Euclidean distance, ties
/// broken by smaller index. Union symmetrization links i and j when either
/// lists the other; mutual requires both.
inline KnnGraph knn_graph(const Eigen::MatrixXd& points, int k,
                          KnnSymmetrization sym = KnnSymmetrization::kUnion) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n - 1) throw InvalidK("k must lie in [1, n-1]");

  Eigen::MatrixXi directed = Eigen::MatrixXi::Zero(n, n);
  std::vector<int> order(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    order.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) order.push_back(static_cast<int>(j));
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double da = (points.row(i) - points.row(a)).squaredNorm();
      const double db = (points.row(i) - points.row(b)).squaredNorm();
      if (da != db) return da < db;
      return a < b;
    });
    for (int j = 0; j < k; ++j) directed(i, order[j]) = 1;
  }

  KnnGraph graph;
  graph.k = k;
  graph.adjacency = Eigen::MatrixXi::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const bool edge = sym == KnnSymmetrization::kUnion
                            ? (directed(i, j) == 1 || directed(j, i) == 1)
                            : (directed(i, j) == 1 && directed(j, i) == 1);
      graph.adjacency(i, j) = graph.adjacency(j, i) = edge ? 1 : 0;
    }
  }
  return graph;
}

/// Strategy for the permutation in the graph Frobenius distance.
enum class FrobeniusMode { kExact, kPaired, kHeuristic };

namespace detail {

inline double frobenius_cost(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b,
                             const std::vector<int>& perm) {
  const Eigen::Index n = a.rows();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double diff = a(i, j) - b(perm[i], perm[j]);
      sum += diff * diff;
    }
  }
  return sum;
}

}  // namespace detail

/// Frobenius distance between adjacency matrices, minimized over node
/// relabelings of the second graph.
///
/// kExact enumerates all permutations (n <= 8 only). kPaired keeps the
/// identity, valid when rows already correspond one-to-one. kHeuristic
/// runs greedy 2-swap descent from the identity and reports the local
/// optimum, an upper bound on the true minimum.
inline double knng_frobenius(const KnnGraph& a, const KnnGraph& b,
                             FrobeniusMode mode = FrobeniusMode::kPaired) {
  if (a.size() != b.size()) throw SizeMismatch("graphs differ in node count");
  if (a.k != b.k) throw SizeMismatch("graphs differ in k");
  const Eigen::Index n = a.size();

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  switch (mode) {
    case FrobeniusMode::kPaired:
      return std::sqrt(detail::frobenius_cost(a.adjacency, b.adjacency, perm));
    case FrobeniusMode::kExact: {
      if (n > 8) throw ExactTooLarge("exact permutation search is limited to n <= 8");
      double best = std::numeric_limits<double>::infinity();
      do {
        best = std::min(best, detail::frobenius_cost(a.adjacency, b.adjacency, perm));
      } while (std::next_permutation(perm.begin(), perm.end()));
      return std::sqrt(best);
    }
    case FrobeniusMode::kHeuristic: {
      double cost = detail::frobenius_cost(a.adjacency, b.adjacency, perm);
      bool improved = true;
      while (improved && cost > 0.0) {
        improved = false;
        double best_cost = cost;
        Eigen::Index best_i = 0, best_j = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = i + 1; j < n; ++j) {
            std::swap(perm[i], perm[j]);
            const double c = detail::frobenius_cost(a.adjacency, b.adjacency, perm);
            std::swap(perm[i], perm[j]);
            if (c < best_cost) {
              best_cost = c;
              best_i = i;
              best_j = j;
            }
          }
        }
        if (best_cost < cost) {
          std::swap(perm[best_i], perm[best_j]);
          cost = best_cost;
          improved = true;
        }
      }
      return std::sqrt(cost);
    }
  }
  throw Error("unreachable");
}

/// RV coefficient between two matrices over the same individuals:
/// tr(S_FG S_GF) / sqrt(tr(S_FF^2) tr(S_GG^2)) with S_AB = A^T B / (n-1).
inline double rv_coefficient(const Eigen::MatrixXd& f, const Eigen::MatrixXd& g) {
  if (f.rows() != g.rows()) throw SizeMismatch("RV needs matrices with matching rows");
  const double cross = (f.transpose() * g).squaredNorm();
  const double nf = (f.transpose() * f).norm();
  const double ng = (g.transpose() * g).norm();
  if (nf == 0.0 || ng == 0.0) throw ZeroNorm("RV undefined for an all-zero matrix");
  return cross / (nf * ng);
}

enum class Statistic { kMean, kSd };

namespace detail {

inline double column_statistic(const Eigen::VectorXd& col, Statistic stat) {
  if (stat == Statistic::kMean) return col.mean();
  const double m = col.mean();
  if (col.size() < 2) return 0.0;
  return std::sqrt((col.array() - m).square().sum() / (col.size() - 1));
}

}  // namespace detail

/// Per-column similarity of a summary statistic, scaled by the original
/// column's range and clamped to [0, 1]; averaged over columns. Zero-range
/// columns score 1 when the statistics agree and 0 otherwise.
inline double statistic_similarity(const Eigen::MatrixXd& original,
                                   const Eigen::MatrixXd& synthetic, Statistic stat) {
  if (original.cols() != synthetic.cols()) throw SizeMismatch("column count mismatch");
  const Eigen::Index p = original.cols();
  double total = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double so = detail::column_statistic(original.col(j), stat);
    const double ss = detail::column_statistic(synthetic.col(j), stat);
    const double range = original.col(j).maxCoeff() - original.col(j).minCoeff();
    if (range == 0.0) {
      total += (so == ss) ? 1.0 : 0.0;
    } else {
      total += std::max(0.0, 1.0 - std::abs(so - ss) / range);
    }
  }
  return total / static_cast<double>(p);
}

/// Complement of the two-sample Kolmogorov-Smirnov statistic per column,
/// averaged over columns. The supremum is evaluated over the pooled
/// sample, where the step functions attain their extremes.
inline double ks_complement(const Eigen::MatrixXd& original, const Eigen::MatrixXd& synthetic) {
  if (original.cols() != synthetic.cols()) throw SizeMismatch("column count mismatch");
  const Eigen::Index p = original.cols();
  double total = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> a(original.col(j).data(), original.col(j).data() + original.rows());
    std::vector<double> b(synthetic.col(j).data(), synthetic.col(j).data() + synthetic.rows());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> pooled;
    pooled.reserve(a.size() + b.size());
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    double sup = 0.0;
    for (double x : pooled) {
      const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) /
                        static_cast<double>(a.size());
      const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) /
                        static_cast<double>(b.size());
      sup = std::max(sup, std::abs(fa - fb));
    }
    total += 1.0 - sup;
  }
  return total / static_cast<double>(p);
}

/// Local cloaking of each original row: how many synthetic rows sit
/// strictly closer to it than its own synthetic counterpart.
inline std::vector<int> local_cloaking(const Eigen::MatrixXd& original,
                                       const Eigen::MatrixXd& synthetic) {
  if (original.rows() != synthetic.rows() || original.cols() != synthetic.cols()) {
    throw ShapeMismatch("local cloaking needs row-paired matrices of one shape");
  }
  const Eigen::Index n = original.rows();
  std::vector<int> lc(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double own = (original.row(i) - synthetic.row(i)).norm();
    for (Eigen::Index j = 0; j < n; ++j) {
      if ((original.row(i) - synthetic.row(j)).norm() < own) ++lc[i];
    }
  }
  return lc;
}

/// Fraction of subjects with nonzero local cloaking.
inline double hidden_rate(const std::vector<int>& lc) {
  if (lc.empty()) return 0.0;
  const auto nonzero = std::count_if(lc.begin(), lc.end(), [](int v) { return v > 0; });
  return static_cast<double>(nonzero) / static_cast<double>(lc.size());
}

/// Consolidated fidelity/privacy report. Pair-dependent metrics (RV, local
/// cloaking, hidden rate) are present only for row-paired synthesizers.
struct MetricReport {
  int k_min = 1;
  int k_max = 1;
  std::vector<double> frobenius;  // per k, index k - k_min
  double rho_mean = 0.0;
  double rho_sd = 0.0;
  double rho_distr = 0.0;
  bool paired = false;
  std::optional<double> rv;
  std::optional<std::vector<int>> cloaking;
  std::optional<double> mean_local_cloaking;
  std::optional<double> hidden_rate_value;
};

/// Runs the full metric battery on two score matrices. Frobenius distances
/// use the identity permutation when rows are paired and the 2-swap
/// heuristic otherwise.
inline MetricReport evaluate(const Eigen::MatrixXd& original, const Eigen::MatrixXd& synthetic,
                             bool paired, int k_min = 1, int k_max = 0) {
  if (original.rows() != synthetic.rows()) throw SizeMismatch("evaluate needs matching row counts");
  const Eigen::Index n = original.rows();
  if (k_max <= 0) k_max = static_cast<int>(n) - 1;
  if (k_min < 1 || k_max > n - 1 || k_min > k_max) throw InvalidK("invalid k range");

  MetricReport report;
  report.paired = paired;
  report.k_min = k_min;
  report.k_max = k_max;
  report.rho_mean = statistic_similarity(original, synthetic, Statistic::kMean);
  report.rho_sd = statistic_similarity(original, synthetic, Statistic::kSd);
  report.rho_distr = ks_complement(original, synthetic);

  const FrobeniusMode mode = paired ? FrobeniusMode::kPaired : FrobeniusMode::kHeuristic;
  report.frobenius.reserve(k_max - k_min + 1);
  for (int k = k_min; k <= k_max; ++k) {
    report.frobenius.push_back(
        knng_frobenius(knn_graph(original, k), knn_graph(synthetic, k), mode));
  }

  if (paired) {
    report.rv = rv_coefficient(original, synthetic);
    const auto lc = local_cloaking(original, synthetic);
    report.mean_local_cloaking =
        std::accumulate(lc.begin(), lc.end(), 0.0) / static_cast<double>(lc.size());
    report.hidden_rate_value = hidden_rate(lc);
    report.cloaking = lc;
  }
  return report;
}

}  // namespace qtsynth
