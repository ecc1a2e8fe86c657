#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtsynth/errors.hpp"
#include "qtsynth/mfpca.hpp"
#include "qtsynth/qts.hpp"
#include "qtsynth/rng.hpp"
#include "qtsynth/spline.hpp"

namespace qtsynth {

/// Neighbor weights: Dirichlet draws, or their expectations for exact
/// oracles in tests and reproducible debugging.
enum class WeightMode { kDirichlet, kDeterministic };

struct SynthesisConfig {
  int gamma = 2;        // neighbors averaged per subject
  int tau = 1;          // score columns used for the neighbor search
  double alpha0 = 5.0;  // total Dirichlet concentration
  std::uint64_t seed = 0;
  WeightMode mode = WeightMode::kDirichlet;

  void validate(Eigen::Index n) const {
    if (gamma < 1 || gamma > n - 1) {
      throw InvalidConfig("gamma must lie in [1, n-1], got " + std::to_string(gamma));
    }
    if (tau < 1 || tau > n - 1) {
      throw InvalidConfig("tau must lie in [1, n-1], got " + std::to_string(tau));
    }
    if (!(alpha0 > 0.0)) throw InvalidConfig("alpha0 must be positive");
  }
};

/// Per-subject neighbor indices (never the subject itself) and the
/// matching distances, ascending.
struct NeighborSet {
  std::vector<int> indices;
  Eigen::VectorXd distances;
};

namespace detail {

inline Eigen::MatrixXd pairwise_distances(const ScoreMatrix& scores, int tau) {
  const Eigen::Index n = scores.rows();
  const auto block = scores.leftCols(tau);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (block.row(i) - block.row(j)).norm();
    }
  }
  return d;
}

/// Median of the positive off-diagonal entries; zero when none exist.
inline double median_positive_distance(const Eigen::MatrixXd& d) {
  std::vector<double> vals;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
      if (d(i, j) > 0.0) vals.push_back(d(i, j));
    }
  }
  if (vals.empty()) return 0.0;
  std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
  return vals[vals.size() / 2];
}

inline std::vector<NeighborSet> knn_from_distances(const Eigen::MatrixXd& d, int gamma) {
  const Eigen::Index n = d.rows();
  std::vector<NeighborSet> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<int> order;
    order.reserve(n - 1);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) order.push_back(static_cast<int>(j));
    }
    // Ties resolve to the smaller index.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (d(i, a) != d(i, b)) return d(i, a) < d(i, b);
      return a < b;
    });
    order.resize(gamma);
    out[i].indices = order;
    out[i].distances = Eigen::VectorXd(gamma);
    for (int j = 0; j < gamma; ++j) out[i].distances[j] = d(i, order[j]);
  }
  return out;
}

}  // namespace detail

/// For each score row, the gamma nearest other rows by Euclidean distance
/// on the first tau columns. Returned distances are the raw ones; zeros
/// from duplicate rows are kept and floored only where inverses are taken.
inline std::vector<NeighborSet> knn_search(const ScoreMatrix& scores, int tau, int gamma) {
  const Eigen::Index n = scores.rows();
  if (gamma < 1 || gamma > n - 1) throw InvalidConfig("gamma must lie in [1, n-1]");
  if (tau < 1 || tau > scores.cols()) throw InvalidConfig("tau must lie in [1, #columns]");
  return detail::knn_from_distances(detail::pairwise_distances(scores, tau), gamma);
}

/// Distance-driven Dirichlet concentrations:
/// alpha = alpha0 / sum_j(d_j^-1) * d^-1, so closer neighbors carry more
/// mass and the entries sum to alpha0 exactly. The last entry is computed
/// by subtraction; with ascending distances (the NeighborSet invariant) it
/// carries the smallest share, the subtraction is exact by Sterbenz, and
/// the floating-point sum equals alpha0 bit for bit.
///
/// Nonpositive distances are floored; the caller passes the floor derived
/// from the global distance matrix, or lets it default to 1e-9 times the
/// median positive entry of d itself.
inline Eigen::VectorXd concentration_params(const Eigen::VectorXd& distances, double alpha0,
                                            double floor = -1.0) {
  if (!(alpha0 > 0.0)) throw InvalidConfig("alpha0 must be positive");
  const Eigen::Index g = distances.size();
  if (g == 0) throw InvalidConfig("empty distance vector");

  if (floor < 0.0) {
    std::vector<double> pos;
    for (Eigen::Index j = 0; j < g; ++j) {
      if (distances[j] > 0.0) pos.push_back(distances[j]);
    }
    if (pos.empty()) {
      floor = 1e-12;
    } else {
      std::nth_element(pos.begin(), pos.begin() + pos.size() / 2, pos.end());
      floor = 1e-9 * pos[pos.size() / 2];
    }
  }
  floor = std::max(floor, 1e-300);

  Eigen::VectorXd inv(g);
  for (Eigen::Index j = 0; j < g; ++j) inv[j] = 1.0 / std::max(distances[j], floor);
  const double total = inv.sum();

  Eigen::VectorXd alpha(g);
  double partial = 0.0;
  for (Eigen::Index j = 0; j + 1 < g; ++j) {
    alpha[j] = alpha0 * inv[j] / total;
    partial += alpha[j];
  }
  alpha[g - 1] = alpha0 - partial;
  if (!(alpha[g - 1] > 0.0)) alpha[g - 1] = alpha0 * inv[g - 1] / total;
  return alpha;
}

/// One weight vector on the gamma-simplex, w ~ Dir(alpha).
inline Eigen::VectorXd sample_weights(const Eigen::VectorXd& alpha, Rng& rng) {
  return rng.dirichlet(alpha);
}

/// Expected weights alpha / alpha0, summing to one exactly.
inline Eigen::VectorXd expected_weights(const Eigen::VectorXd& alpha) {
  const double alpha0 = alpha.sum();
  const Eigen::Index g = alpha.size();
  Eigen::VectorXd w(g);
  double partial = 0.0;
  for (Eigen::Index j = 0; j + 1 < g; ++j) {
    w[j] = alpha[j] / alpha0;
    partial += w[j];
  }
  w[g - 1] = std::max(0.0, 1.0 - partial);
  return w;
}

/// Convex combination of full score rows.
inline Eigen::RowVectorXd combine_scores(const ScoreMatrix& scores, const std::vector<int>& indices,
                                         const Eigen::VectorXd& weights) {
  Eigen::RowVectorXd row = weights[0] * scores.row(indices[0]);
  for (Eigen::Index j = 1; j < weights.size(); ++j) {
    row += weights[j] * scores.row(indices[j]);
  }
  return row;
}

/// Synthesizes one score row per original row: each subject's synthetic
/// scores are a Dirichlet-weighted average of its gamma nearest neighbors'
/// full rows, with neighbors found on the first tau columns.
inline ScoreMatrix synthesize_scores(const ScoreMatrix& scores, const SynthesisConfig& cfg,
                                     Rng& rng) {
  const Eigen::Index n = scores.rows();
  cfg.validate(n);
  if (cfg.tau > scores.cols()) throw InvalidConfig("tau exceeds score columns");

  const Eigen::MatrixXd dist = detail::pairwise_distances(scores, cfg.tau);
  const auto neighbors = detail::knn_from_distances(dist, cfg.gamma);
  // Duplicate subjects give zero distances; the weight rule takes inverses, so
  // distances are floored relative to the typical spacing.
  const double median = detail::median_positive_distance(dist);
  const double floor = median > 0.0 ? 1e-9 * median : 1e-12;

  ScoreMatrix synthetic(n, scores.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd alpha = concentration_params(neighbors[i].distances, cfg.alpha0, floor);
    const Eigen::VectorXd w =
        cfg.mode == WeightMode::kDeterministic ? expected_weights(alpha) : sample_weights(alpha, rng);
    synthetic.row(i) = combine_scores(scores, neighbors[i].indices, w);
  }
  return synthetic;
}

/// d_min: smallest distance between any two synthetic rows or between any
/// original/synthetic pair (including matching indices). d_max: largest
/// distance between two synthetic rows.
inline std::pair<double, double> score_distance_stats(const ScoreMatrix& original,
                                                      const ScoreMatrix& synthetic) {
  if (original.rows() != synthetic.rows() || original.cols() != synthetic.cols()) {
    throw ShapeMismatch("score matrices differ in shape");
  }
  const Eigen::Index n = original.rows();
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (synthetic.row(i) - synthetic.row(j)).norm();
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      dmin = std::min(dmin, (original.row(i) - synthetic.row(j)).norm());
    }
  }
  return {dmin, dmax};
}

/// Model, mean series, and scores from one pass over a sample.
struct FittedPipeline {
  Qts mean_qts;
  MfpcaModel model;
  ScoreMatrix scores;
};

/// Shared front half of every command: center, project to the tangent
/// space, interpolate, fit the functional PCA.
inline FittedPipeline fit_pipeline(const QtsSample& sample) {
  sample.validate();
  FittedPipeline fitted;
  auto [mean, centered] = center_sample(sample);
  fitted.mean_qts = std::move(mean);
  const auto logs = to_log_qts(centered);
  const auto fds = fit_splines(logs, sample.grid);
  auto [model, scores] = mfpca(fds);
  fitted.model = std::move(model);
  fitted.scores = std::move(scores);
  return fitted;
}

/// Everything the end-to-end synthesis produces, kept for evaluation.
struct SynthesisResult {
  QtsSample synthetic;
  Qts mean_qts;
  MfpcaModel model;
  ScoreMatrix original_scores;
  ScoreMatrix synthetic_scores;
};

/// End-to-end synthesis from a prefitted pipeline: synthesize scores per
/// subject and rebuild unit series on the original grid.
inline SynthesisResult synthesize_sample(const QtsSample& sample, const SynthesisConfig& cfg,
                                         FittedPipeline fitted) {
  sample.validate();
  cfg.validate(static_cast<Eigen::Index>(sample.n_subjects()));

  SynthesisResult result;
  result.mean_qts = std::move(fitted.mean_qts);
  result.model = std::move(fitted.model);
  result.original_scores = std::move(fitted.scores);

  Rng rng(derive_seed(cfg.seed, 0x5947));
  result.synthetic_scores = synthesize_scores(result.original_scores, cfg, rng);

  result.synthetic.grid = sample.grid;
  result.synthetic.ids.reserve(sample.n_subjects());
  for (const auto& id : sample.ids) result.synthetic.ids.push_back(id + "_syn");
  result.synthetic.series.reserve(sample.n_subjects());
  for (Eigen::Index i = 0; i < result.synthetic_scores.rows(); ++i) {
    const Qts q = reconstruct_qts(result.synthetic_scores.row(i).transpose(), result.model,
                                  result.mean_qts, sample.grid);
    result.synthetic.series.push_back(q.values);
  }
  return result;
}

/// End-to-end synthesis, fitting the pipeline first.
inline SynthesisResult synthesize_sample(const QtsSample& sample, const SynthesisConfig& cfg) {
  return synthesize_sample(sample, cfg, fit_pipeline(sample));
}

/// Default neighbor count: a tenth of the sample, at least 2.
inline int default_gamma(Eigen::Index n) {
  return std::max(2, static_cast<int>(std::lround(static_cast<double>(n) / 10.0)));
}

/// Default search depth: smallest component count explaining 95% inertia.
inline int default_tau(const MfpcaModel& model) {
  const Eigen::VectorXd shares = model.inertia_shares();
  double cumulative = 0.0;
  for (Eigen::Index k = 0; k < shares.size(); ++k) {
    cumulative += shares[k];
    if (cumulative >= 0.95) return static_cast<int>(k) + 1;
  }
  return std::max<int>(1, static_cast<int>(shares.size()));
}

}  // namespace qtsynth
