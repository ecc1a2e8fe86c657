#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "qtsynth/io.hpp"
#include "qtsynth/synthesis.hpp"
#include "qtsynth/tuning.hpp"

using namespace qtsynth;

namespace {

ScoreMatrix column_matrix(const std::vector<double>& values) {
  ScoreMatrix m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
  return m;
}

}  // namespace

TEST_CASE("knn search on collinear scores") {
  const ScoreMatrix f = column_matrix({0.0, 1.0, 3.0});
  const auto nb = knn_search(f, 1, 1);
  REQUIRE(nb.size() == 3);
  CHECK(nb[0].indices == std::vector<int>{1});
  CHECK(nb[1].indices == std::vector<int>{0});
  CHECK(nb[2].indices == std::vector<int>{1});
  CHECK(nb[0].distances[0] == 1.0);
  CHECK(nb[1].distances[0] == 1.0);
  CHECK(nb[2].distances[0] == 2.0);
}

TEST_CASE("knn search with gamma = n-1 returns everyone else") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  ScoreMatrix f(6, 3);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 3; ++j) f(i, j) = nd(gen);
  }
  const auto nb = knn_search(f, 2, 5);
  for (int i = 0; i < 6; ++i) {
    CHECK(nb[i].indices.size() == 5);
    for (int idx : nb[i].indices) CHECK(idx != i);
    for (int j = 1; j < 5; ++j) CHECK(nb[i].distances[j] >= nb[i].distances[j - 1]);
  }
}

TEST_CASE("knn search keeps zero distances and breaks ties by index") {
  const ScoreMatrix f = column_matrix({2.0, 2.0, 2.0, 5.0});
  const auto nb = knn_search(f, 1, 2);
  CHECK(nb[0].indices == std::vector<int>{1, 2});
  CHECK(nb[0].distances[0] == 0.0);
  CHECK(nb[1].indices == std::vector<int>{0, 2});
  CHECK(nb[3].indices == std::vector<int>{0, 1});
}

TEST_CASE("knn search validates its configuration") {
  const ScoreMatrix f = column_matrix({0.0, 1.0, 3.0});
  CHECK_THROWS_AS(knn_search(f, 1, 3), InvalidConfig);
  CHECK_THROWS_AS(knn_search(f, 2, 1), InvalidConfig);
  CHECK_THROWS_AS(knn_search(f, 0, 1), InvalidConfig);
}

TEST_CASE("concentration parameters follow the inverse-distance rule") {
  Eigen::VectorXd d(2);
  d << 1.0, 1.0;
  Eigen::VectorXd a = concentration_params(d, 4.0);
  CHECK(a[0] == Catch::Approx(2.0).margin(1e-15));
  CHECK(a[1] == Catch::Approx(2.0).margin(1e-15));

  d << 1.0, 3.0;
  a = concentration_params(d, 4.0);
  CHECK(a[0] == Catch::Approx(3.0).margin(1e-14));
  CHECK(a[1] == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("concentration parameters sum to alpha0 exactly for sorted distances") {
  // Ascending distances (the NeighborSet invariant) make the subtraction
  // that pins the sum exact; the floating-point total is alpha0 bit for
  // bit.
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> ud(1e-6, 10.0);
  for (int rep = 0; rep < 2000; ++rep) {
    const int g = 1 + static_cast<int>(gen() % 8);
    std::vector<double> dv(g);
    for (int j = 0; j < g; ++j) dv[j] = ud(gen);
    std::sort(dv.begin(), dv.end());
    Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(dv.data(), g);
    const double alpha0 = ud(gen);
    const Eigen::VectorXd a = concentration_params(d, alpha0);
    CHECK(a.minCoeff() > 0.0);
    double sum = 0.0;
    for (int j = 0; j < g; ++j) sum += a[j];
    CHECK(sum == alpha0);
  }
}

TEST_CASE("concentration parameters sum to alpha0 for any distance order") {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> ud(1e-6, 10.0);
  for (int rep = 0; rep < 2000; ++rep) {
    const int g = 1 + static_cast<int>(gen() % 8);
    Eigen::VectorXd d(g);
    for (int j = 0; j < g; ++j) d[j] = ud(gen);
    const double alpha0 = ud(gen);
    const Eigen::VectorXd a = concentration_params(d, alpha0);
    CHECK(a.minCoeff() > 0.0);
    CHECK(a.sum() == Catch::Approx(alpha0).margin(1e-12));
  }
}

TEST_CASE("zero distances are floored, not fatal") {
  Eigen::VectorXd d(3);
  d << 0.0, 1.0, 2.0;
  const Eigen::VectorXd a = concentration_params(d, 6.0);
  CHECK(a.minCoeff() > 0.0);
  CHECK(a.sum() == Catch::Approx(6.0).margin(1e-12));
  // The duplicate neighbor absorbs almost all mass.
  CHECK(a[0] / 6.0 > 0.999);
}

TEST_CASE("gamma = 1 weight is exactly one") {
  Eigen::VectorXd alpha(1);
  alpha << 3.7;
  Rng rng(1);
  const Eigen::VectorXd w = sample_weights(alpha, rng);
  CHECK(w.size() == 1);
  CHECK(w[0] == 1.0);
}

TEST_CASE("dirichlet weights have the expected mean") {
  Eigen::VectorXd alpha(2);
  alpha << 2.0, 2.0;
  Rng rng(77);
  double sum0 = 0.0;
  const int reps = 100000;
  for (int r = 0; r < reps; ++r) sum0 += sample_weights(alpha, rng)[0];
  CHECK(sum0 / reps == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("large alpha0 concentrates the weights") {
  Eigen::VectorXd d(2);
  d << 1.0, 3.0;
  const Eigen::VectorXd alpha = concentration_params(d, 1e6);
  Rng rng(5);
  double sum = 0.0, sum_sq = 0.0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    const double w0 = sample_weights(alpha, rng)[0];
    sum += w0;
    sum_sq += w0 * w0;
  }
  const double mean = sum / reps;
  const double sd = std::sqrt(sum_sq / reps - mean * mean);
  CHECK(mean == Catch::Approx(0.75).margin(0.001));
  CHECK(sd < 0.001);
}

TEST_CASE("weights sum to one across seeds") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> ud(0.1, 8.0);
  for (int rep = 0; rep < 300; ++rep) {
    const int g = 2 + static_cast<int>(gen() % 5);
    Eigen::VectorXd alpha(g);
    for (int j = 0; j < g; ++j) alpha[j] = ud(gen);
    Rng rng(rep);
    const Eigen::VectorXd w = sample_weights(alpha, rng);
    CHECK(w.minCoeff() >= 0.0);
    double sum = 0.0;
    for (int j = 0; j < g; ++j) sum += w[j];
    CHECK(sum == 1.0);
  }
}

TEST_CASE("equidistant neighbors in deterministic mode give the midpoint") {
  ScoreMatrix f(4, 3);
  f << 0.0, 5.0, -2.0,
      1.0, 6.0, 0.0,
      -1.0, 2.0, 4.0,
      10.0, -3.0, 1.0;
  SynthesisConfig cfg;
  cfg.gamma = 2;
  cfg.tau = 1;
  cfg.alpha0 = 4.0;
  cfg.mode = WeightMode::kDeterministic;
  Rng rng(0);
  const ScoreMatrix syn = synthesize_scores(f, cfg, rng);
  // Subject 0's neighbors on column 1 are rows 1 and 2, both at distance 1.
  const Eigen::RowVectorXd expected = 0.5 * (f.row(1) + f.row(2));
  CHECK((syn.row(0) - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gamma = 1 copies the nearest neighbor's full row bit-exactly") {
  std::mt19937_64 gen(15);
  std::normal_distribution<double> nd;
  ScoreMatrix f(7, 6);
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 6; ++j) f(i, j) = nd(gen);
  }
  for (const auto mode : {WeightMode::kDirichlet, WeightMode::kDeterministic}) {
    SynthesisConfig cfg;
    cfg.gamma = 1;
    cfg.tau = 3;
    cfg.alpha0 = 5.0;
    cfg.mode = mode;
    Rng rng(42);
    const ScoreMatrix syn = synthesize_scores(f, cfg, rng);
    const auto nb = knn_search(f, 3, 1);
    for (int i = 0; i < 7; ++i) {
      for (int j = 0; j < 6; ++j) {
        CHECK(syn(i, j) == f(nb[i].indices[0], j));
      }
    }
  }
}

TEST_CASE("synthetic rows stay in the neighbors' coordinate hull") {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> nd;
  ScoreMatrix f(9, 5);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 5; ++j) f(i, j) = 3.0 * nd(gen);
  }
  SynthesisConfig cfg;
  cfg.gamma = 3;
  cfg.tau = 2;
  cfg.alpha0 = 2.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const ScoreMatrix syn = synthesize_scores(f, cfg, rng);
    const auto nb = knn_search(f, 2, 3);
    for (int i = 0; i < 9; ++i) {
      for (int j = 0; j < 5; ++j) {
        double lo = f(nb[i].indices[0], j), hi = lo;
        for (int m = 1; m < 3; ++m) {
          lo = std::min(lo, f(nb[i].indices[m], j));
          hi = std::max(hi, f(nb[i].indices[m], j));
        }
        const double slack = 1e-12 * (std::abs(lo) + std::abs(hi) + 1.0);
        CHECK(syn(i, j) >= lo - slack);
        CHECK(syn(i, j) <= hi + slack);
      }
    }
  }
}

TEST_CASE("identical seeds give bit-identical synthetic scores") {
  std::mt19937_64 gen(123);
  std::normal_distribution<double> nd;
  ScoreMatrix f(8, 4);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 4; ++j) f(i, j) = nd(gen);
  }
  SynthesisConfig cfg;
  cfg.gamma = 3;
  cfg.tau = 4;
  cfg.alpha0 = 1.5;
  Rng rng1(999), rng2(999);
  const ScoreMatrix a = synthesize_scores(f, cfg, rng1);
  const ScoreMatrix b = synthesize_scores(f, cfg, rng2);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("score distance stats reference cases") {
  ScoreMatrix f(2, 2);
  f << 100.0, 100.0, -100.0, -100.0;
  ScoreMatrix syn(2, 2);
  syn << 0.0, 0.0, 3.0, 4.0;
  const auto [dmin, dmax] = score_distance_stats(f, syn);
  CHECK(dmax == Catch::Approx(5.0).margin(1e-12));
  CHECK(dmin == Catch::Approx(5.0).margin(1e-12));  // the two synthetic rows

  const auto [dmin2, dmax2] = score_distance_stats(f, f);
  CHECK(dmin2 == 0.0);  // original-synthetic self pairs
  CHECK(dmin2 <= dmax2);
}

TEST_CASE("end-to-end synthesis contracts on the demo fixture") {
  const QtsSample sample = generate_demo_sample(12, 7);
  SynthesisConfig cfg;
  cfg.gamma = 2;
  cfg.tau = 3;
  cfg.alpha0 = 5.0;
  cfg.seed = 11;
  const SynthesisResult result = synthesize_sample(sample, cfg);

  CHECK(result.synthetic.n_subjects() == sample.n_subjects());
  CHECK(result.synthetic.grid == sample.grid);
  CHECK(result.original_scores.rows() == 12);
  CHECK(result.original_scores.cols() == 11);
  CHECK(result.synthetic_scores.rows() == 12);
  for (const auto& series : result.synthetic.series) {
    for (const auto& q : series) {
      CHECK(std::abs(q.w() * q.w() + q.x() * q.x() + q.y() * q.y() + q.z() * q.z() - 1.0) < 1e-9);
      CHECK(q.w() >= 0.0);
    }
  }
}

TEST_CASE("gamma = 1 deterministic synthesis reproduces neighbor reconstructions") {
  const QtsSample sample = generate_demo_sample(8, 3);
  SynthesisConfig cfg;
  cfg.gamma = 1;
  cfg.tau = 2;
  cfg.alpha0 = 5.0;
  cfg.mode = WeightMode::kDeterministic;
  const SynthesisResult result = synthesize_sample(sample, cfg);

  const auto nb = knn_search(result.original_scores, cfg.tau, 1);
  for (std::size_t i = 0; i < sample.n_subjects(); ++i) {
    const Qts expected = reconstruct_qts(result.original_scores.row(nb[i].indices[0]).transpose(),
                                         result.model, result.mean_qts, sample.grid);
    for (std::size_t k = 0; k < sample.n_points(); ++k) {
      CHECK(geodesic_distance(expected.values[k], result.synthetic.series[i][k]) < 1e-12);
    }
  }
}

TEST_CASE("synthetic rows with gamma >= 2 never coincide with originals") {
  const QtsSample sample = generate_demo_sample(10, 21);
  const auto fitted = fit_pipeline(sample);
  SynthesisConfig cfg;
  cfg.gamma = 2;
  cfg.tau = 3;
  cfg.alpha0 = 5.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const ScoreMatrix syn = synthesize_scores(fitted.scores, cfg, rng);
    double min_cross = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        min_cross = std::min(min_cross, (fitted.scores.row(i) - syn.row(j)).norm());
      }
    }
    CHECK(min_cross > 0.0);
  }
}

TEST_CASE("tuning report covers the grid and sorts by mean dmax") {
  const QtsSample sample = generate_demo_sample(10, 5);
  TuningGrid grid;
  grid.alpha0_values = {1.0, 5.0};
  grid.gamma_values = {2, 3};
  grid.tau_values = {2};
  grid.repetitions = 10;
  grid.dmin_threshold_fraction = 0.0;
  const TuningReport report = tune_hyperparameters(sample, grid);

  REQUIRE(report.rows.size() == 4);
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    CHECK(report.rows[i].mean_dmax <= report.rows[i - 1].mean_dmax);
  }
  for (const auto& row : report.rows) {
    CHECK(row.pass);
    CHECK(row.mean_dmin <= row.mean_dmax);
  }
  CHECK(report.dmin_threshold == 0.0);
}

TEST_CASE("raising the dmin fraction never enlarges the pass set") {
  const QtsSample sample = generate_demo_sample(10, 5);
  TuningGrid grid;
  grid.alpha0_values = {0.5, 5.0, 25.0};
  grid.gamma_values = {2, 3};
  grid.tau_values = {2, 4};
  grid.repetitions = 10;

  grid.dmin_threshold_fraction = 0.0;
  const auto loose = tune_hyperparameters(sample, grid);
  grid.dmin_threshold_fraction = 0.10;
  const auto tight = tune_hyperparameters(sample, grid);

  const auto count_pass = [](const TuningReport& r) {
    std::size_t c = 0;
    for (const auto& row : r.rows) c += row.pass ? 1 : 0;
    return c;
  };
  CHECK(count_pass(tight) <= count_pass(loose));

  // Same combinations pass or fail regardless of report ordering.
  for (const auto& row : tight.rows) {
    if (row.pass) {
      CHECK(row.mean_dmin >= tight.dmin_threshold);
    } else {
      CHECK(row.mean_dmin < tight.dmin_threshold);
    }
  }
}

TEST_CASE("tuning validates its inputs") {
  const QtsSample sample = generate_demo_sample(6, 1);
  TuningGrid grid;
  grid.repetitions = 5;
  CHECK_THROWS_AS(tune_hyperparameters(sample, grid), InvalidConfig);

  TuningGrid empty;
  empty.alpha0_values.clear();
  empty.alpha0_values.shrink_to_fit();
  // Explicitly cleared axis, no default requested.
  empty.gamma_values = {2};
  empty.tau_values = {1};
  // alpha axis empty -> EmptyGrid
  CHECK_THROWS_AS(tune_hyperparameters(sample, empty), EmptyGrid);

  TuningGrid big;
  big.gamma_values = {7};
  big.tau_values = {1};
  CHECK_THROWS_AS(tune_hyperparameters(sample, big), InvalidConfig);
}

TEST_CASE("default parameter helpers") {
  CHECK(default_gamma(27) == 3);
  CHECK(default_gamma(30) == 3);
  CHECK(default_gamma(64) == 6);
  CHECK(default_gamma(5) == 2);

  const QtsSample sample = generate_demo_sample(20, 9);
  const auto fitted = fit_pipeline(sample);
  const int tau = default_tau(fitted.model);
  CHECK(tau >= 1);
  CHECK(tau <= 19);
  const Eigen::VectorXd shares = fitted.model.inertia_shares();
  double cum = 0.0;
  for (int k = 0; k < tau; ++k) cum += shares[k];
  CHECK(cum >= 0.95);
}
