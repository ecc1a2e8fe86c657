#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "qtsynth/copula.hpp"
#include "qtsynth/stats.hpp"

using namespace qtsynth;

TEST_CASE("normal quantile reference values") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.975) == Catch::Approx(1.959963984540054).margin(1e-12));
  CHECK(normal_quantile(0.995) == Catch::Approx(2.5758293035489004).margin(1e-12));
  CHECK(normal_quantile(0.01) == Catch::Approx(-2.3263478740408408).margin(1e-12));
  CHECK(normal_quantile(0.25) == -normal_quantile(0.75));
  // Tail values frozen from an independent implementation.
  CHECK(normal_quantile(1e-12) == Catch::Approx(-7.0344838253011313).margin(1e-12));
  CHECK(normal_quantile(1e-6) == Catch::Approx(-4.7534243088228987).margin(1e-12));
  CHECK(normal_quantile(1.0 - 1e-9) == Catch::Approx(5.9978070196016366).margin(1e-12));
  CHECK_THROWS_AS(normal_quantile(0.0), InvalidConfig);
  CHECK_THROWS_AS(normal_quantile(1.0), InvalidConfig);
}

TEST_CASE("normal quantile inverts the normal CDF") {
  for (double p = 1e-8; p < 1.0; p += 0.0097) {
    CHECK(normal_cdf(normal_quantile(p)) == Catch::Approx(p).margin(1e-12));
  }
}

TEST_CASE("empirical marginal CDF and quantile") {
  Eigen::VectorXd col(4);
  col << 3.0, 1.0, 2.0, 2.0;
  const EmpiricalMarginal m(col);
  CHECK(m.cdf(0.5) == 0.0);
  CHECK(m.cdf(1.0) == 0.25);
  CHECK(m.cdf(2.0) == 0.75);
  CHECK(m.cdf(2.5) == 0.75);
  CHECK(m.cdf(10.0) == 1.0);

  CHECK(m.quantile(0.1) == 1.0);
  CHECK(m.quantile(0.25) == 1.0);
  CHECK(m.quantile(0.26) == 2.0);
  CHECK(m.quantile(0.75) == 2.0);
  CHECK(m.quantile(0.76) == 3.0);
  CHECK(m.quantile(1.0) == 3.0);
}

TEST_CASE("single column copula is the identity") {
  Eigen::MatrixXd data(5, 1);
  data << 0.5, -1.0, 2.0, 0.1, 0.7;
  const CopulaModel model = fit_copula(data);
  REQUIRE(model.correlation.rows() == 1);
  CHECK(model.correlation(0, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(model.cholesky(0, 0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("rank-correlated columns produce high estimated correlation") {
  const int n = 500;
  Rng rng(2);
  Eigen::MatrixXd data(n, 2);
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    data(i, 0) = x;
    data(i, 1) = std::exp(x);  // monotone transform: perfect rank correlation
  }
  const CopulaModel model = fit_copula(data);
  CHECK(model.correlation(0, 1) > 0.95);
}

TEST_CASE("independent columns produce near-zero correlation") {
  const int n = 2000;
  Rng rng(3);
  Eigen::MatrixXd data(n, 2);
  for (int i = 0; i < n; ++i) {
    data(i, 0) = rng.uniform();
    data(i, 1) = rng.uniform();
  }
  const CopulaModel model = fit_copula(data);
  CHECK(std::abs(model.correlation(0, 1)) < 0.06);
}

TEST_CASE("cholesky factor reproduces the repaired correlation") {
  const int n = 300;
  Rng rng(8);
  Eigen::MatrixXd data(n, 3);
  for (int i = 0; i < n; ++i) {
    const double shared = rng.normal();
    data(i, 0) = shared + 0.3 * rng.normal();
    data(i, 1) = -shared + 0.5 * rng.normal();
    data(i, 2) = rng.normal();
  }
  const CopulaModel model = fit_copula(data);
  const Eigen::MatrixXd rebuilt = model.cholesky * model.cholesky.transpose();
  CHECK((rebuilt - model.correlation).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((model.correlation - model.correlation.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((model.correlation.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("synthetic values come from the observed sample") {
  Rng rng(4);
  Eigen::MatrixXd data(40, 2);
  for (int i = 0; i < 40; ++i) {
    data(i, 0) = rng.normal();
    data(i, 1) = rng.uniform() * 10.0;
  }
  const CopulaModel model = fit_copula(data);
  Rng sampler(99);
  const Eigen::MatrixXd out = sample_copula(model, 200, sampler);
  for (int j = 0; j < 2; ++j) {
    std::vector<double> observed(data.col(j).data(), data.col(j).data() + 40);
    std::sort(observed.begin(), observed.end());
    for (int i = 0; i < 200; ++i) {
      CHECK(std::binary_search(observed.begin(), observed.end(), out(i, j)));
    }
  }
}

TEST_CASE("synthetic marginal matches the original distribution") {
  const int n = 500, m = 10000;
  Rng rng(5);
  Eigen::MatrixXd data(n, 1);
  for (int i = 0; i < n; ++i) data(i, 0) = rng.normal();
  const CopulaModel model = fit_copula(data);
  Rng sampler(6);
  const Eigen::MatrixXd out = sample_copula(model, m, sampler);

  std::vector<double> a(data.col(0).data(), data.col(0).data() + n);
  std::vector<double> b(out.col(0).data(), out.col(0).data() + m);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double ks = 0.0;
  for (double x : a) {
    const double fa = (std::upper_bound(a.begin(), a.end(), x) - a.begin()) / double(n);
    const double fb = (std::upper_bound(b.begin(), b.end(), x) - b.begin()) / double(m);
    ks = std::max(ks, std::abs(fa - fb));
  }
  CHECK(ks < 0.05);
}

TEST_CASE("identity correlation yields uncorrelated output") {
  Rng rng(12);
  Eigen::MatrixXd data(400, 2);
  for (int i = 0; i < 400; ++i) {
    data(i, 0) = rng.normal();
    data(i, 1) = rng.normal() * 2.0 + 1.0;
  }
  CopulaModel model = fit_copula(data);
  model.correlation = Eigen::MatrixXd::Identity(2, 2);
  model.cholesky = Eigen::MatrixXd::Identity(2, 2);
  Rng sampler(13);
  const int m = 10000;
  const Eigen::MatrixXd out = sample_copula(model, m, sampler);
  const Eigen::ArrayXd x = out.col(0).array() - out.col(0).mean();
  const Eigen::ArrayXd y = out.col(1).array() - out.col(1).mean();
  const double r = (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
  CHECK(std::abs(r) < 0.05);
}

TEST_CASE("constant columns are resampled as constants") {
  Rng rng(14);
  Eigen::MatrixXd data(50, 3);
  for (int i = 0; i < 50; ++i) {
    data(i, 0) = rng.normal();
    data(i, 1) = 7.25;
    data(i, 2) = rng.uniform();
  }
  const CopulaModel model = fit_copula(data);
  CHECK(model.active == std::vector<int>{0, 2});
  Rng sampler(15);
  const Eigen::MatrixXd out = sample_copula(model, 20, sampler);
  CHECK((out.col(1).array() == 7.25).all());
}

TEST_CASE("copula sampling is deterministic under a fixed seed") {
  Rng rng(16);
  Eigen::MatrixXd data(60, 2);
  for (int i = 0; i < 60; ++i) {
    data(i, 0) = rng.normal();
    data(i, 1) = rng.normal() + 0.5 * data(i, 0);
  }
  const CopulaModel model = fit_copula(data);
  Rng s1(77), s2(77);
  const Eigen::MatrixXd a = sample_copula(model, 100, s1);
  const Eigen::MatrixXd b = sample_copula(model, 100, s2);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("copula rejects degenerate input") {
  CHECK_THROWS_AS(fit_copula(Eigen::MatrixXd(1, 2)), InvalidConfig);
  CHECK_THROWS_AS(fit_copula(Eigen::MatrixXd(5, 0)), InvalidConfig);
}
