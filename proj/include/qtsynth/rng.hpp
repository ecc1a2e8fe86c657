#pragma once

#include <cfloat>
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace qtsynth {

/// One round of the splitmix64 output function.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and two counters.
/// The derivation is order-free: tasks can run in any order and still see
/// the same per-task stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(master ^ mix64(a + 0x632be59bd9b4e019ULL) ^ mix64(b + 0x9e6c63d0876a9a62ULL));
}

/// Deterministic random source. All variate transforms are implemented here
/// rather than through std distributions, whose output is
/// implementation-defined; identical seeds give identical draws on every
/// platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw strictly inside (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Gamma(shape, 1) via Marsaglia-Tsang squeeze, with the usual power
  /// boost for shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Dirichlet draw from normalized Gamma variates. The last component is
  /// set to one minus the rest so the vector sums to one exactly; draws
  /// that underflow to zero are floored at DBL_MIN to keep the normalizing
  /// sum positive.
  Eigen::VectorXd dirichlet(const Eigen::VectorXd& alpha) {
    const Eigen::Index k = alpha.size();
    Eigen::VectorXd g(k);
    for (Eigen::Index j = 0; j < k; ++j) g[j] = std::max(gamma(alpha[j]), DBL_MIN);
    const double total = g.sum();
    Eigen::VectorXd w(k);
    double partial = 0.0;
    for (Eigen::Index j = 0; j + 1 < k; ++j) {
      w[j] = g[j] / total;
      partial += w[j];
    }
    w[k - 1] = std::max(0.0, 1.0 - partial);
    return w;
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

}  // namespace qtsynth
