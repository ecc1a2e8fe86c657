#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtsynth/errors.hpp"

namespace qtsynth {

/// Element of the Lie algebra of the unit-quaternion group, identified
/// with R^3.
using TangentVector = Eigen::Vector3d;

/// Unit quaternion q = w + x i + y j + z k with ||q|| = 1.
///
/// Construction renormalizes inputs whose norm deviates from 1 by at most
/// 1e-6 (sensor CSVs carry float rounding) and rejects larger deviations.
class UnitQuaternion {
public:
  /// Norm deviation accepted and silently repaired at construction.
  static constexpr double kNormTolerance = 1e-6;

  UnitQuaternion() : w_(1.0), x_(0.0), y_(0.0), z_(0.0) {}

  UnitQuaternion(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {
    const double n = std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_);
    if (std::abs(n - 1.0) > kNormTolerance) {
      throw NormViolation("quaternion norm " + std::to_string(n) + " deviates from 1 by more than " +
                          std::to_string(kNormTolerance));
    }
    w_ /= n;
    x_ /= n;
    y_ /= n;
    z_ /= n;
  }

  static UnitQuaternion identity() { return UnitQuaternion(); }

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  Eigen::Vector3d vec() const { return {x_, y_, z_}; }

  /// Conjugate; equals the group inverse for unit norm.
  UnitQuaternion conjugate() const {
    UnitQuaternion q;
    q.w_ = w_;
    q.x_ = -x_;
    q.y_ = -y_;
    q.z_ = -z_;
    return q;
  }

  UnitQuaternion negated() const {
    UnitQuaternion q;
    q.w_ = -w_;
    q.x_ = -x_;
    q.y_ = -y_;
    q.z_ = -z_;
    return q;
  }

  /// Hamilton product.
  UnitQuaternion operator*(const UnitQuaternion& r) const {
    UnitQuaternion q;
    q.w_ = w_ * r.w_ - x_ * r.x_ - y_ * r.y_ - z_ * r.z_;
    q.x_ = w_ * r.x_ + x_ * r.w_ + y_ * r.z_ - z_ * r.y_;
    q.y_ = w_ * r.y_ - x_ * r.z_ + y_ * r.w_ + z_ * r.x_;
    q.z_ = w_ * r.z_ + x_ * r.y_ - y_ * r.x_ + z_ * r.w_;
    return q;
  }

  double dot(const UnitQuaternion& r) const {
    return w_ * r.w_ + x_ * r.x_ + y_ * r.y_ + z_ * r.z_;
  }

  /// Flips sign so the scalar part is nonnegative. The encoded rotation is
  /// unchanged (q and -q are the same rotation).
  UnitQuaternion canonical() const { return w_ < 0.0 ? negated() : *this; }

private:
  double w_, x_, y_, z_;
};

namespace detail {

/// sin(t)/t with a series branch so the limit at zero is exact.
inline double sinc(double t) {
  if (std::abs(t) < 1e-4) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

}  // namespace detail

/// Logarithmic map into the Lie algebra at the identity.
///
/// Returns arccos(q_w)/||(q_x,q_y,q_z)|| * (q_x,q_y,q_z). The angle is
/// evaluated as atan2(||vec||, q_w), which agrees with arccos(q_w) on the
/// unit sphere but stays accurate near the identity. Throws AntipodalInput
/// at the cut locus (q_w <= -1 + 1e-12), where the map is undefined.
inline TangentVector quat_log(const UnitQuaternion& q) {
  if (q.w() <= -1.0 + 1e-12) {
    throw AntipodalInput("logarithmic map undefined at the antipode of the identity");
  }
  const Eigen::Vector3d v = q.vec();
  const double vn = v.norm();
  if (vn < 1e-12) return TangentVector::Zero();
  const double angle = std::atan2(vn, q.w());
  return (angle / vn) * v;
}

/// Exponential map from the Lie algebra back to the group:
/// cos||v|| + sin||v||/||v|| * (v_x i + v_y j + v_z k).
inline UnitQuaternion quat_exp(const TangentVector& v) {
  const double t = v.norm();
  const double s = detail::sinc(t);
  return UnitQuaternion(std::cos(t), s * v.x(), s * v.y(), s * v.z());
}

/// Bi-invariant geodesic distance d(q1, q2) = ||log(q1^-1 q2)||. The
/// relative rotation is sign-aligned (w >= 0) before taking the log so the
/// double cover cannot inflate the distance.
inline double geodesic_distance(const UnitQuaternion& q1, const UnitQuaternion& q2) {
  const UnitQuaternion r = (q1.conjugate() * q2).canonical();
  const double vn = r.vec().norm();
  if (vn < 1e-12) return 0.0;
  return std::atan2(vn, r.w());
}

/// Flips each quaternion whose 4-vector dot product with the reference is
/// negative. Rotations are unchanged.
inline std::vector<UnitQuaternion> sign_align(std::span<const UnitQuaternion> qs,
                                              const UnitQuaternion& reference) {
  std::vector<UnitQuaternion> out;
  out.reserve(qs.size());
  for (const auto& q : qs) {
    out.push_back(q.dot(reference) < 0.0 ? q.negated() : q);
  }
  return out;
}

/// Frechet mean of unit quaternions: the minimizer of the summed squared
/// geodesic distances, found by fixed-point tangent averaging.
///
/// The input must already be sign-aligned to a common hemisphere. Starts
/// at the first point and iterates m <- m * exp(mean_i log(m^-1 q_i))
/// until the tangent mean norm drops below 1e-10; throws NoConvergence
/// after 200 iterations. The result carries w >= 0.
inline UnitQuaternion frechet_mean(std::span<const UnitQuaternion> qs) {
  if (qs.empty()) throw InvalidConfig("frechet_mean needs at least one point");
  constexpr int kMaxIterations = 200;
  constexpr double kTolerance = 1e-10;
  UnitQuaternion m = qs.front();
  for (int it = 0; it < kMaxIterations; ++it) {
    TangentVector mean = TangentVector::Zero();
    const UnitQuaternion minv = m.conjugate();
    for (const auto& q : qs) {
      mean += quat_log((minv * q).canonical());
    }
    mean /= static_cast<double>(qs.size());
    if (mean.norm() < kTolerance) {
      return m.canonical();
    }
    m = m * quat_exp(mean);
  }
  throw NoConvergence("frechet_mean did not converge within 200 iterations");
}

}  // namespace qtsynth
