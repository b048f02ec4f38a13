#pragma once

#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gmlpnp/error.hpp"

namespace gmlpnp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Axis-angle vector (axis times angle, radians); element of so(3).
using AxisAngle3 = Vec3;
/// Object point in world coordinates.
using ObjectPoint = Vec3;
/// Object-space residual p - (s R m + t).
using Residual = Vec3;

namespace tolerance {
/// Max elementwise deviation of R^T R from I, and of det(R) from 1.
inline constexpr double kRotation = 1e-12;
/// Allowed deviation of a ray norm from 1.
inline constexpr double kUnitNorm = 1e-12;
/// Max elementwise asymmetry of a covariance matrix.
inline constexpr double kSymmetry = 1e-12;
/// Distance from pi below which log_so3 switches to the symmetric-part branch.
inline constexpr double kLogNearPi = 1e-9;
}  // namespace tolerance

/// Element of SO(3). Construction validates orthonormality; composition
/// re-orthonormalizes so long products never drift out of the group.
class Rotation3 {
 public:
  Rotation3() : m_(Mat3::Identity()) {}

  /// Throws InvalidArgument unless R^T R = I and det R = +1 to kRotation.
  static Rotation3 from_matrix(const Mat3& m);
  /// Nearest rotation in the Frobenius sense (SVD with det-sign correction).
  static Rotation3 project(const Mat3& m);
  static Rotation3 identity() { return {}; }

  const Mat3& matrix() const { return m_; }
  Rotation3 inverse() const;
  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation3 operator*(const Rotation3& other) const;

  /// Max elementwise |R^T R - I| and |det R - 1|, whichever is larger.
  static double orthonormality_error(const Mat3& m);

 private:
  explicit Rotation3(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Rigid transform mapping camera-frame rays into the world: x_w = R x_c + t.
struct Pose {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();

  Pose inverse() const;
  Vec3 transform(const Vec3& x) const { return rotation * x + translation; }
  Pose operator*(const Pose& other) const;
};

class UnitRay {
 public:
  /// Accepts any finite non-zero vector. Vectors already within kUnitNorm of
  /// unit length are stored bit-for-bit; others are normalized.
  static UnitRay from_vector(const Vec3& v);

  const Vec3& direction() const { return m_; }

 private:
  explicit UnitRay(const Vec3& v) : m_(v) {}
  Vec3 m_;
};

struct Correspondence {
  ObjectPoint object;
  UnitRay ray;
};

/// Symmetric positive-definite 3x3 covariance with its Cholesky factor cached.
class NoiseCovariance {
 public:
  /// Throws DegenerateCovariance if the matrix is asymmetric or not PD.
  explicit NoiseCovariance(const Mat3& sigma);
  static NoiseCovariance identity() { return NoiseCovariance(Mat3::Identity()); }

  const Mat3& matrix() const { return sigma_; }
  /// Sigma^{-1} x, via the cached factor.
  Vec3 solve(const Vec3& x) const { return llt_.solve(x); }
  /// L^{-1} x where Sigma = L L^T.
  Vec3 whiten(const Vec3& x) const { return llt_.matrixL().solve(x); }
  Mat3 whiten(const Mat3& x) const { return llt_.matrixL().solve(x); }

 private:
  Mat3 sigma_;
  Eigen::LLT<Mat3> llt_;
};

Mat3 skew(const Vec3& v);
Rotation3 exp_so3(const AxisAngle3& phi);
/// Canonical axis-angle with |phi| <= pi. Within kLogNearPi of pi the axis is
/// taken from the symmetric part and its sign fixed so the largest component
/// is positive; both representatives are valid rotations of angle pi.
AxisAngle3 log_so3(const Rotation3& r);

Residual residual(const Correspondence& c, const Pose& pose, double scale);
double mahalanobis_sq(const Residual& e, const NoiseCovariance& sigma);
/// 0.5 * sum_i |p_i - (s_i R m_i + t)|^2_Sigma.
double cost(std::span<const Correspondence> correspondences, const Pose& pose,
            std::span<const double> scales, const NoiseCovariance& sigma);

}  // namespace gmlpnp
