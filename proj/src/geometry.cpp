#include "gmlpnp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace gmlpnp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::InvalidPixel: return "InvalidPixel";
    case ErrorCode::DegenerateGroundTruth: return "DegenerateGroundTruth";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

double Rotation3::orthonormality_error(const Mat3& m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(m.determinant() - 1.0));
}

Rotation3 Rotation3::from_matrix(const Mat3& m) {
  if (!m.allFinite() || orthonormality_error(m) > tolerance::kRotation) {
    throw PnpError(ErrorCode::InvalidArgument, "matrix is not a rotation");
  }
  return Rotation3(m);
}

Rotation3 Rotation3::project(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return Rotation3(svd.matrixU() * d * svd.matrixV().transpose());
}

Rotation3 Rotation3::inverse() const { return Rotation3(m_.transpose()); }

Rotation3 Rotation3::operator*(const Rotation3& other) const {
  // Re-normalize through the quaternion to keep products inside SO(3).
  Eigen::Quaterniond q(Mat3(m_ * other.m_));
  q.normalize();
  return Rotation3(q.toRotationMatrix());
}

Pose Pose::inverse() const {
  const Rotation3 r_inv = rotation.inverse();
  return Pose{r_inv, -(r_inv * translation)};
}

Pose Pose::operator*(const Pose& other) const {
  return Pose{rotation * other.rotation, rotation * other.translation + translation};
}

UnitRay UnitRay::from_vector(const Vec3& v) {
  const double n = v.norm();
  if (!v.allFinite() || n == 0.0) {
    throw PnpError(ErrorCode::InvalidArgument, "ray must be finite and non-zero");
  }
  if (std::abs(n - 1.0) <= tolerance::kUnitNorm) return UnitRay(v);
  return UnitRay(v / n);
}

NoiseCovariance::NoiseCovariance(const Mat3& sigma) : sigma_(sigma) {
  if (!sigma.allFinite()) {
    throw PnpError(ErrorCode::DegenerateCovariance, "covariance has non-finite entries");
  }
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > tolerance::kSymmetry) {
    throw PnpError(ErrorCode::DegenerateCovariance, "covariance is not symmetric");
  }
  llt_.compute(sigma_);
  if (llt_.info() != Eigen::Success || !(llt_.matrixLLT().diagonal().minCoeff() > 0.0)) {
    throw PnpError(ErrorCode::DegenerateCovariance, "covariance is not positive-definite");
  }
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Rotation3 exp_so3(const AxisAngle3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  double a, b;  // R = I + a K + b K^2
  if (theta < 1e-6) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Rotation3::from_matrix(Mat3::Identity() + a * k + b * k * k);
}

AxisAngle3 log_so3(const Rotation3& rot) {
  const Mat3& r = rot.matrix();
  const Vec3 w = 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_theta = w.norm();
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < 1e-6) {
    return w * (1.0 + theta * theta / 6.0);
  }
  if (std::numbers::pi - theta < tolerance::kLogNearPi) {
    // R = 2 n n^T - I at the antipode; take the dominant column of (R + I) / 2.
    const Mat3 nnt = 0.5 * (r + Mat3::Identity());
    Eigen::Index k = 0;
    nnt.diagonal().maxCoeff(&k);
    Vec3 n = nnt.col(k) / std::sqrt(nnt(k, k));
    n.normalize();
    if (sin_theta > 0.0 ? n.dot(w) < 0.0 : n(k) < 0.0) n = -n;
    return theta * n;
  }
  return (theta / sin_theta) * w;
}

Residual residual(const Correspondence& c, const Pose& pose, double scale) {
  return c.object - (scale * (pose.rotation * c.ray.direction()) + pose.translation);
}

double mahalanobis_sq(const Residual& e, const NoiseCovariance& sigma) {
  return sigma.whiten(e).squaredNorm();
}

double cost(std::span<const Correspondence> correspondences, const Pose& pose,
            std::span<const double> scales, const NoiseCovariance& sigma) {
  if (scales.size() != correspondences.size()) {
    throw PnpError(ErrorCode::InvalidArgument, "one scale per correspondence required");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    sum += mahalanobis_sq(residual(correspondences[i], pose, scales[i]), sigma);
  }
  return 0.5 * sum;
}

}  // namespace gmlpnp
