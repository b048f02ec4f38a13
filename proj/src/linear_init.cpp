#include "gmlpnp/linear_init.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace gmlpnp {

std::pair<Vec3, Vec3> orthogonal_complement(const Vec3& m) {
  // H = I - 2 v v^T / v^T v maps m onto -sign(m_z) e_z, so its first two
  // columns are orthonormal and orthogonal to m.
  const double sign = m.z() >= 0.0 ? 1.0 : -1.0;
  Vec3 v = m;
  v.z() += sign;
  const Mat3 h = Mat3::Identity() - (2.0 / v.squaredNorm()) * v * v.transpose();
  return {h.col(0), h.col(1)};
}

Pose solve_linear_init(std::span<const Correspondence> correspondences) {
  const std::size_t n = correspondences.size();
  if (n < linear_init::kMinPoints) {
    throw PnpError(ErrorCode::InsufficientPoints,
                   "linear initialization needs at least 6 correspondences, got " + std::to_string(n));
  }

  // Normalize object points: zero centroid, unit RMS distance.
  Vec3 centroid = Vec3::Zero();
  for (const auto& c : correspondences) centroid += c.object;
  centroid /= static_cast<double>(n);
  Mat3 scatter = Mat3::Zero();
  for (const auto& c : correspondences) {
    const Vec3 d = c.object - centroid;
    scatter += d * d.transpose();
  }
  const double rms = std::sqrt(scatter.trace() / static_cast<double>(n));
  if (!(rms > 0.0)) throw PnpError(ErrorCode::DegenerateGeometry, "object points coincide");

  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Vec3 normal = eig.eigenvectors().col(0);
  double max_plane_dist = 0.0;
  for (const auto& c : correspondences) {
    max_plane_dist = std::max(max_plane_dist, std::abs(normal.dot(c.object - centroid)));
  }
  if (max_plane_dist < linear_init::kPlanarityTolerance) {
    throw PnpError(ErrorCode::DegenerateGeometry, "object points are coplanar");
  }

  // Unknowns x = [M row-major (9), t (3)], camera point X = M q + t with
  // q the normalized object point.
  Eigen::MatrixXd a(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 q = (correspondences[i].object - centroid) / rms;
    const auto [r, s] = orthogonal_complement(correspondences[i].ray.direction());
    for (int row = 0; row < 2; ++row) {
      const Vec3& b = row == 0 ? r : s;
      auto eq = a.row(static_cast<Eigen::Index>(2 * i + row));
      for (int j = 0; j < 3; ++j) eq.segment<3>(3 * j) = b(j) * q.transpose();
      eq.segment<3>(9) = b.transpose();
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(10) > 0.0) || sv(0) / sv(10) > linear_init::kMaxConditionRatio) {
    throw PnpError(ErrorCode::DegenerateGeometry, "linear system is rank deficient");
  }
  const Eigen::Matrix<double, 12, 1> x = svd.matrixV().col(11);

  Mat3 m_norm;
  m_norm << x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7), x(8);
  Vec3 t_norm = x.segment<3>(9);

  // Undo the normalization: X = (M / rms) p + t - (M / rms) centroid.
  Mat3 m = m_norm / rms;
  Vec3 t = t_norm - m * centroid;

  // The null vector has arbitrary sign; pick the one with positive median depth.
  std::vector<double> depths(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = correspondences[i];
    depths[i] = c.ray.direction().dot(m * c.object + t);
  }
  std::nth_element(depths.begin(), depths.begin() + static_cast<long>(n / 2), depths.end());
  if (depths[n / 2] < 0.0) {
    m = -m;
    t = -t;
  }

  Eigen::JacobiSVD<Mat3> msvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double scale = msvd.singularValues().mean();
  if (!(scale > 0.0)) throw PnpError(ErrorCode::DegenerateGeometry, "zero rotation block");
  const Rotation3 r_wc_to_cam = Rotation3::project(m);
  const Vec3 t_cam = t / scale;

  // Camera-in-world: x_w = R'^T (x_c - t').
  const Rotation3 r = r_wc_to_cam.inverse();
  return Pose{r, -(r * t_cam)};
}

}  // namespace gmlpnp
