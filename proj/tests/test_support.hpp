#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "gmlpnp/bench.hpp"
#include "gmlpnp/geometry.hpp"

namespace gmlpnp::testing {

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng), n(rng)};
}

inline Pose random_pose(std::mt19937_64& rng) {
  return Pose{bench::random_rotation(rng), random_vec(rng, 3.0)};
}

/// Random SPD matrix Q diag(d) Q^T with eigenvalues in [lo, hi].
inline Mat3 random_spd(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  const Mat3 q = bench::random_rotation(rng).matrix();
  return q * Vec3(u(rng), u(rng), u(rng)).asDiagonal() * q.transpose();
}

/// Noise-free correspondences generated directly from the model: points in
/// front of the camera, rays from their camera-frame directions.
inline std::vector<Correspondence> exact_correspondences(const Pose& pose, std::size_t n,
                                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> xy(-2.0, 2.0), z(4.0, 8.0);
  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 xc(xy(rng), xy(rng), z(rng));
    out.push_back({pose.transform(xc), UnitRay::from_vector(xc.normalized())});
  }
  return out;
}

inline double rotation_angle_deg(const Rotation3& a, const Rotation3& b) {
  return log_so3(a.inverse() * b).norm() * 180.0 / std::numbers::pi;
}

inline double relative_translation(const Vec3& truth, const Vec3& est) {
  return (truth - est).norm() / truth.norm();
}

}  // namespace gmlpnp::testing
