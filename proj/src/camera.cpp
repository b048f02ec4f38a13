#include "gmlpnp/camera.hpp"

#include <cmath>

namespace gmlpnp {
namespace {

// Radial-tangential displacement applied to an undistorted normalized point.
Eigen::Vector2d distortion(const MeiIntrinsics& k, const Eigen::Vector2d& m) {
  const double x2 = m.x() * m.x();
  const double y2 = m.y() * m.y();
  const double xy = m.x() * m.y();
  const double r2 = x2 + y2;
  const double radial = k.k1 * r2 + k.k2 * r2 * r2;
  return {m.x() * radial + 2.0 * k.p1 * xy + k.p2 * (r2 + 2.0 * x2),
          m.y() * radial + 2.0 * k.p2 * xy + k.p1 * (r2 + 2.0 * y2)};
}

bool has_distortion(const MeiIntrinsics& k) {
  return k.k1 != 0.0 || k.k2 != 0.0 || k.p1 != 0.0 || k.p2 != 0.0;
}

}  // namespace

void validate(const PinholeIntrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0) || !std::isfinite(k.cx) || !std::isfinite(k.cy)) {
    throw PnpError(ErrorCode::InvalidArgument, "pinhole focal lengths must be positive");
  }
}

void validate(const MeiIntrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0) || !(k.xi >= 0.0) || !std::isfinite(k.cx) ||
      !std::isfinite(k.cy)) {
    throw PnpError(ErrorCode::InvalidArgument, "mei requires fx, fy > 0 and xi >= 0");
  }
}

UnitRay unproject_pinhole(const PinholeIntrinsics& k, const ImagePoint& u) {
  return UnitRay::from_vector(Vec3((u.x() - k.cx) / k.fx, (u.y() - k.cy) / k.fy, 1.0).normalized());
}

ImagePoint project_pinhole(const PinholeIntrinsics& k, const Vec3& x) {
  if (!(x.z() > 0.0)) throw PnpError(ErrorCode::BehindCamera, "point has non-positive depth");
  return {k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy};
}

UnitRay unproject_mei(const MeiIntrinsics& k, const ImagePoint& u) {
  const Eigen::Vector2d md((u.x() - k.cx) / k.fx, (u.y() - k.cy) / k.fy);
  if (!md.allFinite()) throw PnpError(ErrorCode::InvalidPixel, "non-finite pixel");

  Eigen::Vector2d mu = md;
  if (has_distortion(k)) {
    bool converged = false;
    for (int it = 0; it < mei::kMaxUndistortIterations; ++it) {
      const Eigen::Vector2d next = md - distortion(k, mu);
      const double step = (next - mu).norm();
      mu = next;
      if (!mu.allFinite()) break;
      if (step < mei::kUndistortTolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) throw PnpError(ErrorCode::InvalidPixel, "undistortion did not converge");
  }

  // Lift to the unit sphere: the point is lambda * (x, y, 1 - xi / lambda).
  // Dropping the positive factor lambda makes xi = 0 reduce exactly to the
  // pinhole ray.
  const double r2 = mu.squaredNorm();
  const double disc = 1.0 + (1.0 - k.xi * k.xi) * r2;
  if (disc < 0.0) throw PnpError(ErrorCode::InvalidPixel, "pixel outside the sphere image");
  const double lambda = (k.xi + std::sqrt(disc)) / (1.0 + r2);
  return UnitRay::from_vector(Vec3(mu.x(), mu.y(), 1.0 - k.xi / lambda).normalized());
}

ImagePoint project_mei(const MeiIntrinsics& k, const Vec3& x) {
  const double n = x.norm();
  if (!(n > 0.0)) throw PnpError(ErrorCode::BehindCamera, "cannot project the origin");
  const Vec3 xs = x / n;
  const double denom = xs.z() + k.xi;
  if (!(denom > 1e-12)) throw PnpError(ErrorCode::BehindCamera, "point in the blind region");
  Eigen::Vector2d m(xs.x() / denom, xs.y() / denom);
  if (has_distortion(k)) m += distortion(k, m);
  return {k.fx * m.x() + k.cx, k.fy * m.y() + k.cy};
}

UnitRay unproject(const CameraModel& camera, const ImagePoint& u) {
  return std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PinholeIntrinsics>) {
          return unproject_pinhole(k, u);
        } else {
          return unproject_mei(k, u);
        }
      },
      camera);
}

ImagePoint project(const CameraModel& camera, const Vec3& x) {
  return std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PinholeIntrinsics>) {
          return project_pinhole(k, x);
        } else {
          return project_mei(k, x);
        }
      },
      camera);
}

}  // namespace gmlpnp
