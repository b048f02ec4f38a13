#pragma once

#include <variant>

#include <Eigen/Core>

#include "gmlpnp/geometry.hpp"

namespace gmlpnp {

using ImagePoint = Eigen::Vector2d;

struct PinholeIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Unified (Mei) omnidirectional model: projection through the unit sphere
/// shifted by xi, radial-tangential distortion on the normalized plane, then
/// the affine pixel map.
struct MeiIntrinsics {
  double xi = 0.0;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
};

/// Any supported camera. Solvers only ever see the UnitRay produced by
/// unproject(), never the model itself.
using CameraModel = std::variant<PinholeIntrinsics, MeiIntrinsics>;

namespace mei {
inline constexpr int kMaxUndistortIterations = 20;
inline constexpr double kUndistortTolerance = 1e-12;
}  // namespace mei

void validate(const PinholeIntrinsics& k);
void validate(const MeiIntrinsics& k);

UnitRay unproject_pinhole(const PinholeIntrinsics& k, const ImagePoint& u);
/// Throws BehindCamera when x.z <= 0.
ImagePoint project_pinhole(const PinholeIntrinsics& k, const Vec3& x);

/// Throws InvalidPixel if undistortion does not converge or the pixel lies
/// outside the image of the viewing sphere.
UnitRay unproject_mei(const MeiIntrinsics& k, const ImagePoint& u);
/// Throws BehindCamera for x = 0 or points in the model's blind region.
ImagePoint project_mei(const MeiIntrinsics& k, const Vec3& x);

UnitRay unproject(const CameraModel& camera, const ImagePoint& u);
ImagePoint project(const CameraModel& camera, const Vec3& x);

}  // namespace gmlpnp
