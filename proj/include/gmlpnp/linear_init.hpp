#pragma once

#include <span>

#include "gmlpnp/geometry.hpp"

namespace gmlpnp {

namespace linear_init {
inline constexpr std::size_t kMinPoints = 6;
/// Points all within this distance of their best-fit plane are rejected.
inline constexpr double kPlanarityTolerance = 1e-9;
/// Largest-to-eleventh singular value ratio above which the system is rank deficient.
inline constexpr double kMaxConditionRatio = 1e12;
}  // namespace linear_init

/// Linear object-space resection. Every ray contributes two constraints
/// requiring the camera-frame point to have no component orthogonal to the
/// ray; the stacked system is solved for [R'|t'] (world to camera) by SVD,
/// R' is projected onto SO(3) and the camera-in-world pose is returned.
///
/// Throws InsufficientPoints for n < 6 and DegenerateGeometry for coplanar
/// object points or a rank-deficient system.
Pose solve_linear_init(std::span<const Correspondence> correspondences);

/// Two unit vectors spanning the orthogonal complement of m (Householder).
std::pair<Vec3, Vec3> orthogonal_complement(const Vec3& m);

}  // namespace gmlpnp
