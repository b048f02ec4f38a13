#pragma once

#include <span>
#include <vector>

#include "gmlpnp/geometry.hpp"

namespace gmlpnp {

/// Depth of each correspondence along its ray.
using ScaleVector = std::vector<double>;

struct InnerSolveConfig {
  int max_gn_iterations = 20;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
  double damping_initial = 1e-6;

  void validate() const;
};

struct InnerSolveResult {
  Pose pose;
  ScaleVector scales;
  double final_cost = 0.0;
  int gn_iterations = 0;
  bool converged = false;
  int negative_scale_count = 0;
};

/// Closed-form minimizer of the single-term cost over the depth s:
/// s = (p - t)^T Sigma^{-1} R m / ((R m)^T Sigma^{-1} R m).
double optimal_scale(const Correspondence& c, const Pose& pose, const NoiseCovariance& sigma);
ScaleVector optimal_scales(std::span<const Correspondence> correspondences, const Pose& pose,
                           const NoiseCovariance& sigma);

/// Gradient of the cost with respect to [delta_phi; delta_t] for the update
/// R <- R exp(delta_phi), t <- t + delta_t, scales held fixed.
Vec6 pose_gradient(std::span<const Correspondence> correspondences, const Pose& pose,
                   std::span<const double> scales, const NoiseCovariance& sigma);

/// Maximum-likelihood pose under a known covariance. Alternates the closed
/// form depth update with a Levenberg-Marquardt step on the pose; the 6x6
/// normal equations use per-point Jacobians with the depth direction
/// eliminated, so each pose step accounts for the depth response. Accepted
/// steps never increase the cost.
///
/// Throws InsufficientPoints for n < 6 and NonFiniteCost on numerical blow-up.
InnerSolveResult solve_fixed_covariance(std::span<const Correspondence> correspondences,
                                        const NoiseCovariance& sigma, const Pose& init,
                                        const InnerSolveConfig& cfg = {});

}  // namespace gmlpnp
