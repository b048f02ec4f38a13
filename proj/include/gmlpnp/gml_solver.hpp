#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gmlpnp/geometry.hpp"
#include "gmlpnp/ml_solver.hpp"

namespace gmlpnp {

struct OuterLoopConfig {
  /// Stop once the elementwise max-abs change of the covariance estimate
  /// falls below this value (squared world units).
  double covariance_threshold = 1e-5;
  int max_outer_iterations = 10;
  /// Relative ridge added to the sample covariance, scaled by tr/3.
  double regularization_floor = 1e-9;
  /// Absolute lower bound on tr/3 used in the ridge.
  double regularization_absolute = 1e-12;
  /// Covariance defining the bootstrap depths at the initial pose.
  /// Identity when absent.
  std::optional<Mat3> bootstrap_covariance;
  InnerSolveConfig inner;

  void validate() const;
};

struct IterationDiagnostics {
  /// 0 is the bootstrap state at the initial pose.
  int iteration = 0;
  /// Covariance estimated from this iteration's residuals.
  Mat3 covariance = Mat3::Zero();
  /// det(sum_i e_i e_i^T).
  double det_v = 0.0;
  /// Cost of the pose solve (0 for the bootstrap row).
  double cost = 0.0;
  int negative_scale_count = 0;
  /// Inner Gauss-Newton iterations spent (0 for the bootstrap row).
  int gn_iterations = 0;
};

struct SolveReport {
  Pose pose;
  Mat3 covariance = Mat3::Identity();
  ScaleVector scales;
  std::vector<IterationDiagnostics> iterations;
  bool converged = false;

  /// Number of completed outer iterations (bootstrap row excluded).
  int outer_iterations() const { return static_cast<int>(iterations.size()) - 1; }
};

/// Sample second moment (1/n) sum e e^T about zero plus the ridge
/// eps * max(tr/3, eps0) * I, which keeps the result positive-definite.
NoiseCovariance estimate_covariance(std::span<const Residual> residuals, double regularization_floor = 1e-9,
                                    double regularization_absolute = 1e-12);

/// det(sum_i e_i e_i^T); the squared volume spanned by the residuals.
double determinant_criterion(std::span<const Residual> residuals);

std::vector<Residual> residuals(std::span<const Correspondence> correspondences, const Pose& pose,
                                std::span<const double> scales);

/// Joint estimate of pose and noise covariance by iterated generalized least
/// squares. Each outer iteration estimates the covariance from the current
/// residuals, recomputes depths under it, solves the pose with the covariance
/// fixed and recomputes residuals. Runs the linear initializer when no
/// initial pose is supplied.
///
/// Throws InsufficientPoints for n < 6; NonFiniteCost propagates from the
/// inner solve. Hitting max_outer_iterations is reported via converged=false.
SolveReport solve(std::span<const Correspondence> correspondences, const std::optional<Pose>& init,
                  const OuterLoopConfig& cfg = {});

}  // namespace gmlpnp
