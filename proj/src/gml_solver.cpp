#include "gmlpnp/gml_solver.hpp"

#include <string>

#include <Eigen/LU>

#include "gmlpnp/linear_init.hpp"

namespace gmlpnp {
namespace {

Mat3 second_moment(std::span<const Residual> residuals) {
  Mat3 v = Mat3::Zero();
  for (const Residual& e : residuals) v.noalias() += e * e.transpose();
  return v;
}

}  // namespace

void OuterLoopConfig::validate() const {
  if (!(covariance_threshold > 0.0) || max_outer_iterations < 1 || !(regularization_floor > 0.0) ||
      !(regularization_absolute > 0.0)) {
    throw PnpError(ErrorCode::InvalidArgument, "invalid outer loop settings");
  }
  inner.validate();
}

NoiseCovariance estimate_covariance(std::span<const Residual> residuals, double regularization_floor,
                                    double regularization_absolute) {
  if (residuals.empty()) {
    throw PnpError(ErrorCode::InsufficientPoints, "covariance estimate needs at least one residual");
  }
  Mat3 sigma = second_moment(residuals) / static_cast<double>(residuals.size());
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  const double ridge = regularization_floor * std::max(sigma.trace() / 3.0, regularization_absolute);
  sigma.diagonal().array() += ridge;
  return NoiseCovariance(sigma);
}

double determinant_criterion(std::span<const Residual> residuals) {
  if (residuals.size() < 3) {
    throw PnpError(ErrorCode::InsufficientPoints, "determinant criterion needs at least 3 residuals");
  }
  return std::max(second_moment(residuals).determinant(), 0.0);
}

std::vector<Residual> residuals(std::span<const Correspondence> correspondences, const Pose& pose,
                                std::span<const double> scales) {
  std::vector<Residual> out(correspondences.size());
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    out[i] = residual(correspondences[i], pose, scales[i]);
  }
  return out;
}

SolveReport solve(std::span<const Correspondence> correspondences, const std::optional<Pose>& init,
                  const OuterLoopConfig& cfg) {
  cfg.validate();
  if (correspondences.size() < 6) {
    throw PnpError(ErrorCode::InsufficientPoints,
                   "need at least 6 correspondences, got " + std::to_string(correspondences.size()));
  }

  SolveReport report;
  report.pose = init ? *init : solve_linear_init(correspondences);

  // Bootstrap residuals at the initial pose.
  const NoiseCovariance bootstrap =
      cfg.bootstrap_covariance ? NoiseCovariance(*cfg.bootstrap_covariance) : NoiseCovariance::identity();
  report.scales = optimal_scales(correspondences, report.pose, bootstrap);
  std::vector<Residual> e = residuals(correspondences, report.pose, report.scales);
  NoiseCovariance sigma = estimate_covariance(e, cfg.regularization_floor, cfg.regularization_absolute);

  IterationDiagnostics diag0;
  diag0.covariance = sigma.matrix();
  diag0.det_v = determinant_criterion(e);
  for (double s : report.scales) diag0.negative_scale_count += s < 0.0 ? 1 : 0;
  report.iterations.push_back(diag0);

  for (int k = 1; k <= cfg.max_outer_iterations; ++k) {
    // Depths under the current covariance, then the pose with it held fixed;
    // the inner solve starts from the optimal depths at the current pose.
    const InnerSolveResult inner = solve_fixed_covariance(correspondences, sigma, report.pose, cfg.inner);
    report.pose = inner.pose;
    report.scales = inner.scales;
    e = residuals(correspondences, report.pose, report.scales);

    NoiseCovariance next = estimate_covariance(e, cfg.regularization_floor, cfg.regularization_absolute);
    const double change = (next.matrix() - sigma.matrix()).cwiseAbs().maxCoeff();

    IterationDiagnostics d;
    d.iteration = k;
    d.covariance = next.matrix();
    d.det_v = determinant_criterion(e);
    d.cost = inner.final_cost;
    d.negative_scale_count = inner.negative_scale_count;
    d.gn_iterations = inner.gn_iterations;
    report.iterations.push_back(d);

    sigma = std::move(next);
    if (change < cfg.covariance_threshold) {
      report.converged = true;
      break;
    }
  }

  report.covariance = sigma.matrix();
  return report;
}

}  // namespace gmlpnp
