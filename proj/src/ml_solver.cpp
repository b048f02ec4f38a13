#include "gmlpnp/ml_solver.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

namespace gmlpnp {
namespace {

constexpr double kMaxDamping = 1e32;
constexpr std::size_t kMinPoints = 6;

struct NormalEquations {
  Mat6 hessian = Mat6::Zero();
  Vec6 gradient = Vec6::Zero();
};

NormalEquations build_normal_equations(std::span<const Correspondence> correspondences,
                                       const Pose& pose, std::span<const double> scales,
                                       const NoiseCovariance& sigma) {
  NormalEquations ne;
  const Mat3& r = pose.rotation.matrix();
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    const Correspondence& c = correspondences[i];
    const Vec3 rm = r * c.ray.direction();
    const Vec3 e = c.object - (scales[i] * rm + pose.translation);

    // de/dphi = s R [m]x = s [Rm]x R, de/dt = -I; everything whitened by L^{-1}.
    Eigen::Matrix<double, 3, 6> j;
    j.leftCols<3>() = sigma.whiten(Mat3(scales[i] * skew(rm) * r));
    j.rightCols<3>() = -sigma.whiten(Mat3(Mat3::Identity()));
    const Vec3 w = sigma.whiten(e);
    const Vec3 a = sigma.whiten(rm);

    ne.gradient.noalias() += j.transpose() * w;
    // Eliminate the depth: project the Jacobian off the whitened ray direction.
    const Eigen::Matrix<double, 3, 6> jp = j - a * (a.transpose() * j) / a.squaredNorm();
    ne.hessian.noalias() += jp.transpose() * jp;
  }
  return ne;
}

Pose retract(const Pose& pose, const Vec6& delta) {
  return Pose{pose.rotation * exp_so3(delta.head<3>()), pose.translation + delta.tail<3>()};
}

int count_negative(const ScaleVector& scales) {
  int n = 0;
  for (double s : scales) n += s < 0.0 ? 1 : 0;
  return n;
}

}  // namespace

void InnerSolveConfig::validate() const {
  if (max_gn_iterations <= 0 || !(gradient_tolerance > 0.0) || !(step_tolerance > 0.0) ||
      !(damping_initial > 0.0)) {
    throw PnpError(ErrorCode::InvalidArgument, "inner solve settings must be positive");
  }
}

double optimal_scale(const Correspondence& c, const Pose& pose, const NoiseCovariance& sigma) {
  const Vec3 rm = pose.rotation * c.ray.direction();
  const Vec3 w_rm = sigma.solve(rm);
  return (c.object - pose.translation).dot(w_rm) / rm.dot(w_rm);
}

ScaleVector optimal_scales(std::span<const Correspondence> correspondences, const Pose& pose,
                           const NoiseCovariance& sigma) {
  ScaleVector s(correspondences.size());
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    s[i] = optimal_scale(correspondences[i], pose, sigma);
  }
  return s;
}

Vec6 pose_gradient(std::span<const Correspondence> correspondences, const Pose& pose,
                   std::span<const double> scales, const NoiseCovariance& sigma) {
  if (scales.size() != correspondences.size()) {
    throw PnpError(ErrorCode::InvalidArgument, "one scale per correspondence required");
  }
  const Mat3& r = pose.rotation.matrix();
  Vec6 g = Vec6::Zero();
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    const Correspondence& c = correspondences[i];
    const Vec3 srm = scales[i] * (r * c.ray.direction());
    const Vec3 we = sigma.solve(c.object - (srm + pose.translation));
    // (s R [m]x)^T Sigma^{-1} e = -R^T [sRm]x Sigma^{-1} e
    g.head<3>() -= r.transpose() * (srm.cross(we));
    g.tail<3>() -= we;
  }
  return g;
}

InnerSolveResult solve_fixed_covariance(std::span<const Correspondence> correspondences,
                                        const NoiseCovariance& sigma, const Pose& init,
                                        const InnerSolveConfig& cfg) {
  cfg.validate();
  if (correspondences.size() < kMinPoints) {
    throw PnpError(ErrorCode::InsufficientPoints,
                   "need at least 6 correspondences, got " + std::to_string(correspondences.size()));
  }

  InnerSolveResult out;
  out.pose = init;
  out.scales = optimal_scales(correspondences, out.pose, sigma);
  out.final_cost = cost(correspondences, out.pose, out.scales, sigma);
  if (!std::isfinite(out.final_cost)) {
    throw PnpError(ErrorCode::NonFiniteCost, "cost at the initial pose is not finite");
  }

  double damping = cfg.damping_initial;
  for (int iter = 0; iter < cfg.max_gn_iterations; ++iter) {
    const NormalEquations ne = build_normal_equations(correspondences, out.pose, out.scales, sigma);
    if (!ne.hessian.allFinite() || !ne.gradient.allFinite()) {
      throw PnpError(ErrorCode::NonFiniteCost, "non-finite normal equations");
    }
    if (ne.gradient.norm() < cfg.gradient_tolerance) {
      out.converged = true;
      break;
    }

    const Vec6 diag = ne.hessian.diagonal().cwiseMax(1e-300);
    bool accepted = false;
    bool tiny_step = false;
    while (damping <= kMaxDamping) {
      Mat6 a = ne.hessian;
      a.diagonal() += damping * diag;
      const Vec6 delta = -a.ldlt().solve(ne.gradient);
      if (!delta.allFinite()) {
        damping *= 10.0;
        continue;
      }
      if (delta.norm() < cfg.step_tolerance) {
        tiny_step = true;
        break;
      }
      const Pose candidate = retract(out.pose, delta);
      ScaleVector scales = optimal_scales(correspondences, candidate, sigma);
      const double c = cost(correspondences, candidate, scales, sigma);
      if (std::isfinite(c) && c < out.final_cost) {
        out.pose = candidate;
        out.scales = std::move(scales);
        out.final_cost = c;
        damping = std::max(damping / 10.0, 1e-15);
        accepted = true;
        ++out.gn_iterations;
        if (delta.norm() < cfg.step_tolerance) tiny_step = true;
        break;
      }
      damping *= 10.0;
    }

    // A rejected step at any damping means the cost is at its numerical floor.
    if (tiny_step || !accepted) {
      out.converged = true;
      break;
    }
  }

  out.negative_scale_count = count_negative(out.scales);
  return out;
}

}  // namespace gmlpnp
