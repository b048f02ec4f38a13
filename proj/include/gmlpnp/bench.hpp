#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gmlpnp/camera.hpp"
#include "gmlpnp/geometry.hpp"
#include "gmlpnp/gml_solver.hpp"

namespace gmlpnp::bench {

struct Box {
  Vec3 min{-2.0, -2.0, 4.0};
  Vec3 max{2.0, 2.0, 8.0};
};

struct SceneConfig {
  std::size_t n_points = 50;
  /// Sampling volume in the camera frame (meters).
  Box box;
  CameraModel camera = PinholeIntrinsics{800.0, 800.0, 320.0, 240.0};
  std::uint64_t rng_seed = 0;
};

struct NoiseConfig {
  /// Dominant object-noise standard deviation (meters).
  double sigma_obj = 0.0;
  /// Dominant image-noise standard deviation (pixels).
  double sigma_img = 0.0;
  /// When false both noises are isotropic.
  bool anisotropic = true;
  /// Overrides the random object covariance construction when set.
  std::optional<Mat3> object_covariance;
};

struct GroundTruth {
  Pose pose;
  /// True object-noise covariance; zero when sigma_obj = 0.
  Mat3 covariance = Mat3::Zero();
  /// Image-noise covariance (pixels^2).
  Eigen::Matrix2d image_covariance = Eigen::Matrix2d::Zero();
  std::vector<Correspondence> clean;
  std::vector<ImagePoint> clean_pixels;
};

struct Scene {
  GroundTruth truth;
  std::vector<Correspondence> noisy;
  std::vector<ImagePoint> noisy_pixels;
};

/// Points uniform in the box (camera frame), world origin at their centroid
/// under a uniformly random rotation, projection through the camera, then
/// object noise N(0, Ro diag(s^2, s1^2, s2^2) Ro^T) on the world points and
/// the planar analogue on the pixels. Rays come from the noisy pixels.
Scene generate_scene(const SceneConfig& cfg, const NoiseConfig& noise);

/// Uniform rotation on SO(3) from a uniform unit quaternion.
Rotation3 random_rotation(std::mt19937_64& rng);

/// Ground truth perturbed by a rotation of uniform random axis and angle in
/// [0, max_rotation_deg] and a translation of uniform random direction and
/// length in [0, max_translation_fraction * |t|].
Pose random_offset(const Pose& pose, double max_rotation_deg, double max_translation_fraction,
                   std::mt19937_64& rng);

/// max_k arccos(r_k,gt . r_k,est) over the columns, in degrees.
double rotation_error(const Rotation3& r_gt, const Rotation3& r_est);
/// |t_gt - t_est| / |t_gt|. Throws DegenerateGroundTruth for |t_gt| < 1e-12.
double translation_error(const Vec3& t_gt, const Vec3& t_est);

double frobenius_error(const Mat3& estimate, const Mat3& truth);

enum class Method { Gmlpnp, GmlpnpStar, MlIdentity, LinearInit };

std::string to_string(Method m);
Method parse_method(const std::string& name);

struct TrialRecord {
  Method method = Method::Gmlpnp;
  std::size_t n_points = 0;
  double sigma_obj = 0.0;
  double sigma_img = 0.0;
  int trial = 0;
  double e_rot_deg = 0.0;
  double e_trans_rel = 0.0;
  double time_us = 0.0;
  int outer_iterations = 0;
  bool converged = false;
  bool failed = false;
  std::string failure;
  std::vector<double> det_v_trace;
  std::vector<double> frob_trace;
  std::vector<double> cost_trace;
};

struct ExperimentConfig {
  std::vector<std::size_t> n_values{50};
  std::vector<double> sigma_values{0.1};
  /// Image noise per unit of object noise (pixels per meter).
  double image_noise_per_meter = 10.0;
  int trials = 500;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::Gmlpnp, Method::GmlpnpStar, Method::MlIdentity, Method::LinearInit};
  /// 0 selects the available hardware parallelism.
  unsigned threads = 0;
  SceneConfig scene;
  bool anisotropic = true;
  OuterLoopConfig solver;
};

/// Seed of the RNG stream for one (grid point, trial); independent of the
/// thread schedule.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t grid_index, int trial);

/// Runs one method on a scene. Failures are recorded, never thrown.
TrialRecord run_method(Method method, const Scene& scene, const OuterLoopConfig& solver);

/// One record per (grid point, trial, method), ordered grid-major then by
/// trial then by the configured method order. All methods at a grid point and
/// trial see the same scene.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg);

struct Aggregate {
  Method method = Method::Gmlpnp;
  std::size_t n_points = 0;
  double sigma_obj = 0.0;
  double mean_e_rot = 0.0;
  double median_e_rot = 0.0;
  double mean_e_trans = 0.0;
  double median_e_trans = 0.0;
  double mean_time_us = 0.0;
  double mean_outer_iterations = 0.0;
  int trials = 0;
  int failures = 0;
};

/// Mean and median per (method, n, sigma), failed trials excluded.
std::vector<Aggregate> aggregate(const std::vector<TrialRecord>& records);

/// Columns: method, n_points, sigma_obj, sigma_img, trial, e_rot_deg,
/// e_trans_rel, time_us, outer_iters, converged, failed.
void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& records);
/// Columns: method, trial, iteration, det_V, frob_err, cost. Only methods
/// with an outer loop produce rows.
void write_iterations_csv(std::ostream& os, const std::vector<TrialRecord>& records);
void print_summary(std::ostream& os, const std::vector<Aggregate>& rows);

enum class Trace { DetV, FrobError, Cost };

/// Per-iteration mean over records that carry an outer-loop trace. Traces
/// that stopped early are extended with their final value, so every trial
/// contributes to every iteration index.
std::vector<double> mean_trace(const std::vector<TrialRecord>& records, Trace which);

double mean(const std::vector<double>& v);
double median(std::vector<double> v);
/// Linear interpolation between order statistics, q in [0, 1].
double quantile(std::vector<double> v, double q);

}  // namespace gmlpnp::bench
