#include "gmlpnp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <thread>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "gmlpnp/linear_init.hpp"

namespace gmlpnp::bench {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Lower bound of the open interval (0, sigma) used for the minor axes.
double minor_axis(std::mt19937_64& rng, double sigma) { return uniform(rng, 1e-6 * sigma, sigma); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

Rotation3 random_rotation(std::mt19937_64& rng) {
  const double u1 = uniform(rng, 0.0, 1.0);
  const double u2 = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double u3 = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  Eigen::Quaterniond q(b * std::cos(u3), a * std::sin(u2), a * std::cos(u2), b * std::sin(u3));
  q.normalize();
  return Rotation3::from_matrix(q.toRotationMatrix());
}

Pose random_offset(const Pose& pose, double max_rotation_deg, double max_translation_fraction,
                   std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vec3 axis(normal(rng), normal(rng), normal(rng));
  axis.normalize();
  const double angle = uniform(rng, 0.0, max_rotation_deg) * std::numbers::pi / 180.0;
  Vec3 dir(normal(rng), normal(rng), normal(rng));
  dir.normalize();
  const double len = uniform(rng, 0.0, max_translation_fraction * pose.translation.norm());
  return Pose{pose.rotation * exp_so3(angle * axis), pose.translation + len * dir};
}

Scene generate_scene(const SceneConfig& cfg, const NoiseConfig& noise) {
  if (cfg.n_points < 6) throw PnpError(ErrorCode::InvalidArgument, "scene needs at least 6 points");
  if (!((cfg.box.max - cfg.box.min).array() > 0.0).all()) {
    throw PnpError(ErrorCode::InvalidArgument, "scene box is degenerate");
  }
  if (!(noise.sigma_obj >= 0.0) || !(noise.sigma_img >= 0.0)) {
    throw PnpError(ErrorCode::InvalidArgument, "noise levels must be non-negative");
  }

  std::mt19937_64 rng(cfg.rng_seed);
  const std::size_t n = cfg.n_points;

  std::vector<Vec3> cam(n);
  Vec3 centroid = Vec3::Zero();
  for (auto& x : cam) {
    for (int k = 0; k < 3; ++k) x(k) = uniform(rng, cfg.box.min(k), cfg.box.max(k));
    centroid += x;
  }
  centroid /= static_cast<double>(n);

  Scene scene;
  GroundTruth& gt = scene.truth;
  const Rotation3 world = random_rotation(rng);
  gt.pose = Pose{world, -(world * centroid)};

  // Object noise: eps = A z with A A^T the covariance.
  Mat3 a;
  {
    const Rotation3 ro = random_rotation(rng);
    const double s = noise.sigma_obj;
    const double s1 = minor_axis(rng, s);
    const double s2 = minor_axis(rng, s);
    if (noise.object_covariance) {
      Eigen::LLT<Mat3> llt(*noise.object_covariance);
      if (llt.info() != Eigen::Success) {
        throw PnpError(ErrorCode::DegenerateCovariance, "object covariance is not positive-definite");
      }
      a = llt.matrixL();
    } else if (noise.anisotropic) {
      a = ro.matrix() * Vec3(s, s1, s2).asDiagonal();
    } else {
      a = s * Mat3::Identity();
    }
  }
  gt.covariance = a * a.transpose();

  Eigen::Matrix2d b;
  {
    const double alpha = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double s = noise.sigma_img;
    const double s1 = minor_axis(rng, s);
    if (noise.anisotropic) {
      b = Eigen::Rotation2Dd(alpha).toRotationMatrix() * Eigen::Vector2d(s, s1).asDiagonal();
    } else {
      b = s * Eigen::Matrix2d::Identity();
    }
  }
  gt.image_covariance = b * b.transpose();

  const bool object_noise = noise.object_covariance || noise.sigma_obj > 0.0;
  const bool image_noise = noise.sigma_img > 0.0;
  std::normal_distribution<double> normal;

  gt.clean.reserve(n);
  gt.clean_pixels.reserve(n);
  scene.noisy.reserve(n);
  scene.noisy_pixels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = gt.pose.rotation * (cam[i] - centroid);
    const ImagePoint px = project(cfg.camera, cam[i]);
    const Vec3 z3(normal(rng), normal(rng), normal(rng));
    const Eigen::Vector2d z2(normal(rng), normal(rng));

    const Vec3 p_noisy = object_noise ? Vec3(p + a * z3) : p;
    const ImagePoint px_noisy = image_noise ? ImagePoint(px + b * z2) : px;

    gt.clean.push_back({p, unproject(cfg.camera, px)});
    gt.clean_pixels.push_back(px);
    scene.noisy.push_back({p_noisy, unproject(cfg.camera, px_noisy)});
    scene.noisy_pixels.push_back(px_noisy);
  }
  return scene;
}

double rotation_error(const Rotation3& r_gt, const Rotation3& r_est) {
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    // atan2 form of arccos(a.b); stays accurate for nearly parallel columns.
    const Vec3 a = r_gt.matrix().col(k);
    const Vec3 b = r_est.matrix().col(k);
    worst = std::max(worst, std::atan2(a.cross(b).norm(), std::clamp(a.dot(b), -1.0, 1.0)));
  }
  return worst * 180.0 / std::numbers::pi;
}

double translation_error(const Vec3& t_gt, const Vec3& t_est) {
  const double n = t_gt.norm();
  if (n < 1e-12) throw PnpError(ErrorCode::DegenerateGroundTruth, "ground-truth translation is zero");
  return (t_gt - t_est).norm() / n;
}

double frobenius_error(const Mat3& estimate, const Mat3& truth) { return (estimate - truth).norm(); }

std::string to_string(Method m) {
  switch (m) {
    case Method::Gmlpnp: return "gmlpnp";
    case Method::GmlpnpStar: return "gmlpnp_star";
    case Method::MlIdentity: return "ml_identity";
    case Method::LinearInit: return "linear_init";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Gmlpnp, Method::GmlpnpStar, Method::MlIdentity, Method::LinearInit}) {
    if (to_string(m) == name) return m;
  }
  throw PnpError(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t grid_index, int trial) {
  std::uint64_t x = splitmix64(seed);
  x = splitmix64(x ^ splitmix64(static_cast<std::uint64_t>(grid_index) + 0x51ed27ULL));
  x = splitmix64(x ^ splitmix64(static_cast<std::uint64_t>(trial) + 0x7f4a7c15ULL));
  return x;
}

TrialRecord run_method(Method method, const Scene& scene, const OuterLoopConfig& solver) {
  TrialRecord rec;
  rec.method = method;
  rec.n_points = scene.noisy.size();
  const auto& gt = scene.truth;
  const std::span<const Correspondence> data(scene.noisy);

  const auto start = std::chrono::steady_clock::now();
  try {
    Pose pose;
    switch (method) {
      case Method::Gmlpnp: {
        const SolveReport report = solve(data, std::nullopt, solver);
        pose = report.pose;
        rec.outer_iterations = report.outer_iterations();
        rec.converged = report.converged;
        for (const auto& it : report.iterations) {
          rec.det_v_trace.push_back(it.det_v);
          rec.frob_trace.push_back(frobenius_error(it.covariance, gt.covariance));
          rec.cost_trace.push_back(it.cost);
        }
        break;
      }
      case Method::GmlpnpStar:
      case Method::MlIdentity: {
        const bool has_truth = method == Method::GmlpnpStar && gt.covariance.diagonal().minCoeff() > 0.0;
        const NoiseCovariance sigma =
            has_truth ? NoiseCovariance(gt.covariance) : NoiseCovariance::identity();
        const InnerSolveResult r = solve_fixed_covariance(data, sigma, solve_linear_init(data), solver.inner);
        pose = r.pose;
        rec.converged = r.converged;
        rec.cost_trace.push_back(r.final_cost);
        break;
      }
      case Method::LinearInit:
        pose = solve_linear_init(data);
        rec.converged = true;
        break;
    }
    rec.time_us =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
    rec.e_rot_deg = rotation_error(gt.pose.rotation, pose.rotation);
    rec.e_trans_rel = translation_error(gt.pose.translation, pose.translation);
    if (!std::isfinite(rec.e_rot_deg) || !std::isfinite(rec.e_trans_rel)) {
      throw PnpError(ErrorCode::NonFiniteCost, "non-finite pose estimate");
    }
  } catch (const std::exception& ex) {
    rec.failed = true;
    rec.failure = ex.what();
    rec.e_rot_deg = std::numeric_limits<double>::quiet_NaN();
    rec.e_trans_rel = std::numeric_limits<double>::quiet_NaN();
    rec.time_us =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 0) throw PnpError(ErrorCode::InvalidArgument, "trial count must be non-negative");
  cfg.solver.validate();

  struct GridPoint {
    std::size_t n;
    double sigma;
  };
  std::vector<GridPoint> grid;
  for (std::size_t n : cfg.n_values) {
    for (double s : cfg.sigma_values) grid.push_back({n, s});
  }

  const std::size_t per_grid = static_cast<std::size_t>(cfg.trials);
  const std::size_t tasks = grid.size() * per_grid;
  std::vector<std::vector<TrialRecord>> slots(tasks);

  auto run_task = [&](std::size_t task) {
    const std::size_t g = task / per_grid;
    const int trial = static_cast<int>(task % per_grid);
    SceneConfig scene_cfg = cfg.scene;
    scene_cfg.n_points = grid[g].n;
    scene_cfg.rng_seed = trial_seed(cfg.seed, g, trial);
    NoiseConfig noise;
    noise.sigma_obj = grid[g].sigma;
    noise.sigma_img = grid[g].sigma * cfg.image_noise_per_meter;
    noise.anisotropic = cfg.anisotropic;

    std::vector<TrialRecord>& out = slots[task];
    std::optional<Scene> scene;
    std::string scene_error;
    try {
      scene = generate_scene(scene_cfg, noise);
    } catch (const std::exception& ex) {
      scene_error = ex.what();
    }
    for (Method m : cfg.methods) {
      TrialRecord rec;
      if (scene) {
        rec = run_method(m, *scene, cfg.solver);
      } else {
        rec.method = m;
        rec.failed = true;
        rec.failure = scene_error;
        rec.e_rot_deg = rec.e_trans_rel = std::numeric_limits<double>::quiet_NaN();
      }
      rec.n_points = grid[g].n;
      rec.sigma_obj = noise.sigma_obj;
      rec.sigma_img = noise.sigma_img;
      rec.trial = trial;
      out.push_back(std::move(rec));
    }
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(tasks, 1)));
  if (threads <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) run_task(t);
      });
    }
  }

  std::vector<TrialRecord> records;
  records.reserve(tasks * cfg.methods.size());
  for (auto& slot : slots) {
    for (auto& r : slot) records.push_back(std::move(r));
  }
  return records;
}

std::vector<double> mean_trace(const std::vector<TrialRecord>& records, Trace which) {
  auto pick = [which](const TrialRecord& r) -> const std::vector<double>& {
    switch (which) {
      case Trace::DetV: return r.det_v_trace;
      case Trace::FrobError: return r.frob_trace;
      case Trace::Cost: break;
    }
    return r.cost_trace;
  };
  std::size_t len = 0;
  for (const auto& r : records) {
    if (!r.failed && !r.det_v_trace.empty()) len = std::max(len, pick(r).size());
  }
  std::vector<double> sum(len, 0.0);
  std::size_t count = 0;
  for (const auto& r : records) {
    if (r.failed || r.det_v_trace.empty()) continue;
    const auto& t = pick(r);
    for (std::size_t k = 0; k < len; ++k) sum[k] += t[std::min(k, t.size() - 1)];
    ++count;
  }
  for (double& s : sum) s /= static_cast<double>(count);
  return sum;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

std::vector<Aggregate> aggregate(const std::vector<TrialRecord>& records) {
  using Key = std::tuple<std::size_t, double, int>;
  std::vector<Key> order;
  std::map<Key, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) {
    const Key key{r.n_points, r.sigma_obj, static_cast<int>(r.method)};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }

  std::vector<Aggregate> rows;
  for (const Key& key : order) {
    const auto& group = groups[key];
    Aggregate a;
    a.n_points = std::get<0>(key);
    a.sigma_obj = std::get<1>(key);
    a.method = static_cast<Method>(std::get<2>(key));
    std::vector<double> rot, trans, time, iters;
    for (const TrialRecord* r : group) {
      ++a.trials;
      if (r->failed) {
        ++a.failures;
        continue;
      }
      rot.push_back(r->e_rot_deg);
      trans.push_back(r->e_trans_rel);
      time.push_back(r->time_us);
      iters.push_back(r->outer_iterations);
    }
    a.mean_e_rot = mean(rot);
    a.median_e_rot = median(rot);
    a.mean_e_trans = mean(trans);
    a.median_e_trans = median(trans);
    a.mean_time_us = mean(time);
    a.mean_outer_iterations = mean(iters);
    rows.push_back(a);
  }
  return rows;
}

void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  os << "method,n_points,sigma_obj,sigma_img,trial,e_rot_deg,e_trans_rel,time_us,outer_iters,converged,failed\n";
  for (const auto& r : records) {
    os << to_string(r.method) << ',' << r.n_points << ',' << fmt(r.sigma_obj) << ',' << fmt(r.sigma_img)
       << ',' << r.trial << ',' << fmt(r.e_rot_deg) << ',' << fmt(r.e_trans_rel) << ','
       << fmt(std::round(r.time_us * 1000.0) / 1000.0) << ',' << r.outer_iterations << ','
       << (r.converged ? 1 : 0) << ',' << (r.failed ? 1 : 0) << '\n';
  }
}

void write_iterations_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  os << "method,trial,iteration,det_V,frob_err,cost\n";
  for (const auto& r : records) {
    for (std::size_t k = 0; k < r.det_v_trace.size(); ++k) {
      os << to_string(r.method) << ',' << r.trial << ',' << k << ',' << fmt(r.det_v_trace[k]) << ','
         << fmt(r.frob_trace[k]) << ',' << fmt(r.cost_trace[k]) << '\n';
    }
  }
}

void print_summary(std::ostream& os, const std::vector<Aggregate>& rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %6s %8s %12s %12s %12s %12s %10s %6s %5s\n", "method", "n", "sigma",
                "mean_e_rot", "med_e_rot", "mean_e_tr", "med_e_tr", "mean_us", "iters", "fail");
  os << line;
  for (const auto& a : rows) {
    std::snprintf(line, sizeof line, "%-12s %6zu %8.4g %12.6g %12.6g %12.6g %12.6g %10.1f %6.2f %5d\n",
                  to_string(a.method).c_str(), a.n_points, a.sigma_obj, a.mean_e_rot, a.median_e_rot,
                  a.mean_e_trans, a.median_e_trans, a.mean_time_us, a.mean_outer_iterations, a.failures);
    os << line;
  }
}

}  // namespace gmlpnp::bench
