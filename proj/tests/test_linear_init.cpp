#include <doctest.h>

#include <random>

#include "gmlpnp/bench.hpp"
#include "gmlpnp/gml_solver.hpp"
#include "gmlpnp/linear_init.hpp"
#include "test_support.hpp"

using namespace gmlpnp;
using namespace gmlpnp::testing;

TEST_CASE("orthogonal complement is an orthonormal basis, including at the poles") {
  std::mt19937_64 rng(1);
  std::vector<Vec3> dirs{Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(1, 0, 0), Vec3(0, -1, 0)};
  for (int i = 0; i < 200; ++i) dirs.push_back(random_vec(rng).normalized());
  for (const Vec3& m : dirs) {
    const auto [r, s] = orthogonal_complement(m);
    CHECK(std::abs(r.norm() - 1.0) < 1e-14);
    CHECK(std::abs(s.norm() - 1.0) < 1e-14);
    CHECK(std::abs(r.dot(s)) < 1e-14);
    CHECK(std::abs(r.dot(m)) < 1e-14);
    CHECK(std::abs(s.dot(m)) < 1e-14);
  }
}

TEST_CASE("noise-free recovery at random poses") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose truth = random_pose(rng);
    const auto data = exact_correspondences(truth, 20, rng);
    const Pose est = solve_linear_init(data);
    CHECK(rotation_angle_deg(truth.rotation, est.rotation) < 1e-6);
    CHECK(relative_translation(truth.translation, est.translation) < 1e-8);
    CHECK(Rotation3::orthonormality_error(est.rotation.matrix()) <= tolerance::kRotation);
  }
}

TEST_CASE("identity pose is recovered") {
  std::mt19937_64 rng(8);
  const Pose truth{Rotation3::identity(), Vec3(0.0, 0.0, 0.0)};
  const auto data = exact_correspondences(truth, 20, rng);
  const Pose est = solve_linear_init(data);
  CHECK(rotation_angle_deg(truth.rotation, est.rotation) < 1e-6);
  CHECK(est.translation.norm() < 1e-8);
}

TEST_CASE("error paths") {
  std::mt19937_64 rng(9);
  const Pose truth = random_pose(rng);
  const auto data = exact_correspondences(truth, 5, rng);
  try {
    solve_linear_init(data);
    FAIL("expected InsufficientPoints");
  } catch (const PnpError& e) {
    CHECK(e.code() == ErrorCode::InsufficientPoints);
  }

  // All object points on the plane z = 1 in the world frame.
  std::vector<Correspondence> planar;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Vec3 p(u(rng), u(rng), 1.0);
    const Vec3 xc = truth.inverse().transform(p);
    planar.push_back({p, UnitRay::from_vector(xc)});
  }
  try {
    solve_linear_init(planar);
    FAIL("expected DegenerateGeometry");
  } catch (const PnpError& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
  }
}

TEST_CASE("equivariance under a rigid transform of the object points") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose truth = random_pose(rng);
    const auto data = exact_correspondences(truth, 20, rng);
    const Pose g = random_pose(rng);
    std::vector<Correspondence> moved;
    for (const auto& c : data) moved.push_back({g.transform(c.object), c.ray});
    const Pose a = solve_linear_init(data);
    const Pose b = solve_linear_init(moved);
    const Pose expected = g * a;
    CHECK(rotation_angle_deg(expected.rotation, b.rotation) < 1e-8);
    CHECK((expected.translation - b.translation).norm() < 1e-8 * std::max(1.0, expected.translation.norm()));
  }
}

TEST_CASE("noisy initializer stays within 3x of the converged solver") {
  std::vector<double> init_err, gml_err;
  for (int trial = 0; trial < 100; ++trial) {
    bench::SceneConfig sc;
    sc.n_points = 50;
    sc.rng_seed = bench::trial_seed(2024, 0, trial);
    const bench::Scene scene = bench::generate_scene(sc, {0.1, 1.0});
    const Pose init = solve_linear_init(scene.noisy);
    init_err.push_back(bench::rotation_error(scene.truth.pose.rotation, init.rotation));
    const SolveReport rep = solve(scene.noisy, init);
    gml_err.push_back(bench::rotation_error(scene.truth.pose.rotation, rep.pose.rotation));
  }
  const double init_mean = bench::mean(init_err);
  const double gml_mean = bench::mean(gml_err);
  MESSAGE("linear init mean e_rot " << init_mean << ", solver mean e_rot " << gml_mean);
  CHECK(init_mean < 3.0 * gml_mean);
}
