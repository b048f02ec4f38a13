#include "gmlpnp/io.hpp"

#include <Eigen/Geometry>

namespace gmlpnp::io {
namespace {

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw SchemaError(field, "expected a number");
  return j.get<double>();
}

double number_field(const json& j, const std::string& key, const std::string& path) {
  return number(require(j, key, path), join(path, key));
}

double optional_number(const json& j, const std::string& key, const std::string& path, double fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, join(path, key));
}

template <int N>
Eigen::Matrix<double, N, 1> vector_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    throw SchemaError(field, "expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int k = 0; k < N; ++k) v(k) = number(j[static_cast<std::size_t>(k)], field);
  return v;
}

template <typename Derived>
json array_of(const Eigen::MatrixBase<Derived>& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  }
  return a;
}

Mat3 matrix_from(const json& j, const std::string& field) {
  const auto v = vector_from<9>(j, field);
  Mat3 m;
  m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return m;
}

}  // namespace

json rotation_to_json(const Rotation3& r) {
  Eigen::Quaterniond q(r.matrix());
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return json::array({q.w(), q.x(), q.y(), q.z()});
}

Rotation3 rotation_from_json(const json& j, const std::string& field) {
  const Eigen::Vector4d v = vector_from<4>(j, field);
  if (!(v.norm() > 0.0)) throw SchemaError(field, "quaternion must be non-zero");
  Eigen::Quaterniond q(v(0), v(1), v(2), v(3));
  q.normalize();
  return Rotation3::from_matrix(q.toRotationMatrix());
}

json pose_to_json(const Pose& p) {
  return json{{"rotation_wxyz", rotation_to_json(p.rotation)}, {"translation", array_of(p.translation)}};
}

Pose pose_from_json(const json& j, const std::string& field) {
  return Pose{rotation_from_json(require(j, "rotation_wxyz", field), join(field, "rotation_wxyz")),
              vector_from<3>(require(j, "translation", field), join(field, "translation"))};
}

json camera_to_json(const CameraModel& camera) {
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PinholeIntrinsics>) {
          return {{"model", "pinhole"}, {"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
        } else {
          return {{"model", "mei"}, {"xi", k.xi}, {"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
                  {"cy", k.cy},     {"k1", k.k1}, {"k2", k.k2}, {"p1", k.p1}, {"p2", k.p2}};
        }
      },
      camera);
}

CameraModel camera_from_json(const json& j, const std::string& field) {
  const json& model = require(j, "model", field);
  if (!model.is_string()) throw SchemaError(join(field, "model"), "expected a string");
  const std::string name = model.get<std::string>();
  try {
    if (name == "pinhole") {
      PinholeIntrinsics k{number_field(j, "fx", field), number_field(j, "fy", field),
                          number_field(j, "cx", field), number_field(j, "cy", field)};
      validate(k);
      return k;
    }
    if (name == "mei") {
      MeiIntrinsics k;
      k.xi = number_field(j, "xi", field);
      k.fx = number_field(j, "fx", field);
      k.fy = number_field(j, "fy", field);
      k.cx = number_field(j, "cx", field);
      k.cy = number_field(j, "cy", field);
      k.k1 = optional_number(j, "k1", field, 0.0);
      k.k2 = optional_number(j, "k2", field, 0.0);
      k.p1 = optional_number(j, "p1", field, 0.0);
      k.p2 = optional_number(j, "p2", field, 0.0);
      validate(k);
      return k;
    }
  } catch (const PnpError& ex) {
    throw SchemaError(field, ex.what());
  }
  throw SchemaError(join(field, "model"), "unknown camera model '" + name + "'");
}

CaseFile case_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("<root>", "expected an object");
  CaseFile out;
  if (const auto it = j.find("camera"); it != j.end()) out.camera = camera_from_json(*it, "camera");

  const json& list = require(j, "correspondences", "");
  if (!list.is_array()) throw SchemaError("correspondences", "expected an array");
  out.correspondences.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "correspondences[" + std::to_string(i) + "]";
    const json& c = list[i];
    const Vec3 object = vector_from<3>(require(c, "object", path), path + ".object");
    if (!object.allFinite()) throw SchemaError(path + ".object", "non-finite coordinate");

    if (const auto ray = c.find("ray"); ray != c.end()) {
      try {
        out.correspondences.push_back({object, UnitRay::from_vector(vector_from<3>(*ray, path + ".ray"))});
      } catch (const PnpError& ex) {
        throw SchemaError(path + ".ray", ex.what());
      }
    } else if (const auto pixel = c.find("pixel"); pixel != c.end()) {
      const ImagePoint u = vector_from<2>(*pixel, path + ".pixel");
      if (!out.camera) throw SchemaError("camera", "required when correspondences use pixels");
      try {
        out.correspondences.push_back({object, unproject(*out.camera, u)});
      } catch (const PnpError& ex) {
        throw SchemaError(path + ".pixel", ex.what());
      }
    } else {
      throw SchemaError(path + ".ray", "missing required field (or pixel)");
    }
  }

  if (const auto it = j.find("ground_truth"); it != j.end()) out.ground_truth = pose_from_json(*it, "ground_truth");
  if (const auto it = j.find("initial_pose"); it != j.end()) out.initial_pose = pose_from_json(*it, "initial_pose");
  return out;
}

json scene_to_case_json(const bench::Scene& scene, const CameraModel& camera) {
  json list = json::array();
  for (std::size_t i = 0; i < scene.noisy.size(); ++i) {
    list.push_back({{"object", array_of(scene.noisy[i].object)},
                    {"pixel", array_of(scene.noisy_pixels[i])},
                    {"ray", array_of(scene.noisy[i].ray.direction())}});
  }
  return json{{"camera", camera_to_json(camera)},
              {"correspondences", std::move(list)},
              {"ground_truth", pose_to_json(scene.truth.pose)},
              {"true_covariance", array_of(scene.truth.covariance)}};
}

json report_to_json(const SolveReport& report) {
  json iterations = json::array();
  for (const auto& it : report.iterations) {
    iterations.push_back({{"iteration", it.iteration},
                          {"covariance", array_of(it.covariance)},
                          {"det_V", it.det_v},
                          {"cost", it.cost},
                          {"negative_scale_count", it.negative_scale_count},
                          {"gn_iterations", it.gn_iterations}});
  }
  return json{{"pose", pose_to_json(report.pose)},
              {"covariance", array_of(report.covariance)},
              {"scales", report.scales},
              {"iterations", std::move(iterations)},
              {"outer_iterations", report.outer_iterations()},
              {"converged", report.converged}};
}

SolveReport report_from_json(const json& j) {
  SolveReport r;
  r.pose = pose_from_json(require(j, "pose", ""), "pose");
  r.covariance = matrix_from(require(j, "covariance", ""), "covariance");
  const json& scales = require(j, "scales", "");
  if (!scales.is_array()) throw SchemaError("scales", "expected an array");
  for (const auto& s : scales) r.scales.push_back(number(s, "scales"));
  const json& iterations = require(j, "iterations", "");
  if (!iterations.is_array()) throw SchemaError("iterations", "expected an array");
  for (std::size_t i = 0; i < iterations.size(); ++i) {
    const std::string path = "iterations[" + std::to_string(i) + "]";
    const json& it = iterations[i];
    IterationDiagnostics d;
    d.iteration = static_cast<int>(number_field(it, "iteration", path));
    d.covariance = matrix_from(require(it, "covariance", path), path + ".covariance");
    d.det_v = number_field(it, "det_V", path);
    d.cost = number_field(it, "cost", path);
    d.negative_scale_count = static_cast<int>(number_field(it, "negative_scale_count", path));
    d.gn_iterations = static_cast<int>(optional_number(it, "gn_iterations", path, 0.0));
    r.iterations.push_back(d);
  }
  const json& converged = require(j, "converged", "");
  if (!converged.is_boolean()) throw SchemaError("converged", "expected a boolean");
  r.converged = converged.get<bool>();
  return r;
}

}  // namespace gmlpnp::io
