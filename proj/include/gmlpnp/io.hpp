#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmlpnp/bench.hpp"
#include "gmlpnp/camera.hpp"
#include "gmlpnp/geometry.hpp"
#include "gmlpnp/gml_solver.hpp"

namespace gmlpnp::io {

using nlohmann::json;

/// Malformed input; field() names the offending JSON path.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A solve input: optional camera, correspondences given by ray or by pixel,
/// optional ground truth and initial pose.
struct CaseFile {
  std::optional<CameraModel> camera;
  std::vector<Correspondence> correspondences;
  std::optional<Pose> ground_truth;
  std::optional<Pose> initial_pose;
};

/// Rotation as a unit quaternion [w, x, y, z] with w >= 0.
json rotation_to_json(const Rotation3& r);
Rotation3 rotation_from_json(const json& j, const std::string& field);

json pose_to_json(const Pose& p);
Pose pose_from_json(const json& j, const std::string& field);

json camera_to_json(const CameraModel& camera);
CameraModel camera_from_json(const json& j, const std::string& field = "camera");

/// Rays take precedence over pixels when both are present.
CaseFile case_from_json(const json& j);

/// Writes a benchmark scene as a case file with camera, noisy pixels and the
/// corresponding rays, and the ground-truth pose.
json scene_to_case_json(const bench::Scene& scene, const CameraModel& camera);

json report_to_json(const SolveReport& report);
SolveReport report_from_json(const json& j);

}  // namespace gmlpnp::io
