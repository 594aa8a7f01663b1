#include "hope/hand_model.hpp"

#include "hope/errors.hpp"
#include "hope/geometry.hpp"
#include "hope/keypoints.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace hope {

namespace {

constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

Eigen::Matrix3d rot_x(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix(); }
Eigen::Matrix3d rot_y(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix(); }
Eigen::Matrix3d rot_z(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

} // namespace

const FingerLimits& finger_limits(std::size_t finger) {
  static const FingerLimits thumb{{deg(-30), deg(45)}, {deg(-20), deg(60)}, {0.0, deg(80)}, {0.0, deg(90)}};
  static const FingerLimits other{{deg(-25), deg(25)}, {deg(-30), deg(90)}, {0.0, deg(110)}, {0.0, deg(90)}};
  if (finger >= 5) throw UsageError("finger index out of range");
  return finger == 0 ? thumb : other;
}

HandPoseParams default_hand() {
  HandPoseParams p;
  p.metacarpal_lengths = {35.0, 90.0, 88.0, 82.0, 76.0};
  p.phalanx_lengths = {{{40.0, 32.0, 28.0}, {42.0, 25.0, 21.0}, {46.0, 28.0, 22.0}, {43.0, 27.0, 22.0}, {34.0, 20.0, 19.0}}};
  return p;
}

void validate(const HandPoseParams& params) {
  auto check = [](const AngleRange& r, double v, const std::string& what) {
    if (!std::isfinite(v) || !r.contains(v)) throw DomainError("hand pose: " + what + " angle out of range");
  };
  for (std::size_t f = 0; f < 5; ++f) {
    const auto& lim = finger_limits(f);
    const auto& pose = params.fingers[f];
    const std::string name = keypoints::finger_names()[f];
    check(lim.abduction, pose.abduction, name + " abduction");
    check(lim.mcp, pose.mcp_flexion, name + " MCP");
    check(lim.pip, pose.pip_flexion, name + " PIP");
    check(lim.dip, pose.dip_flexion, name + " DIP");
    if (!(params.metacarpal_lengths[f] > 0.0)) throw DomainError("hand pose: " + name + " metacarpal length must be positive");
    for (double l : params.phalanx_lengths[f]) {
      if (!(l > 0.0)) throw DomainError("hand pose: " + name + " bone length must be positive");
    }
  }
  if (!params.wrist_rotation.allFinite() || !params.wrist_translation.allFinite()) {
    throw DomainError("hand pose: wrist pose is not finite");
  }
}

Tensor forward_kinematics(const HandPoseParams& params) {
  validate(params);
  Tensor joints = Tensor::zeros(keypoints::kHandNodes, 3);
  auto store = [&joints](std::size_t node, const Eigen::Vector3d& p) {
    for (int k = 0; k < 3; ++k) joints(node, k) = p[k];
  };
  const Eigen::Matrix3d wrist_rot = euler_zyx(params.wrist_rotation);
  const Eigen::Vector3d& wrist = params.wrist_translation;
  store(keypoints::kWrist, wrist);

  const Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  for (std::size_t f = 0; f < 5; ++f) {
    Eigen::Matrix3d rot = wrist_rot * rot_z(kFingerSplay[f]);
    Eigen::Vector3d pos = wrist + rot * (params.metacarpal_lengths[f] * up);
    store(keypoints::finger_node(f, 0), pos);

    const FingerPose& pose = params.fingers[f];
    if (f == 0) rot = rot * rot_y(kThumbRoll);
    rot = rot * rot_z(pose.abduction) * rot_x(pose.mcp_flexion);
    const double flex[] = {pose.pip_flexion, pose.dip_flexion};
    for (std::size_t j = 0; j < 3; ++j) {
      pos += rot * (params.phalanx_lengths[f][j] * up);
      store(keypoints::finger_node(f, j + 1), pos);
      if (j < 2) rot = rot * rot_x(flex[j]);
    }
  }
  return joints;
}

} // namespace hope
