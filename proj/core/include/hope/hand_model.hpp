#pragma once

#include "hope/tensor.hpp"

#include <Eigen/Core>

#include <array>

namespace hope {

struct FingerPose {
  double abduction = 0.0;   // about the palm normal at the MCP, radians
  double mcp_flexion = 0.0; // toward the palm, radians
  double pip_flexion = 0.0;
  double dip_flexion = 0.0;
};

struct AngleRange {
  double lo;
  double hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Allowed joint angles in radians (degrees in parentheses):
//   fingers: abduction [-25, 25], MCP [-30, 90], PIP [0, 110], DIP [0, 90]
//   thumb:   abduction [-30, 45], MCP [-20, 60], PIP [0, 80],  DIP [0, 90]
struct FingerLimits {
  AngleRange abduction;
  AngleRange mcp;
  AngleRange pip;
  AngleRange dip;
};
const FingerLimits& finger_limits(std::size_t finger);

/// Hand pose for the 21-joint model.
///
/// Hand frame: +y runs from wrist toward the fingers, +z is the palm normal,
/// +x completes a right-handed frame. Finger f leaves the wrist at a fixed
/// splay angle about +z (see kFingerSplay); the thumb chain is additionally
/// rolled about its own direction by kThumbRoll. Joints chain as
///
///   T = T_wrist * Rz(splay) * Ty(metacarpal) * Ry(roll) * Rz(abduction)
///       * Rx(mcp) * Ty(l0) * Rx(pip) * Ty(l1) * Rx(dip) * Ty(l2)
///
/// with the MCP, PIP, DIP and TIP positions read off after each Ty.
struct HandPoseParams {
  Eigen::Vector3d wrist_rotation = Eigen::Vector3d::Zero(); // euler_zyx angles, radians
  Eigen::Vector3d wrist_translation = Eigen::Vector3d::Zero(); // mm, camera frame
  std::array<FingerPose, 5> fingers{};
  std::array<double, 5> metacarpal_lengths{};
  std::array<std::array<double, 3>, 5> phalanx_lengths{};
};

inline constexpr std::array<double, 5> kFingerSplay{0.75, 0.17, 0.0, -0.15, -0.32};
inline constexpr double kThumbRoll = 1.0;

// Adult-sized bone lengths in mm, all angles zero, wrist at the origin.
HandPoseParams default_hand();

// Throws DomainError for angles outside finger_limits() or non-positive lengths.
void validate(const HandPoseParams& params);

// 21 x 3 joint positions in mm, ordered as in keypoints (wrist first).
Tensor forward_kinematics(const HandPoseParams& params);

} // namespace hope
