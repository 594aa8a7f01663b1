#pragma once

#include "hope/tensor.hpp"

#include <Eigen/Core>

#include <array>
#include <span>

namespace hope {

struct Camera {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 320.0;

  bool operator==(const Camera&) const = default;
};

// Pinhole projection of N x 3 camera-frame points (mm) to N x 2 pixels:
// u = fx x / z + cx, v = fy y / z + cy. Throws DomainError for z <= 0.
Tensor project(const Tensor& points3d, const Camera& camera);

/// Box from principal component analysis of a vertex cloud.
///
/// Axes are the covariance eigenvectors, largest variance first, each
/// signed so its largest-magnitude component is positive, with the third
/// axis replaced by axis0 x axis1 to keep the frame right-handed. Corner c
/// sits at center + sum_b s_b * half_extents[b] * axes.col(b) with
/// s_b = +1 when bit b of c is set and -1 otherwise.
struct OrientedBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();

  std::array<Eigen::Vector3d, 8> corners() const;
  double volume() const { return 8.0 * half_extents.prod(); }
};

// Throws GeometryError for fewer than 3 points or a rank-deficient spread.
OrientedBox obb_from_points(std::span<const Eigen::Vector3d> vertices);

// Rotation R = Rz(angles.z) * Ry(angles.y) * Rx(angles.x), radians.
Eigen::Matrix3d euler_zyx(const Eigen::Vector3d& angles);

} // namespace hope
