#include "hope/geometry.hpp"

#include "hope/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <cmath>
#include <limits>

namespace hope {

Tensor project(const Tensor& points3d, const Camera& camera) {
  if (points3d.cols() != 3) throw DimensionError("project: expected N x 3 points, got " + points3d.shape_string());
  const std::size_t n = points3d.rows();
  Tensor out = Tensor::zeros(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = points3d(i, 2);
    if (!(z > 0.0)) throw DomainError("project: point " + std::to_string(i) + " has non-positive depth");
    out(i, 0) = camera.fx * points3d(i, 0) / z + camera.cx;
    out(i, 1) = camera.fy * points3d(i, 1) / z + camera.cy;
  }
  return out;
}

std::array<Eigen::Vector3d, 8> OrientedBox::corners() const {
  std::array<Eigen::Vector3d, 8> out;
  for (unsigned c = 0; c < 8; ++c) {
    Eigen::Vector3d p = center;
    for (int b = 0; b < 3; ++b) {
      const double sign = (c >> b) & 1u ? 1.0 : -1.0;
      p += sign * half_extents[b] * axes.col(b);
    }
    out[c] = p;
  }
  return out;
}

OrientedBox obb_from_points(std::span<const Eigen::Vector3d> vertices) {
  if (vertices.size() < 3) throw GeometryError("obb_from_points: need at least 3 vertices");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& v : vertices) mean += v;
  mean /= static_cast<double>(vertices.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& v : vertices) {
    const Eigen::Vector3d d = v - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(vertices.size());
  if (!cov.allFinite()) throw GeometryError("obb_from_points: non-finite vertices");

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  if (solver.info() != Eigen::Success) throw GeometryError("obb_from_points: eigen decomposition failed");
  const Eigen::Vector3d values = solver.eigenvalues(); // ascending
  if (!(values[2] > 0.0) || values[0] <= 1e-12 * values[2]) {
    throw GeometryError("obb_from_points: vertices are rank deficient (collinear or coplanar)");
  }

  OrientedBox box;
  for (int b = 0; b < 3; ++b) {
    Eigen::Vector3d axis = solver.eigenvectors().col(2 - b);
    Eigen::Index largest = 0;
    axis.cwiseAbs().maxCoeff(&largest);
    if (axis[largest] < 0.0) axis = -axis;
    box.axes.col(b) = axis.normalized();
  }
  box.axes.col(2) = box.axes.col(0).cross(box.axes.col(1)).normalized();

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& v : vertices) {
    const Eigen::Vector3d local = box.axes.transpose() * v;
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }
  box.center = box.axes * (0.5 * (lo + hi));
  box.half_extents = 0.5 * (hi - lo);
  return box;
}

Eigen::Matrix3d euler_zyx(const Eigen::Vector3d& angles) {
  return (Eigen::AngleAxisd(angles.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(angles.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(angles.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

} // namespace hope
