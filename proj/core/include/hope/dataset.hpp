#pragma once

#include "hope/geometry.hpp"
#include "hope/hand_model.hpp"
#include "hope/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hope {

inline constexpr int kDatasetSchemaVersion = 1;

struct SampleRecord {
  std::string id;
  Tensor gt3d; // 29 x 3, mm, camera frame
  Tensor gt2d; // 29 x 2, px
  Camera camera;
  std::string subject = "synthetic";
  std::string object = "box";
};

using Dataset = std::vector<SampleRecord>;

/// Knobs for the synthetic grasp generator.
///
/// Each sample draws a hand (bone lengths scaled by a common factor,
/// grasp-like flexions, wrist turned so the fingers point up the image with
/// the palm away from the camera, then perturbed) and a box with random
/// dimensions and orientation. The box is centred halfway between the palm
/// centre and the fingertip centroid, pushed along the palm normal by half
/// its smallest side plus `palm_clearance`. Its corners come from
/// obb_from_points on a symmetric surface lattice of the box. Samples with
/// any depth outside [min_depth, max_depth] are redrawn.
struct GraspSpec {
  Camera camera;
  double min_depth = 300.0;
  double max_depth = 800.0;
  double wrist_depth_lo = 420.0;
  double wrist_depth_hi = 680.0;
  double hand_scale_lo = 0.85;
  double hand_scale_hi = 1.15;
  double wrist_tilt = 0.7; // max |perturbation| of each wrist euler angle, radians
  double box_short_lo = 40.0;
  double box_short_hi = 90.0;
  double box_long_lo = 80.0;
  double box_long_hi = 200.0;
  double palm_clearance = 15.0;
};

// One random grasp. The generator is seeded independently per sample index.
SampleRecord generate_sample(std::uint64_t seed, std::size_t index, const GraspSpec& spec = {});
Dataset generate_dataset(std::size_t n, std::uint64_t seed, const GraspSpec& spec = {});

// Box surface lattice used by the generator; symmetric under the box's reflections.
std::vector<Eigen::Vector3d> box_surface_lattice(const Eigen::Vector3d& center, const Eigen::Matrix3d& rotation,
                                                 const Eigen::Vector3d& half_extents, int steps = 4);

// Adds i.i.d. N(0, sigma^2) to every coordinate. Throws DomainError if sigma < 0.
Tensor add_noise(const Tensor& coords2d, double sigma, std::uint64_t seed);

// JSON-lines, one record per line:
//   {"schema_version":1,"id":"...","camera":{"fx":..,"fy":..,"cx":..,"cy":..},
//    "gt3d":[[x,y,z] x29],"gt2d":[[u,v] x29],"meta":{"subject":"..","object":".."}}
void save_dataset(std::ostream& out, std::span<const SampleRecord> records);
void save_dataset(const std::filesystem::path& path, std::span<const SampleRecord> records);
Dataset load_dataset(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);

// Rows of the selected records stacked into a (B*29) x C batch.
Tensor stack_gt2d(std::span<const SampleRecord> records, std::span<const std::size_t> indices);
Tensor stack_gt3d(std::span<const SampleRecord> records, std::span<const std::size_t> indices);

} // namespace hope
