#pragma once

#include "hope/tensor.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hope {

enum class KeypointSubset { all, hand, object };

std::string to_string(KeypointSubset subset);
std::vector<std::size_t> subset_nodes(KeypointSubset subset);

// Mean Euclidean distance over the subset's keypoints of one 29 x D sample.
double mean_keypoint_error(const Tensor& pred, const Tensor& gt, KeypointSubset subset = KeypointSubset::all);

// Per-sample mean errors. Throws DimensionError on a length or shape mismatch.
std::vector<double> sample_errors(std::span<const Tensor> preds, std::span<const Tensor> gts,
                                  KeypointSubset subset = KeypointSubset::all);

// Mean of sample_errors.
double mean_error(std::span<const Tensor> preds, std::span<const Tensor> gts,
                  KeypointSubset subset = KeypointSubset::all);

// Fraction of samples whose mean keypoint error is strictly below `threshold`
// (so 0 at threshold 0). Negative or NaN thresholds throw DomainError.
double pcp(std::span<const Tensor> preds, std::span<const Tensor> gts, double threshold,
           KeypointSubset subset = KeypointSubset::all);

struct PcpCurve {
  std::vector<double> thresholds; // strictly ascending
  std::vector<double> fractions;  // in [0, 1]

  // Throws UsageError on length mismatch, fewer than two points,
  // thresholds that are not strictly ascending or fractions outside [0, 1].
  void validate() const;
};

PcpCurve pcp_curve(std::span<const Tensor> preds, std::span<const Tensor> gts, std::span<const double> thresholds,
                   KeypointSubset subset = KeypointSubset::all);

// `count` evenly spaced values from lo to hi inclusive.
std::vector<double> linear_thresholds(double lo, double hi, std::size_t count);

// Trapezoidal area under the curve divided by the threshold span.
double auc(const PcpCurve& curve);

struct PerJointErrors {
  std::array<double, 29> per_node{};
  std::vector<std::pair<std::string, double>> by_joint_type; // wrist, MCP, PIP, DIP, TIP, corner
  std::vector<std::pair<std::string, double>> by_finger;     // thumb..pinky, MCP through TIP
  double global_mean = 0.0;
};

PerJointErrors per_joint_errors(std::span<const Tensor> preds, std::span<const Tensor> gts);

// Splits a (B*29) x D stack into B tensors of 29 x D.
std::vector<Tensor> split_samples(const Tensor& stacked);

// Two columns, header "threshold,fraction".
void write_pcp_csv(std::ostream& out, const PcpCurve& curve);
PcpCurve read_pcp_csv(std::istream& in);

} // namespace hope
