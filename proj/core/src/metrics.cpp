#include "hope/metrics.hpp"

#include "hope/errors.hpp"
#include "hope/keypoints.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace hope {

namespace kp = keypoints;

std::string to_string(KeypointSubset subset) {
  switch (subset) {
  case KeypointSubset::all: return "all";
  case KeypointSubset::hand: return "hand";
  case KeypointSubset::object: return "object";
  }
  return "?";
}

std::vector<std::size_t> subset_nodes(KeypointSubset subset) {
  std::vector<std::size_t> nodes;
  for (std::size_t k = 0; k < kp::kNodes; ++k) {
    const bool hand = kp::is_hand(k);
    if (subset == KeypointSubset::all || (subset == KeypointSubset::hand) == hand) nodes.push_back(k);
  }
  return nodes;
}

namespace {

void check_sample(const Tensor& pred, const Tensor& gt) {
  if (!pred.same_shape(gt) || pred.rows() != kp::kNodes || (pred.cols() != 2 && pred.cols() != 3)) {
    throw DimensionError("metrics: expected matching 29 x 2 or 29 x 3 samples, got " + pred.shape_string() +
                         " and " + gt.shape_string());
  }
}

void check_lists(std::span<const Tensor> preds, std::span<const Tensor> gts) {
  if (preds.size() != gts.size()) {
    throw DimensionError("metrics: " + std::to_string(preds.size()) + " predictions for " +
                         std::to_string(gts.size()) + " ground truths");
  }
}

double node_distance(const Tensor& pred, const Tensor& gt, std::size_t k) {
  double sq = 0.0;
  for (std::size_t c = 0; c < pred.cols(); ++c) {
    const double d = pred(k, c) - gt(k, c);
    sq += d * d;
  }
  return std::sqrt(sq);
}

} // namespace

double mean_keypoint_error(const Tensor& pred, const Tensor& gt, KeypointSubset subset) {
  check_sample(pred, gt);
  const auto nodes = subset_nodes(subset);
  double sum = 0.0;
  for (std::size_t k : nodes) sum += node_distance(pred, gt, k);
  return sum / static_cast<double>(nodes.size());
}

std::vector<double> sample_errors(std::span<const Tensor> preds, std::span<const Tensor> gts, KeypointSubset subset) {
  check_lists(preds, gts);
  std::vector<double> out(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) out[i] = mean_keypoint_error(preds[i], gts[i], subset);
  return out;
}

double mean_error(std::span<const Tensor> preds, std::span<const Tensor> gts, KeypointSubset subset) {
  const auto errors = sample_errors(preds, gts, subset);
  if (errors.empty()) throw UsageError("mean_error: no samples");
  double sum = 0.0;
  for (double e : errors) sum += e;
  return sum / static_cast<double>(errors.size());
}

double pcp(std::span<const Tensor> preds, std::span<const Tensor> gts, double threshold, KeypointSubset subset) {
  const double thresholds[] = {threshold};
  return pcp_curve(preds, gts, thresholds, subset).fractions.front();
}

void PcpCurve::validate() const {
  if (thresholds.size() != fractions.size()) throw UsageError("pcp curve: column lengths differ");
  if (thresholds.size() < 2) throw UsageError("pcp curve: need at least two thresholds");
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > thresholds[i - 1])) throw UsageError("pcp curve: thresholds are not strictly ascending");
  }
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw UsageError("pcp curve: fraction outside [0, 1]");
  }
}

PcpCurve pcp_curve(std::span<const Tensor> preds, std::span<const Tensor> gts, std::span<const double> thresholds,
                   KeypointSubset subset) {
  const auto errors = sample_errors(preds, gts, subset);
  if (errors.empty()) throw UsageError("pcp: no samples");
  PcpCurve curve;
  for (double t : thresholds) {
    if (!(t >= 0.0)) throw DomainError("pcp: thresholds must be non-negative");
    std::size_t hits = 0;
    for (double e : errors) hits += e < t ? 1 : 0;
    curve.thresholds.push_back(t);
    curve.fractions.push_back(static_cast<double>(hits) / static_cast<double>(errors.size()));
  }
  return curve;
}

std::vector<double> linear_thresholds(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) throw UsageError("thresholds: need count >= 2 and hi > lo");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

double auc(const PcpCurve& curve) {
  curve.validate();
  const auto& t = curve.thresholds;
  const auto& f = curve.fractions;
  double area = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) area += (t[i] - t[i - 1]) * (f[i] + f[i - 1]) / 2.0;
  return area / (t.back() - t.front());
}

PerJointErrors per_joint_errors(std::span<const Tensor> preds, std::span<const Tensor> gts) {
  check_lists(preds, gts);
  if (preds.empty()) throw UsageError("per_joint_errors: no samples");
  PerJointErrors out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    check_sample(preds[i], gts[i]);
    for (std::size_t k = 0; k < kp::kNodes; ++k) out.per_node[k] += node_distance(preds[i], gts[i], k);
  }
  const auto n = static_cast<double>(preds.size());
  double total = 0.0;
  for (double& e : out.per_node) {
    e /= n;
    total += e;
  }
  out.global_mean = total / static_cast<double>(kp::kNodes);

  auto group_mean = [&](auto&& member) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < kp::kNodes; ++k) {
      if (member(k)) {
        sum += out.per_node[k];
        ++count;
      }
    }
    return sum / static_cast<double>(count);
  };
  for (auto type : {kp::JointType::wrist, kp::JointType::mcp, kp::JointType::pip, kp::JointType::dip,
                    kp::JointType::tip, kp::JointType::corner}) {
    out.by_joint_type.emplace_back(kp::to_string(type),
                                   group_mean([type](std::size_t k) { return kp::joint_type(k) == type; }));
  }
  for (std::size_t f = 0; f < kp::kFingers; ++f) {
    out.by_finger.emplace_back(kp::finger_names()[f], group_mean([f](std::size_t k) {
                                 return kp::finger_of(k) == static_cast<int>(f);
                               }));
  }
  return out;
}

std::vector<Tensor> split_samples(const Tensor& stacked) {
  if (stacked.rows() % kp::kNodes != 0) throw DimensionError("split_samples: rows not a multiple of 29");
  const std::size_t cols = stacked.cols();
  const std::size_t block = kp::kNodes * cols;
  std::vector<Tensor> out;
  for (std::size_t b = 0; b < stacked.rows() / kp::kNodes; ++b) {
    Tensor t = Tensor::zeros(kp::kNodes, cols);
    std::copy_n(stacked.data().begin() + b * block, block, t.data().begin());
    out.push_back(std::move(t));
  }
  return out;
}

void write_pcp_csv(std::ostream& out, const PcpCurve& curve) {
  curve.validate();
  out << "threshold,fraction\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", curve.thresholds[i], curve.fractions[i]);
    out << buf;
  }
}

PcpCurve read_pcp_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "threshold,fraction") throw DataError("pcp csv: missing header");
  PcpCurve curve;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      curve.thresholds.push_back(std::stod(line.substr(0, comma)));
      curve.fractions.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw DataError("pcp csv line " + std::to_string(line_no) + ": malformed row");
    }
  }
  curve.validate();
  return curve;
}

} // namespace hope
