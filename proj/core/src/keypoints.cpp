#include "hope/keypoints.hpp"

#include "hope/errors.hpp"

#include <bit>

namespace hope::keypoints {

const std::array<std::string, kNodes>& node_names() {
  static const std::array<std::string, kNodes> names = [] {
    std::array<std::string, kNodes> n;
    const char* joints[] = {"mcp", "pip", "dip", "tip"};
    n[kWrist] = "wrist";
    for (std::size_t f = 0; f < kFingers; ++f) {
      for (std::size_t j = 0; j < kJointsPerFinger; ++j) {
        n[finger_node(f, j)] = finger_names()[f] + "_" + joints[j];
      }
    }
    for (std::size_t c = 0; c < kObjectNodes; ++c) n[corner_node(c)] = "c" + std::to_string(c);
    return n;
  }();
  return names;
}

const std::array<std::string, kFingers>& finger_names() {
  static const std::array<std::string, kFingers> names{"thumb", "index", "middle", "ring", "pinky"};
  return names;
}

JointType joint_type(std::size_t node) {
  if (node >= kNodes) throw UsageError("keypoint index out of range");
  if (node == kWrist) return JointType::wrist;
  if (node >= kHandNodes) return JointType::corner;
  switch ((node - 1) % kJointsPerFinger) {
  case 0: return JointType::mcp;
  case 1: return JointType::pip;
  case 2: return JointType::dip;
  default: return JointType::tip;
  }
}

std::string to_string(JointType type) {
  switch (type) {
  case JointType::wrist: return "wrist";
  case JointType::mcp: return "MCP";
  case JointType::pip: return "PIP";
  case JointType::dip: return "DIP";
  case JointType::tip: return "TIP";
  case JointType::corner: return "corner";
  }
  return "?";
}

int finger_of(std::size_t node) {
  if (node == kWrist || node >= kHandNodes) return -1;
  return static_cast<int>((node - 1) / kJointsPerFinger);
}

bool is_hand(std::size_t node) { return node < kHandNodes; }

std::vector<std::pair<std::size_t, std::size_t>> skeleton_edges() {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t f = 0; f < kFingers; ++f) {
    edges.emplace_back(kWrist, finger_node(f, 0));
    for (std::size_t j = 0; j + 1 < kJointsPerFinger; ++j) edges.emplace_back(finger_node(f, j), finger_node(f, j + 1));
  }
  for (unsigned a = 0; a < kObjectNodes; ++a) {
    for (unsigned b = a + 1; b < kObjectNodes; ++b) {
      if (std::popcount(a ^ b) == 1) edges.emplace_back(corner_node(a), corner_node(b));
    }
  }
  return edges;
}

Tensor skeleton_adjacency() {
  Tensor a = Tensor::zeros(kNodes, kNodes);
  for (auto [i, j] : skeleton_edges()) {
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

const std::vector<NodeGrouping>& default_groupings() {
  static const std::vector<NodeGrouping> groupings = [] {
    // 29 -> 15: wrist, {MCP,PIP} and {DIP,TIP} per finger, corner pairs along box axis 0.
    NodeGrouping g1{kNodes, {{kWrist}}};
    for (std::size_t f = 0; f < kFingers; ++f) {
      g1.groups.push_back({finger_node(f, 0), finger_node(f, 1)});
      g1.groups.push_back({finger_node(f, 2), finger_node(f, 3)});
    }
    for (std::size_t c = 0; c < kObjectNodes; c += 2) g1.groups.push_back({corner_node(c), corner_node(c + 1)});

    // 15 -> 8: wrist, one group per finger, box halves along axis 1.
    NodeGrouping g2{15, {{0}}};
    for (std::size_t f = 0; f < kFingers; ++f) g2.groups.push_back({1 + 2 * f, 2 + 2 * f});
    g2.groups.push_back({11, 12});
    g2.groups.push_back({13, 14});

    // 8 -> 4: wrist+thumb, index+middle, ring+pinky, box.
    NodeGrouping g3{8, {{0, 1}, {2, 3}, {4, 5}, {6, 7}}};

    std::vector<NodeGrouping> all{g1, g2, g3};
    for (const auto& g : all) g.validate();
    return all;
  }();
  return groupings;
}

Tensor coarsen_adjacency(const Tensor& fine, const NodeGrouping& grouping) {
  grouping.validate();
  if (fine.rows() != grouping.n_in || fine.cols() != grouping.n_in) {
    throw DimensionError("coarsen_adjacency: adjacency size does not match the grouping");
  }
  std::vector<std::size_t> owner(grouping.n_in);
  for (std::size_t g = 0; g < grouping.n_out(); ++g) {
    for (std::size_t node : grouping.groups[g]) owner[node] = g;
  }
  Tensor coarse = Tensor::zeros(grouping.n_out(), grouping.n_out());
  for (std::size_t i = 0; i < grouping.n_in; ++i) {
    for (std::size_t j = 0; j < grouping.n_in; ++j) {
      if (fine(i, j) != 0.0 && owner[i] != owner[j]) coarse(owner[i], owner[j]) = 1.0;
    }
  }
  return coarse;
}

} // namespace hope::keypoints
