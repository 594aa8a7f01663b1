#pragma once

#include "hope/graph_layers.hpp"
#include "hope/tensor.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace hope {

/// The 29-node hand-object graph.
///
/// Node order: 0 = wrist; 1 + 4*f + j for finger f (0 thumb, 1 index,
/// 2 middle, 3 ring, 4 pinky) and joint j (0 MCP, 1 PIP, 2 DIP, 3 TIP);
/// 21 + c for box corner c, where bit b of c selects the +/- side along box
/// axis b (c0 = (-,-,-), c7 = (+,+,+)).
namespace keypoints {

inline constexpr std::size_t kHandNodes = 21;
inline constexpr std::size_t kObjectNodes = 8;
inline constexpr std::size_t kNodes = kHandNodes + kObjectNodes;
inline constexpr std::size_t kFingers = 5;
inline constexpr std::size_t kJointsPerFinger = 4;
inline constexpr std::size_t kWrist = 0;

enum class JointType { wrist, mcp, pip, dip, tip, corner };

inline constexpr std::size_t finger_node(std::size_t finger, std::size_t joint) {
  return 1 + kJointsPerFinger * finger + joint;
}
inline constexpr std::size_t corner_node(std::size_t corner) { return kHandNodes + corner; }

const std::array<std::string, kNodes>& node_names();
const std::array<std::string, kFingers>& finger_names();
JointType joint_type(std::size_t node);
std::string to_string(JointType type);
// Finger index of a hand node other than the wrist; -1 for wrist and corners.
int finger_of(std::size_t node);
bool is_hand(std::size_t node);

// Undirected skeleton edges: wrist-MCP, consecutive finger joints, 12 box edges.
std::vector<std::pair<std::size_t, std::size_t>> skeleton_edges();

// 29x29 binary symmetric adjacency without self loops.
Tensor skeleton_adjacency();

// Groupings for the default 29 -> 15 -> 8 -> 4 node schedule, coarsest last.
const std::vector<NodeGrouping>& default_groupings();

// Binary adjacency of the grouped graph: two groups touch when any of their
// members share an edge in `fine`.
Tensor coarsen_adjacency(const Tensor& fine, const NodeGrouping& grouping);

} // namespace keypoints
} // namespace hope
