#include "hope/dataset.hpp"

#include "hope/errors.hpp"
#include "hope/keypoints.hpp"
#include "hope/random.hpp"

#include <json.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace hope {

using json = nlohmann::ordered_json;

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

HandPoseParams random_hand(Rng& rng, const GraspSpec& spec) {
  HandPoseParams p = default_hand();
  const double scale = uniform(rng, spec.hand_scale_lo, spec.hand_scale_hi);
  for (std::size_t f = 0; f < 5; ++f) {
    p.metacarpal_lengths[f] *= scale;
    for (double& l : p.phalanx_lengths[f]) l *= scale;
  }
  for (std::size_t f = 0; f < 5; ++f) {
    FingerPose& pose = p.fingers[f];
    if (f == 0) {
      pose.abduction = uniform(rng, deg(0), deg(30));
      pose.mcp_flexion = uniform(rng, deg(0), deg(40));
      pose.pip_flexion = uniform(rng, deg(0), deg(50));
      pose.dip_flexion = uniform(rng, deg(0), deg(60));
    } else {
      pose.abduction = uniform(rng, deg(-10), deg(10));
      pose.mcp_flexion = uniform(rng, deg(5), deg(60));
      pose.pip_flexion = uniform(rng, deg(10), deg(70));
      pose.dip_flexion = uniform(rng, deg(5), deg(50));
    }
  }
  // Fingers up the image (-y), palm facing away from the camera (+z).
  p.wrist_rotation = Eigen::Vector3d(uniform(rng, -spec.wrist_tilt, spec.wrist_tilt),
                                     uniform(rng, -spec.wrist_tilt, spec.wrist_tilt),
                                     std::numbers::pi + uniform(rng, -spec.wrist_tilt, spec.wrist_tilt));
  const double z = uniform(rng, spec.wrist_depth_lo, spec.wrist_depth_hi);
  p.wrist_translation = Eigen::Vector3d(uniform(rng, -0.2, 0.2) * z, uniform(rng, 0.0, 0.3) * z, z);
  return p;
}

Eigen::Vector3d row3(const Tensor& t, std::size_t r) { return {t(r, 0), t(r, 1), t(r, 2)}; }

std::string format_id(std::uint64_t seed, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "s%llu_%06zu", static_cast<unsigned long long>(seed), index);
  return buf;
}

} // namespace

std::vector<Eigen::Vector3d> box_surface_lattice(const Eigen::Vector3d& center, const Eigen::Matrix3d& rotation,
                                                 const Eigen::Vector3d& half_extents, int steps) {
  std::vector<Eigen::Vector3d> points;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      for (int k = 0; k <= steps; ++k) {
        if (i != 0 && i != steps && j != 0 && j != steps && k != 0 && k != steps) continue;
        const Eigen::Vector3d unit(2.0 * i / steps - 1.0, 2.0 * j / steps - 1.0, 2.0 * k / steps - 1.0);
        points.push_back(center + rotation * unit.cwiseProduct(half_extents));
      }
    }
  }
  return points;
}

SampleRecord generate_sample(std::uint64_t seed, std::size_t index, const GraspSpec& spec) {
  Rng rng(splitmix64(seed ^ splitmix64(index)));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const HandPoseParams hand = random_hand(rng, spec);
    const Tensor joints = forward_kinematics(hand);

    Eigen::Vector3d palm = row3(joints, keypoints::kWrist);
    Eigen::Vector3d tips = Eigen::Vector3d::Zero();
    for (std::size_t f = 0; f < keypoints::kFingers; ++f) {
      palm += row3(joints, keypoints::finger_node(f, 0));
      tips += row3(joints, keypoints::finger_node(f, 3));
    }
    palm /= 6.0;
    tips /= 5.0;

    const Eigen::Vector3d half(0.5 * uniform(rng, spec.box_short_lo, spec.box_short_hi),
                               0.5 * uniform(rng, spec.box_short_lo, spec.box_short_hi),
                               0.5 * uniform(rng, spec.box_long_lo, spec.box_long_hi));
    const Eigen::Vector3d angles(uniform(rng, -std::numbers::pi, std::numbers::pi),
                                 uniform(rng, -std::numbers::pi / 2, std::numbers::pi / 2),
                                 uniform(rng, -std::numbers::pi, std::numbers::pi));
    const Eigen::Vector3d normal = euler_zyx(hand.wrist_rotation) * Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d center = 0.5 * (palm + tips) + (half.minCoeff() + spec.palm_clearance) * normal;
    const auto lattice = box_surface_lattice(center, euler_zyx(angles), half);
    const auto corners = obb_from_points(lattice).corners();

    SampleRecord rec;
    rec.id = format_id(seed, index);
    rec.camera = spec.camera;
    rec.gt3d = Tensor::zeros(keypoints::kNodes, 3);
    for (std::size_t r = 0; r < keypoints::kHandNodes; ++r) {
      for (int k = 0; k < 3; ++k) rec.gt3d(r, k) = joints(r, k);
    }
    for (std::size_t c = 0; c < keypoints::kObjectNodes; ++c) {
      for (int k = 0; k < 3; ++k) rec.gt3d(keypoints::corner_node(c), k) = corners[c][k];
    }
    bool in_range = true;
    for (std::size_t r = 0; r < keypoints::kNodes; ++r) {
      const double z = rec.gt3d(r, 2);
      in_range = in_range && z >= spec.min_depth && z <= spec.max_depth;
    }
    if (!in_range) continue;
    rec.gt2d = project(rec.gt3d, rec.camera);
    return rec;
  }
  throw UsageError("generate_sample: grasp spec cannot satisfy the depth bounds");
}

Dataset generate_dataset(std::size_t n, std::uint64_t seed, const GraspSpec& spec) {
  if (n == 0) throw UsageError("generate_dataset: n must be positive");
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_sample(seed, i, spec));
  return out;
}

Tensor add_noise(const Tensor& coords2d, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw DomainError("add_noise: sigma must be non-negative");
  Tensor out({coords2d.rows(), coords2d.cols()}, std::vector<double>(coords2d.data().begin(), coords2d.data().end()));
  if (sigma == 0.0) return out;
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.data()) v += noise(rng);
  return out;
}

// ---- JSON-lines IO -------------------------------------------------------------

namespace {

json points_to_json(const Tensor& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  throw DataError("dataset line " + std::to_string(line) + ": " + message);
}

const json& field(const json& obj, const char* name, std::size_t line) {
  if (!obj.is_object() || !obj.contains(name)) fail(line, std::string("missing field '") + name + "'");
  return obj[name];
}

double number(const json& obj, const char* name, std::size_t line) {
  const json& v = field(obj, name, line);
  if (!v.is_number()) fail(line, std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

Tensor points_from_json(const json& rows, std::size_t dims, const char* name, std::size_t line) {
  if (!rows.is_array() || rows.size() != keypoints::kNodes) {
    fail(line, std::string("field '") + name + "' must hold 29 points");
  }
  Tensor t = Tensor::zeros(keypoints::kNodes, dims);
  for (std::size_t r = 0; r < keypoints::kNodes; ++r) {
    const json& row = rows[r];
    if (!row.is_array() || row.size() != dims) {
      fail(line, std::string("field '") + name + "' point " + std::to_string(r) + " must have " +
                     std::to_string(dims) + " coordinates");
    }
    for (std::size_t c = 0; c < dims; ++c) {
      if (!row[c].is_number()) fail(line, std::string("field '") + name + "' holds a non-number");
      t(r, c) = row[c].get<double>();
    }
  }
  if (!t.all_finite()) fail(line, std::string("field '") + name + "' holds non-finite values");
  return t;
}

} // namespace

void save_dataset(std::ostream& out, std::span<const SampleRecord> records) {
  for (const auto& rec : records) {
    json j;
    j["schema_version"] = kDatasetSchemaVersion;
    j["id"] = rec.id;
    j["camera"] = {{"fx", rec.camera.fx}, {"fy", rec.camera.fy}, {"cx", rec.camera.cx}, {"cy", rec.camera.cy}};
    j["gt3d"] = points_to_json(rec.gt3d);
    j["gt2d"] = points_to_json(rec.gt2d);
    j["meta"] = {{"subject", rec.subject}, {"object", rec.object}};
    out << j.dump() << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, std::span<const SampleRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  save_dataset(out, records);
  if (!out) throw DataError("failed writing " + path.string());
}

Dataset load_dataset(std::istream& in) {
  Dataset out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(line, std::string("malformed JSON: ") + e.what());
    }
    const json& version = field(j, "schema_version", line);
    if (!version.is_number_integer() || version.get<int>() != kDatasetSchemaVersion) {
      fail(line, "unsupported schema_version (expected " + std::to_string(kDatasetSchemaVersion) + ")");
    }
    SampleRecord rec;
    const json& id = field(j, "id", line);
    if (!id.is_string()) fail(line, "field 'id' must be a string");
    rec.id = id.get<std::string>();
    const json& cam = field(j, "camera", line);
    rec.camera = Camera{number(cam, "fx", line), number(cam, "fy", line), number(cam, "cx", line), number(cam, "cy", line)};
    rec.gt3d = points_from_json(field(j, "gt3d", line), 3, "gt3d", line);
    rec.gt2d = points_from_json(field(j, "gt2d", line), 2, "gt2d", line);
    const json& meta = field(j, "meta", line);
    const json& subject = field(meta, "subject", line);
    const json& object = field(meta, "object", line);
    if (!subject.is_string() || !object.is_string()) fail(line, "meta tags must be strings");
    rec.subject = subject.get<std::string>();
    rec.object = object.get<std::string>();
    for (std::size_t r = 0; r < keypoints::kNodes; ++r) {
      if (!(rec.gt3d(r, 2) > 0.0)) fail(line, "gt3d depth must be positive");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return load_dataset(in);
}

namespace {

Tensor stack(std::span<const SampleRecord> records, std::span<const std::size_t> indices, bool three_d) {
  const std::size_t dims = three_d ? 3 : 2;
  Tensor out = Tensor::zeros(indices.size() * keypoints::kNodes, dims);
  double* dst = out.data().data();
  for (std::size_t idx : indices) {
    const Tensor& src = three_d ? records[idx].gt3d : records[idx].gt2d;
    dst = std::copy(src.data().begin(), src.data().end(), dst);
  }
  return out;
}

} // namespace

Tensor stack_gt2d(std::span<const SampleRecord> records, std::span<const std::size_t> indices) {
  return stack(records, indices, false);
}

Tensor stack_gt3d(std::span<const SampleRecord> records, std::span<const std::size_t> indices) {
  return stack(records, indices, true);
}

} // namespace hope
