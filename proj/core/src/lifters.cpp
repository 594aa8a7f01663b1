#include "hope/lifters.hpp"

#include "hope/adjacency.hpp"
#include "hope/errors.hpp"
#include "hope/keypoints.hpp"

#include <json.hpp>

#include <cmath>

namespace hope {

using nlohmann::json;

std::string to_string(PoolingKind kind) {
  switch (kind) {
  case PoolingKind::trainable: return "trainable";
  case PoolingKind::fixed: return "fixed";
  case PoolingKind::gpool: return "gpool";
  }
  return "?";
}

std::string to_string(AdjacencyInit init) {
  switch (init) {
  case AdjacencyInit::identity: return "identity";
  case AdjacencyInit::zeros: return "zeros";
  case AdjacencyInit::ones: return "ones";
  case AdjacencyInit::random: return "random";
  case AdjacencyInit::skeleton: return "skeleton";
  }
  return "?";
}

PoolingKind parse_pooling_kind(const std::string& name) {
  for (auto k : {PoolingKind::trainable, PoolingKind::fixed, PoolingKind::gpool}) {
    if (to_string(k) == name) return k;
  }
  throw UsageError("unknown pooling kind '" + name + "'");
}

AdjacencyInit parse_adjacency_init(const std::string& name) {
  for (auto k : {AdjacencyInit::identity, AdjacencyInit::zeros, AdjacencyInit::ones, AdjacencyInit::random,
                 AdjacencyInit::skeleton}) {
    if (to_string(k) == name) return k;
  }
  throw UsageError("unknown adjacency init '" + name + "'");
}

namespace {

bool is_default_schedule(const std::vector<std::size_t>& nodes) {
  return nodes == std::vector<std::size_t>{29, 15, 8, 4};
}

} // namespace

void IoScaling::validate() const {
  if (!std::isfinite(input_center)) throw UsageError("input_center must be finite");
  if (!(input_scale > 0.0) || !std::isfinite(input_scale)) throw UsageError("input_scale must be positive");
  if (!(output_scale > 0.0) || !std::isfinite(output_scale)) throw UsageError("output_scale must be positive");
}

Var IoScaling::normalize_input(Var coords2d) const {
  const Var shift = coords2d.tape().constant(Tensor::filled(coords2d.rows(), coords2d.cols(), -input_center));
  const Var normalized = scale(add(coords2d, shift), 1.0 / input_scale);
  if (!constant_channel) return normalized;
  return concat_features(normalized, coords2d.tape().constant(Tensor::filled(coords2d.rows(), 1, 1.0)));
}

Var IoScaling::denormalize_output(Var out) const { return scale(out, output_scale); }

void UNetConfig::validate() const {
  scaling.validate();
  if (node_schedule.size() < 2) throw UsageError("unet: node schedule needs at least two levels");
  if (node_schedule.front() != keypoints::kNodes) throw UsageError("unet: node schedule must start at 29");
  for (std::size_t i = 1; i < node_schedule.size(); ++i) {
    if (node_schedule[i] == 0 || node_schedule[i] >= node_schedule[i - 1]) {
      throw UsageError("unet: node schedule must be strictly decreasing and positive");
    }
  }
  if (feature_schedule.size() != node_schedule.size()) {
    throw UsageError("unet: feature schedule needs one width per level");
  }
  for (std::size_t w : feature_schedule) {
    if (w == 0) throw UsageError("unet: feature widths must be positive");
  }
  const bool needs_groupings = pooling == PoolingKind::fixed || adjacency_init == AdjacencyInit::skeleton;
  if (needs_groupings && !is_default_schedule(node_schedule)) {
    throw UsageError("unet: fixed pooling and skeleton init are defined for the 29/15/8/4 schedule only");
  }
}

std::string UNetConfig::to_json() const {
  json j;
  j["node_schedule"] = node_schedule;
  j["feature_schedule"] = feature_schedule;
  j["pooling"] = to_string(pooling);
  j["adjacency_init"] = to_string(adjacency_init);
  j["input_center"] = scaling.input_center;
  j["input_scale"] = scaling.input_scale;
  j["output_scale"] = scaling.output_scale;
  j["constant_channel"] = scaling.constant_channel;
  return j.dump();
}

UNetConfig UNetConfig::from_json(const std::string& text) {
  UNetConfig c;
  try {
    const json j = json::parse(text);
    for (const auto& [key, _] : j.items()) {
      if (key != "node_schedule" && key != "feature_schedule" && key != "pooling" && key != "adjacency_init" &&
          key != "input_center" && key != "input_scale" && key != "output_scale" && key != "constant_channel") {
        throw UsageError("unet config: unknown key '" + key + "'");
      }
    }
    if (j.contains("node_schedule")) c.node_schedule = j["node_schedule"].get<std::vector<std::size_t>>();
    if (j.contains("feature_schedule")) c.feature_schedule = j["feature_schedule"].get<std::vector<std::size_t>>();
    if (j.contains("pooling")) c.pooling = parse_pooling_kind(j["pooling"].get<std::string>());
    if (j.contains("adjacency_init")) c.adjacency_init = parse_adjacency_init(j["adjacency_init"].get<std::string>());
    if (j.contains("input_center")) c.scaling.input_center = j["input_center"].get<double>();
    if (j.contains("input_scale")) c.scaling.input_scale = j["input_scale"].get<double>();
    if (j.contains("output_scale")) c.scaling.output_scale = j["output_scale"].get<double>();
    if (j.contains("constant_channel")) c.scaling.constant_channel = j["constant_channel"].get<bool>();
  } catch (const json::exception& e) {
    throw DataError(std::string("unet config: ") + e.what());
  }
  c.validate();
  return c;
}

Tensor initial_adjacency(AdjacencyInit init, std::size_t n, std::size_t level, Rng& rng) {
  switch (init) {
  case AdjacencyInit::identity: return Tensor::identity(n);
  case AdjacencyInit::zeros: return Tensor::zeros(n, n);
  case AdjacencyInit::ones: return Tensor::filled(n, n, 1.0);
  case AdjacencyInit::random: {
    Tensor a = Tensor::zeros(n, n);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = coin(rng) ? 1.0 : 0.0;
    }
    return a;
  }
  case AdjacencyInit::skeleton: {
    Tensor a = keypoints::skeleton_adjacency();
    const auto& groupings = keypoints::default_groupings();
    if (level > groupings.size()) throw UsageError("skeleton init: level beyond the default groupings");
    for (std::size_t l = 0; l < level; ++l) a = keypoints::coarsen_adjacency(a, groupings[l]);
    if (a.rows() != n) throw UsageError("skeleton init: node count does not match the default groupings");
    return normalize_adjacency(a);
  }
  }
  throw UsageError("unknown adjacency init");
}

std::size_t check_lifter_input(const Tensor& coords2d) {
  if (coords2d.cols() != 2 || coords2d.rows() == 0 || coords2d.rows() % keypoints::kNodes != 0) {
    throw DimensionError("lifter input must be (B*29) x 2, got " + coords2d.shape_string());
  }
  return coords2d.rows() / keypoints::kNodes;
}

// ---- GraphUNet ---------------------------------------------------------------

GraphUNet::GraphUNet(UNetConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  const auto& nodes = config_.node_schedule;
  const auto& widths = config_.feature_schedule;
  const std::size_t last = levels() - 1;
  auto adjacency = [&](std::size_t level) { return initial_adjacency(config_.adjacency_init, nodes[level], level, rng); };

  std::size_t in = config_.scaling.input_width();
  for (std::size_t i = 0; i < last; ++i) {
    encoder_.emplace_back(adjacency(i), in, widths[i], Activation::relu, rng);
    if (config_.pooling == PoolingKind::trainable) pools_.emplace_back(nodes[i], nodes[i + 1], rng);
    if (config_.pooling == PoolingKind::gpool) gpools_.emplace_back(nodes[i], nodes[i + 1], widths[i], rng);
    in = widths[i];
  }
  bottleneck_.emplace_back(adjacency(last), in, widths[last], Activation::relu, rng);

  std::vector<GraphUnpool> unpools_coarse_first;
  std::vector<AdaptiveGraphConv> decoder_coarse_first;
  std::size_t width = widths[last];
  for (std::size_t i = last; i-- > 0;) {
    if (config_.pooling == PoolingKind::trainable) unpools_coarse_first.emplace_back(nodes[i + 1], nodes[i], rng);
    decoder_coarse_first.emplace_back(adjacency(i), width + widths[i], widths[i], Activation::relu, rng);
    width = widths[i];
  }
  head_.emplace_back(adjacency(0), width, 3, Activation::linear, rng);

  for (std::size_t k = decoder_coarse_first.size(); k-- > 0;) {
    decoder_.push_back(std::move(decoder_coarse_first[k]));
    if (!unpools_coarse_first.empty()) unpools_.push_back(std::move(unpools_coarse_first[k]));
  }
}

Var GraphUNet::forward(Tape& tape, Var coords2d) {
  check_lifter_input(coords2d.value());
  const auto& nodes = config_.node_schedule;
  const auto& groupings = keypoints::default_groupings();
  const std::size_t last = levels() - 1;

  std::vector<Var> skips;
  std::vector<std::vector<std::vector<std::size_t>>> selections(last);
  Var h = config_.scaling.normalize_input(coords2d);
  for (std::size_t i = 0; i < last; ++i) {
    h = encoder_[i].forward(tape, h);
    skips.push_back(h);
    switch (config_.pooling) {
    case PoolingKind::trainable: h = pools_[i].forward(tape, h); break;
    case PoolingKind::fixed: h = fixed_pool_forward(h, groupings[i]); break;
    case PoolingKind::gpool: {
      auto pooled = gpools_[i].forward(tape, h);
      h = pooled.features;
      selections[i] = std::move(pooled.selected);
      break;
    }
    }
  }
  h = bottleneck_.front().forward(tape, h);
  for (std::size_t i = last; i-- > 0;) {
    switch (config_.pooling) {
    case PoolingKind::trainable: h = unpools_[i].forward(tape, h); break;
    case PoolingKind::fixed: h = fixed_unpool_forward(h, groupings[i]); break;
    case PoolingKind::gpool: h = gunpool_forward(h, selections[i], nodes[i]); break;
    }
    h = decoder_[i].forward(tape, concat_features(h, skips[i]));
  }
  return config_.scaling.denormalize_output(head_.front().forward(tape, h));
}

std::vector<NamedParam> GraphUNet::parameters() {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    encoder_[i].collect_parameters("unet.enc" + std::to_string(i), out);
    if (!pools_.empty()) pools_[i].collect_parameters("unet.pool" + std::to_string(i), out);
    if (!gpools_.empty()) gpools_[i].collect_parameters("unet.gpool" + std::to_string(i), out);
  }
  bottleneck_.front().collect_parameters("unet.bottleneck", out);
  for (std::size_t i = decoder_.size(); i-- > 0;) {
    if (!unpools_.empty()) unpools_[i].collect_parameters("unet.unpool" + std::to_string(i), out);
    decoder_[i].collect_parameters("unet.dec" + std::to_string(i), out);
  }
  head_.front().collect_parameters("unet.head", out);
  return out;
}

std::vector<NamedParam> GraphUNet::pooling_parameters() {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < pools_.size(); ++i) pools_[i].collect_parameters("unet.pool" + std::to_string(i), out);
  for (std::size_t i = 0; i < gpools_.size(); ++i) gpools_[i].collect_parameters("unet.gpool" + std::to_string(i), out);
  return out;
}

std::vector<AdaptiveGraphConv*> GraphUNet::adaptive_layers() {
  std::vector<AdaptiveGraphConv*> out;
  for (auto& l : encoder_) out.push_back(&l);
  out.push_back(&bottleneck_.front());
  for (std::size_t i = decoder_.size(); i-- > 0;) out.push_back(&decoder_[i]);
  out.push_back(&head_.front());
  return out;
}

GraphUNet build_default_unet(std::uint64_t seed) { return GraphUNet(UNetConfig{}, seed); }

// ---- baselines -----------------------------------------------------------------

FullyConnectedLifter::FullyConnectedLifter(std::size_t hidden, std::uint64_t seed, IoScaling scaling)
    : scaling_(scaling) {
  scaling_.constant_channel = false; // dense layers carry their own biases
  scaling_.validate();
  Rng rng(seed);
  const std::size_t in = 2 * keypoints::kNodes;
  const std::size_t out = 3 * keypoints::kNodes;
  const std::size_t dims[] = {in, hidden, hidden, out};
  for (int l = 0; l < 3; ++l) {
    Tensor w = init_uniform_fan_in(dims[l], dims[l + 1], dims[l], rng);
    Tensor b = init_uniform_fan_in(1, dims[l + 1], dims[l], rng);
    w.set_requires_grad(true);
    b.set_requires_grad(true);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

Var FullyConnectedLifter::forward(Tape& tape, Var coords2d) {
  const std::size_t batch = check_lifter_input(coords2d.value());
  Var h = reshape(scaling_.normalize_input(coords2d), batch, 2 * keypoints::kNodes);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = add_row(matmul(h, tape.parameter(weights_[l])), tape.parameter(biases_[l]));
    if (l + 1 < weights_.size()) h = relu(h);
  }
  return scaling_.denormalize_output(reshape(h, batch * keypoints::kNodes, 3));
}

std::vector<NamedParam> FullyConnectedLifter::parameters() {
  std::vector<NamedParam> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back({"fc" + std::to_string(l) + ".weights", &weights_[l]});
    out.push_back({"fc" + std::to_string(l) + ".bias", &biases_[l]});
  }
  return out;
}

AdaptiveGcnLifter::AdaptiveGcnLifter(std::size_t hidden, AdjacencyInit init, std::uint64_t seed, IoScaling scaling)
    : scaling_(scaling) {
  scaling_.validate();
  Rng rng(seed);
  const std::size_t n = keypoints::kNodes;
  layers_.emplace_back(initial_adjacency(init, n, 0, rng), scaling_.input_width(), hidden, Activation::relu, rng);
  layers_.emplace_back(initial_adjacency(init, n, 0, rng), hidden, hidden, Activation::relu, rng);
  layers_.emplace_back(initial_adjacency(init, n, 0, rng), hidden, 3, Activation::linear, rng);
}

Var AdaptiveGcnLifter::forward(Tape& tape, Var coords2d) {
  check_lifter_input(coords2d.value());
  Var h = scaling_.normalize_input(coords2d);
  for (auto& layer : layers_) h = layer.forward(tape, h);
  return scaling_.denormalize_output(h);
}

std::vector<NamedParam> AdaptiveGcnLifter::parameters() {
  std::vector<NamedParam> out;
  for (std::size_t l = 0; l < layers_.size(); ++l) layers_[l].collect_parameters("gcn" + std::to_string(l), out);
  return out;
}

std::vector<AdaptiveGraphConv*> AdaptiveGcnLifter::adaptive_layers() {
  std::vector<AdaptiveGraphConv*> out;
  for (auto& l : layers_) out.push_back(&l);
  return out;
}

} // namespace hope
