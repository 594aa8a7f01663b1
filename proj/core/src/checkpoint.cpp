#include "hope/checkpoint.hpp"

#include "hope/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_set>

namespace hope {

using json = nlohmann::ordered_json;

namespace {

void put_le(std::ofstream& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

} // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::filesystem::path checkpoint_blob_path(const std::filesystem::path& manifest) {
  auto blob = manifest;
  blob += ".bin";
  return blob;
}

void save_checkpoint(const std::filesystem::path& manifest, std::span<const NamedParam> params,
                     const std::string& config_json) {
  const auto blob_path = checkpoint_blob_path(manifest);
  std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
  if (!blob) throw DataError("cannot open " + blob_path.string() + " for writing");

  json params_json = json::object();
  std::unordered_set<std::string> seen;
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    if (!seen.insert(p.name).second) throw UsageError("duplicate parameter name '" + p.name + "'");
    params_json[p.name] = {{"shape", p.tensor->shape()}, {"dtype", "f64"}, {"offset", offset}};
    for (double v : p.tensor->data()) put_le(blob, v);
    offset += 8 * p.tensor->size();
  }
  blob.close();
  if (!blob) throw DataError("failed writing " + blob_path.string());

  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["blob"] = blob_path.filename().string();
  doc["config"] = json::parse(config_json);
  doc["params"] = std::move(params_json);

  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw DataError("cannot open " + manifest.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + manifest.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open checkpoint manifest " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("checkpoint manifest " + manifest.string() + ": " + e.what());
  }
  if (!doc.contains("format_version") || doc["format_version"] != kCheckpointFormatVersion) {
    throw DataError("checkpoint manifest " + manifest.string() + ": unsupported format_version");
  }
  if (!doc.contains("params") || !doc["params"].is_object()) {
    throw DataError("checkpoint manifest " + manifest.string() + ": missing params");
  }

  const auto blob_path = manifest.parent_path() / doc.value("blob", checkpoint_blob_path(manifest).filename().string());
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw DataError("cannot open checkpoint blob " + blob_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());

  Checkpoint ckpt;
  ckpt.config_json = doc.contains("config") ? doc["config"].dump() : "{}";
  for (const auto& [name, entry] : doc["params"].items()) {
    if (entry.value("dtype", "") != "f64") throw DataError("parameter '" + name + "': dtype must be f64");
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    Tensor t(shape);
    if (offset + 8 * t.size() > bytes.size()) {
      throw DataError("parameter '" + name + "' extends past the end of " + blob_path.string());
    }
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = get_le(bytes.data() + offset + 8 * i);
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  return ckpt;
}

void restore_parameters(const Checkpoint& checkpoint, std::span<const NamedParam> params) {
  for (const auto& p : params) {
    const Tensor* src = checkpoint.find(p.name);
    if (src == nullptr) throw DataError("checkpoint has no parameter '" + p.name + "'");
    if (src->shape() != p.tensor->shape()) {
      throw DataError("parameter '" + p.name + "': checkpoint shape " + src->shape_string() +
                      " differs from model shape " + p.tensor->shape_string());
    }
    std::copy(src->data().begin(), src->data().end(), p.tensor->data().begin());
  }
}

} // namespace hope
