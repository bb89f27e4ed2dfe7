#include "afpnkit/weights.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace afpnkit {

namespace {

// The blob is written little-endian regardless of host order; all targets
// we build for are little-endian, enforce it rather than byte-swap.
static_assert(std::endian::native == std::endian::little,
              "weight containers assume a little-endian host");

std::string blob_path_for(const std::string& manifest_path, const json& manifest) {
  fs::path base(manifest_path);
  if (manifest.contains("blob")) {
    return (base.parent_path() / manifest.at("blob").get<std::string>()).string();
  }
  return manifest_path + ".bin";
}

}  // namespace

void WeightStore::put(const std::string& name, Tensor t) {
  tensors_.insert_or_assign(name, std::move(t));
}

bool WeightStore::contains(const std::string& name) const {
  return tensors_.count(name) != 0;
}

const Tensor& WeightStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw std::out_of_range("weight store has no tensor named \"" + name + "\"");
  }
  return it->second;
}

std::vector<float> WeightStore::get_vector(const std::string& name) const {
  return get(name).data();
}

std::vector<std::string> WeightStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

void WeightStore::save(const std::string& manifest_path) const {
  const std::string blob_name = fs::path(manifest_path).filename().string() + ".bin";
  const std::string blob_path = manifest_path + ".bin";

  json manifest;
  manifest["blob"] = blob_name;
  json entries = json::object();

  std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
  if (!blob) throw std::runtime_error("cannot write blob file " + blob_path);
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors_) {
    entries[name] = {
        {"shape", {t.n(), t.c(), t.h(), t.w()}},
        {"dtype", "f32"},
        {"offset", offset},
        {"length", t.size()},
    };
    blob.write(reinterpret_cast<const char*>(t.data().data()),
               static_cast<std::streamsize>(t.size() * sizeof(float)));
    offset += t.size();
  }
  blob.close();
  manifest["tensors"] = entries;

  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest " + manifest_path);
  out << manifest.dump(2) << "\n";
}

WeightStore WeightStore::load(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open weight manifest " + manifest_path);
  json manifest = json::parse(in);

  const std::string blob_path = blob_path_for(manifest_path, manifest);
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw std::runtime_error("cannot open weight blob " + blob_path);
  std::vector<char> raw((std::istreambuf_iterator<char>(blob)),
                        std::istreambuf_iterator<char>());
  const std::size_t total_elems = raw.size() / sizeof(float);

  WeightStore store;
  for (const auto& [name, entry] : manifest.at("tensors").items()) {
    if (entry.at("dtype").get<std::string>() != "f32") {
      throw std::runtime_error("tensor \"" + name + "\" has unsupported dtype");
    }
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape.size() != 4) {
      throw std::runtime_error("tensor \"" + name + "\" must have a rank-4 shape");
    }
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    const std::uint64_t length = entry.at("length").get<std::uint64_t>();
    if (offset + length > total_elems) {
      throw std::runtime_error("tensor \"" + name + "\" extends past end of blob");
    }
    std::vector<float> data(length);
    std::memcpy(data.data(), raw.data() + offset * sizeof(float),
                length * sizeof(float));
    store.put(name, Tensor::from_data(shape[0], shape[1], shape[2], shape[3],
                                      std::move(data)));
  }
  return store;
}

}  // namespace afpnkit
