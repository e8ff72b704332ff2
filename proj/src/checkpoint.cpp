#include "ncc/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "binary_io.hpp"
#include "ncc/error.hpp"

namespace ncc {

using nlohmann::json;

json to_json(const TrainState& s) {
  json j;
  j["epoch"] = s.epoch;
  j["num_updates"] = s.num_updates;
  j["lr"] = s.lr;
  j["best_valid_loss"] = std::isfinite(s.best_valid_loss) ? json(s.best_valid_loss) : json(nullptr);
  j["rng_state"] = s.rng_state;
  j["windows_done"] = s.windows_done;
  j["optimizer_steps"] = s.optimizer_steps;
  return j;
}

TrainState train_state_from_json(const json& j) {
  TrainState s;
  s.epoch = j.at("epoch").get<int>();
  s.num_updates = j.at("num_updates").get<std::int64_t>();
  s.lr = j.at("lr").get<double>();
  s.best_valid_loss =
      j.at("best_valid_loss").is_null() ? std::numeric_limits<double>::infinity() : j["best_valid_loss"].get<double>();
  s.rng_state = j.at("rng_state").get<std::string>();
  s.windows_done = j.value("windows_done", std::int64_t{0});
  s.optimizer_steps = j.value("optimizer_steps", std::int64_t{0});
  return s;
}

const Tensor* Checkpoint::find(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::string config_digest(const json& doc) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json dir = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    const std::uint64_t bytes = t.size() * sizeof(double);
    dir.push_back({{"name", name}, {"shape", t.shape()}, {"dtype", "f64"}, {"offset", offset}, {"length", bytes}});
    offset += bytes;
  }
  json meta;
  meta["version"] = checkpoint_version;
  meta["model"] = ckpt.model_name;
  meta["config_digest"] = ckpt.config_digest;
  meta["state"] = to_json(ckpt.state);
  meta["tensors"] = std::move(dir);
  const std::string text = meta.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write checkpoint " + tmp.string());
    out.write(checkpoint_magic.data(), static_cast<std::streamsize>(checkpoint_magic.size()));
    detail::write_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : ckpt.tensors) {
      for (double v : t.data()) detail::write_le<double>(out, v);
    }
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainState& state,
                     const std::string& digest) {
  save_checkpoint(path, Checkpoint{std::string(model.model_name()), model.export_state(), state, digest, false});
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_digest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());

  if (bytes.size() < checkpoint_magic.size() || bytes.compare(0, checkpoint_magic.size(), checkpoint_magic) != 0) {
    throw Error(ErrorCode::BadMagic, path.string() + " is not an NCCKPT01 checkpoint");
  }
  std::size_t pos = checkpoint_magic.size();
  if (bytes.size() < pos + 8) throw Error(ErrorCode::CorruptDirectory, "checkpoint truncated before metadata length");
  const auto meta_len = detail::load_le<std::uint64_t>(data + pos);
  pos += 8;
  if (meta_len > bytes.size() - pos) throw Error(ErrorCode::CorruptDirectory, "metadata extends past end of file");

  json meta = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                          bytes.begin() + static_cast<std::ptrdiff_t>(pos + meta_len), nullptr, false);
  if (meta.is_discarded() || !meta.is_object() || !meta.contains("tensors") || !meta["tensors"].is_array()) {
    throw Error(ErrorCode::CorruptDirectory, "checkpoint metadata is not a valid tensor directory");
  }
  if (meta.value("version", 0) != checkpoint_version) {
    throw Error(ErrorCode::CorruptDirectory, "unsupported checkpoint version " + meta.value("version", json()).dump());
  }
  pos += meta_len;
  const std::size_t payload = bytes.size() - pos;

  Checkpoint ckpt;
  try {
    ckpt.model_name = meta.at("model").get<std::string>();
    ckpt.config_digest = meta.value("config_digest", "");
    ckpt.state = train_state_from_json(meta.at("state"));
    for (const auto& entry : meta["tensors"]) {
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto length = entry.at("length").get<std::uint64_t>();
      if (entry.value("dtype", "") != "f64") throw Error(ErrorCode::CorruptDirectory, "unsupported dtype");
      if (length != shape_size(shape) * sizeof(double) || offset > payload || length > payload - offset) {
        throw Error(ErrorCode::CorruptDirectory, "tensor '" + entry.at("name").get<std::string>() +
                                                     "' lies outside the payload (" + std::to_string(offset) + "+" +
                                                     std::to_string(length) + " > " + std::to_string(payload) + ")");
      }
      std::vector<double> values(shape_size(shape));
      for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = detail::load_le<double>(data + pos + offset + i * sizeof(double));
      }
      ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), Tensor(shape, std::move(values)));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptDirectory, std::string("malformed checkpoint metadata: ") + e.what());
  }

  if (expected_digest && *expected_digest != ckpt.config_digest) {
    ckpt.digest_mismatch = true;
    std::cerr << "warning: " << to_string(ErrorCode::DigestMismatch) << ": checkpoint " << path.string()
              << " was written for config " << ckpt.config_digest << ", current config is " << *expected_digest
              << '\n';
  }
  return ckpt;
}

}  // namespace ncc
