#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ncc/model.hpp"

namespace ncc {

/// Everything besides tensors that a resumed run needs.
struct TrainState {
  /// Completed epochs.
  int epoch = 0;
  std::int64_t num_updates = 0;
  double lr = 0.0;
  double best_valid_loss = std::numeric_limits<double>::infinity();
  /// Shuffle RNG as of the start of the current epoch.
  std::string rng_state;
  /// Update windows already consumed in the current epoch.
  std::int64_t windows_done = 0;
  std::int64_t optimizer_steps = 0;

  bool operator==(const TrainState&) const = default;
};

nlohmann::json to_json(const TrainState& state);
TrainState train_state_from_json(const nlohmann::json& j);

inline constexpr std::string_view checkpoint_magic = "NCCKPT01";
inline constexpr int checkpoint_version = 1;

/// On disk: magic, u64 little-endian metadata length, UTF-8 JSON metadata
/// (model name, tensor directory, train state, config digest), then the raw
/// little-endian float64 payloads. Directory offsets are relative to the
/// start of the payload.
struct Checkpoint {
  std::string model_name;
  NamedTensors tensors;
  TrainState state;
  std::string config_digest;
  /// Set by load_checkpoint when an expected digest was given and differs.
  bool digest_mismatch = false;

  const Tensor* find(std::string_view name) const;
};

/// Written to a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainState& state,
                     const std::string& config_digest);

/// Throws IoError, BadMagic or CorruptDirectory. A digest mismatch only sets
/// Checkpoint::digest_mismatch and prints a warning.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_digest = std::nullopt);

/// Short stable hash (FNV-1a 64, hex) of a JSON document's compact dump.
std::string config_digest(const nlohmann::json& doc);

}  // namespace ncc
