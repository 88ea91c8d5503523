#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsb/model.hpp"

namespace rsb {

inline constexpr const char* kCheckpointFormat = "rsb.checkpoint/v1";

/// Everything needed to resume or evaluate one trained network.
struct Checkpoint {
  std::string role;  // "bridge" or "predictor"
  MlpSpec spec;
  ModelParameters params;
  EmaState ema;
  AdamState adam;
  std::vector<std::string> rng_lineage;
  nlohmann::json meta = nlohmann::json::object();
};

nlohmann::json spec_to_json(const MlpSpec& spec);
MlpSpec spec_from_json(const nlohmann::json& j);

/// JSON text; doubles are written in shortest round-trip form so that
/// parse(serialize(c)) is bit-identical.
std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointError on malformed input.
Checkpoint parse_checkpoint(const std::string& text);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws CheckpointError when the file is missing or malformed.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Hex FNV-1a-64 of the serialized text.
std::string checkpoint_hash(const Checkpoint& ckpt);

}  // namespace rsb
