#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "probe/kv_document.hpp"
#include "probe/mind_model.hpp"

namespace probe {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// A manifest (model config plus run metadata) and named flat arrays. On disk:
// magic "PROBECKP", u32 version, u64 manifest length, manifest text, u32 array
// count, then per array u32 name length, name, u64 element count and the
// IEEE-754 bit patterns as little-endian u64. Round-trips bit-exactly.
struct Checkpoint {
  KvDocument manifest;
  std::map<std::string, std::vector<double>> arrays;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

// Manifest from the model config, arrays from every parameter.
Checkpoint model_checkpoint(const MindModel& model);

// Rebuilds the model a checkpoint was taken from.
MindModel load_model(const Checkpoint& ckpt);

// Copies the arrays of the given blocks into `model`; shapes must match.
void restore_blocks(MindModel& model, const Checkpoint& ckpt, const std::vector<Block>& blocks);

}  // namespace probe
