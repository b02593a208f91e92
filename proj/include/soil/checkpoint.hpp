#pragma once

#include <cstdint>
#include <string>

#include "soil/layers.hpp"

namespace soil::nn {

// Binary checkpoint: magic "SOIL", format version uint32 LE, config digest
// uint64 LE, then per tensor: name length uint16, name bytes, rank uint8,
// dims uint32[], float32 data LE. Parameters, their Adam moments and the
// step counter all travel as tensors; the config text is echoed to a `.cfg`
// sidecar next to the checkpoint.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore& params, int64_t step, uint64_t config_digest,
                     const std::string& config_echo, const std::string& path);

// Fills `params` in place; returns the stored step counter. Throws DataError
// on magic/version/digest mismatch, truncation, or tensor set mismatch.
int64_t load_checkpoint(ParamStore& params, uint64_t expected_digest, const std::string& path);

}  // namespace soil::nn
