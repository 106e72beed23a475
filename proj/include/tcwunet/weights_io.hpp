#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tcwunet/model.hpp"

namespace tcwunet {

// TCWU weight container: magic "TCWU", 32-bit little-endian format version,
// a length-prefixed UTF-8 manifest (config lines, then one line per tensor
// with hierarchical name, shape and byte offset into the data section),
// followed by raw little-endian 32-bit float data. Writing is deterministic,
// so write -> read -> write round-trips byte-exactly.
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

void save_weights(const std::filesystem::path& path, const ModelWeights& model);

ModelWeights load_weights(const std::filesystem::path& path);

// The manifest text save_weights would emit (used by the inspect command).
std::string container_manifest(const ModelWeights& model);

} // namespace tcwunet
