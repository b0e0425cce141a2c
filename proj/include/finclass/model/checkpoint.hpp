#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "finclass/model/network.hpp"

namespace finclass::model {

// Binary layout, all integers little-endian:
//   "FNET" | u32 version | u32 n | n bytes architecture text (UTF-8)
//   | u32 tensor count | per tensor: u32 rank, rank x u32 extent,
//     extent-product x f32 | u32 CRC-32 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize(const Network& network);

// Throws FormatError (bad magic or layout), VersionError (unsupported
// version) or CorruptionError (CRC mismatch, truncation, size mismatch).
Network deserialize(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Network& network, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace finclass::model
