#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dialogctl/model.hpp"

namespace dialogctl {

// Binary checkpoint layout, all integers little-endian:
//   magic "DLGCKPT1" (8 bytes)
//   u32 format version (= 1)
//   u32 kind, u64 D, u64 H, u64 A
//   u32 tensor count
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank],
//               f64 payload[prod(dims)] (IEEE-754 binary64)
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

std::string checkpoint_bytes(const ModelParams& params);

}  // namespace dialogctl
