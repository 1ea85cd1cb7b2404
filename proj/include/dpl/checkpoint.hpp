// SPDX-License-Identifier: Apache-2.0
#pragma once

// DPLC checkpoint file:
//   "DPLC" | u32 version (=1) | u32 tensor count |
//   per tensor, in lexicographic name order:
//     u16 name length | UTF-8 name | u8 rank | u32 dim x rank | f32 x numel
// All integers and floats little-endian.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dpl/tensor.hpp"

namespace dpl::inline DPL_PRECISION_NS {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::map<std::string, Tensor>;

std::vector<unsigned char> encode_checkpoint(const NamedTensors& bundle);
NamedTensors decode_checkpoint(std::span<const unsigned char> bytes);

void save_checkpoint(const NamedTensors& bundle, const std::filesystem::path& path);
NamedTensors load_checkpoint(const std::filesystem::path& path);

}  // namespace dpl::inline DPL_PRECISION_NS
