#pragma once

#include "zoo/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace zoo {

/// `ZOOW` weight container, version 1. Layout, all integers little-endian:
///
///   "ZOOW" | u32 version | u32 tensor count |
///   per tensor: u16 name length | UTF-8 name | u8 dtype (0 = f32) |
///               u8 rank | u32 dims[rank] | f32 payload[product(dims)]
///
/// Tensors are written in ascending name order.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

std::vector<std::uint8_t> encode_weights(const ParamTable& table);
/// Throws ContainerError carrying the byte offset of the first problem.
ParamTable decode_weights(std::span<const std::uint8_t> bytes);

/// Decoded entries in file order; used where positional order matters.
std::vector<std::pair<std::string, Tensor>> decode_weights_ordered(std::span<const std::uint8_t> bytes);

void save_weights(const ParamTable& table, const std::filesystem::path& path);
ParamTable load_weights(const std::filesystem::path& path);

/// Little-endian f32 payload conversion, independent of host byte order.
std::vector<std::uint8_t> f32_to_le_bytes(std::span<const float> values);
/// `bytes.size()` must be a multiple of 4.
std::vector<float> f32_from_le_bytes(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace zoo
