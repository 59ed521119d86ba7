#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "copercept/collab/collab.hpp"
#include "copercept/core/grid.hpp"
#include "copercept/fusion/compress.hpp"

namespace copercept {

enum class MessageKind : std::uint8_t {
  kVoxelPrior = 1,
  kHeatmapShare = 2,
  kInstanceQuery = 3,
  kInstanceReply = 4,
  kInstanceBroadcast = 5,
};

std::string to_string(MessageKind k);

/// Wire header (little-endian, 20 bytes):
///   u32 magic "IMCP" | u16 version | u8 kind | u32 sender | u32 receiver | u8 scale | u32 payload_len
inline constexpr std::uint32_t kWireMagic = 0x50434D49;  // bytes 'I' 'M' 'C' 'P'
inline constexpr std::uint16_t kWireVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;
inline constexpr std::size_t kPositionBytes = 8;

/// Payloads carry no dimensions; both ends derive them from the shared schema.
struct WireSchema {
  GridShape grid;             // full voxel grid; channels = prior channels
  CompressionStrategy compression;
  int feature_channels = 16;  // width of instance features
  int scales = 3;

  GridShape prior_shape() const { return compressed_shape(grid, compression); }
  GridShape level_shape(int scale) const;
  std::size_t record_bytes() const { return kPositionBytes + 4 * std::size_t(feature_channels) + 4; }
};

/// One message. Which payload field is used depends on `kind`:
///   VoxelPrior, HeatmapShare -> values (row-major float32)
///   InstanceQuery            -> positions
///   InstanceReply, InstanceBroadcast -> instances ((h, w) as i32, feature, heat)
struct Message {
  MessageKind kind = MessageKind::kVoxelPrior;
  AgentId sender = 0;
  AgentId receiver = 0;
  int scale = 0;
  std::vector<float> values;
  std::vector<Cell> positions;
  std::vector<InstanceVector> instances;

  std::size_t payload_len() const;
  std::size_t byte_len() const { return kHeaderBytes + payload_len(); }
};

/// Bitwise equality of every field, floats compared by bit pattern.
bool operator==(const Message& a, const Message& b);

std::vector<std::byte> encode(const Message& m);

/// Parses and validates one message; throws DecodeError carrying the failing offset.
Message decode(std::span<const std::byte> bytes, const WireSchema& schema);

/// Encoded size of a message of `kind` with `count` records (values, positions or instances).
std::size_t encoded_size(MessageKind kind, const WireSchema& schema, int scale, std::size_t count = 0);

/// log2 of a byte count; zero bytes is a ParameterError.
double comm_volume(std::size_t bytes);

/// log2 of the bytes of a dense h x w x c float32 map.
double dense_volume(std::uint64_t h, std::uint64_t w, std::uint64_t c);

/// Percentage saved by `ours_log2` relative to `baseline_log2`: 100 * (1 - 2^(ours - baseline)).
double reduction_vs(double baseline_log2, double ours_log2);

}  // namespace copercept
