#include "copercept/comms/message.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "copercept/core/byte_io.hpp"
#include "copercept/core/error.hpp"

namespace copercept {

namespace {

bool same_bits(float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); }

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

bool same_instance(const InstanceVector& a, const InstanceVector& b) {
  return a.position == b.position && a.scale == b.scale && a.owner == b.owner && same_bits(a.heat, b.heat) &&
         a.feature.size() == b.feature.size() && bit_equal(a.feature, b.feature);
}

std::size_t feature_width(const Message& m) {
  if (m.instances.empty()) return 0;
  const auto c = static_cast<std::size_t>(m.instances.front().feature.size());
  for (const auto& inst : m.instances) {
    if (static_cast<std::size_t>(inst.feature.size()) != c) {
      throw ShapeError("instance features in one message must share a width");
    }
  }
  return c;
}

float finite_f32(ByteReader& r) {
  const std::size_t at = r.offset();
  const float v = r.f32();
  if (!std::isfinite(v)) throw DecodeError("non-finite float in payload", at);
  return v;
}

}  // namespace

std::string to_string(MessageKind k) {
  switch (k) {
    case MessageKind::kVoxelPrior:
      return "VoxelPrior";
    case MessageKind::kHeatmapShare:
      return "HeatmapShare";
    case MessageKind::kInstanceQuery:
      return "InstanceQuery";
    case MessageKind::kInstanceReply:
      return "InstanceReply";
    case MessageKind::kInstanceBroadcast:
      return "InstanceBroadcast";
  }
  return "Unknown";
}

GridShape WireSchema::level_shape(int scale) const {
  if (scale < 0 || scale >= scales) {
    throw ParameterError("scale " + std::to_string(scale) + " outside [0, " + std::to_string(scales) + ")");
  }
  GridShape s = grid.with_channels(1);
  s.l_bins = 1;
  for (int i = 0; i < scale; ++i) {
    s.h_cells = (s.h_cells + 1) / 2;
    s.w_cells = (s.w_cells + 1) / 2;
    s.cell_size_m *= 2.0;
  }
  return s;
}

std::size_t Message::payload_len() const {
  switch (kind) {
    case MessageKind::kVoxelPrior:
    case MessageKind::kHeatmapShare:
      return 4 * values.size();
    case MessageKind::kInstanceQuery:
      return kPositionBytes * positions.size();
    case MessageKind::kInstanceReply:
    case MessageKind::kInstanceBroadcast:
      return instances.size() * (kPositionBytes + 4 * feature_width(*this) + 4);
  }
  throw ParameterError("unknown message kind");
}

bool operator==(const Message& a, const Message& b) {
  if (a.kind != b.kind || a.sender != b.sender || a.receiver != b.receiver || a.scale != b.scale) return false;
  if (!same_bits(a.values, b.values) || a.positions != b.positions) return false;
  if (a.instances.size() != b.instances.size()) return false;
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    if (!same_instance(a.instances[i], b.instances[i])) return false;
  }
  return true;
}

std::vector<std::byte> encode(const Message& m) {
  if (m.scale < 0 || m.scale > std::numeric_limits<std::uint8_t>::max()) {
    throw ParameterError("scale does not fit the wire header: " + std::to_string(m.scale));
  }
  const std::size_t payload = m.payload_len();
  if (payload > std::numeric_limits<std::uint32_t>::max()) throw ParameterError("payload too large for the wire");

  ByteWriter w;
  w.u32(kWireMagic);
  w.u16(kWireVersion);
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.u32(m.sender);
  w.u32(m.receiver);
  w.u8(static_cast<std::uint8_t>(m.scale));
  w.u32(static_cast<std::uint32_t>(payload));
  switch (m.kind) {
    case MessageKind::kVoxelPrior:
    case MessageKind::kHeatmapShare:
      for (float v : m.values) w.f32(v);
      break;
    case MessageKind::kInstanceQuery:
      for (const Cell& c : m.positions) {
        w.i32(c.h);
        w.i32(c.w);
      }
      break;
    case MessageKind::kInstanceReply:
    case MessageKind::kInstanceBroadcast:
      for (const auto& inst : m.instances) {
        w.i32(inst.position.h);
        w.i32(inst.position.w);
        for (Eigen::Index c = 0; c < inst.feature.size(); ++c) w.f32(inst.feature[c]);
        w.f32(inst.heat);
      }
      break;
  }
  return w.take();
}

Message decode(std::span<const std::byte> bytes, const WireSchema& schema) {
  ByteReader r(bytes);
  if (r.u32() != kWireMagic) throw DecodeError("bad magic", 0);
  const std::uint16_t version = r.u16();
  if (version != kWireVersion) throw DecodeError("unsupported version " + std::to_string(version), 4);
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 5) throw DecodeError("unknown message kind " + std::to_string(kind), 6);

  Message m;
  m.kind = static_cast<MessageKind>(kind);
  m.sender = r.u32();
  m.receiver = r.u32();
  m.scale = r.u8();
  const bool scale_ok = m.kind == MessageKind::kVoxelPrior ? m.scale == 0 : m.scale < schema.scales;
  if (!scale_ok) throw DecodeError("scale " + std::to_string(m.scale) + " not valid for " + to_string(m.kind), 15);
  const std::uint32_t payload = r.u32();
  if (payload != r.remaining()) {
    throw DecodeError("payload_len " + std::to_string(payload) + " but " + std::to_string(r.remaining()) +
                          " bytes follow the header",
                      16);
  }

  switch (m.kind) {
    case MessageKind::kVoxelPrior:
    case MessageKind::kHeatmapShare: {
      const std::size_t expect = m.kind == MessageKind::kVoxelPrior
                                     ? voxel_bytes(schema.prior_shape())
                                     : 4 * static_cast<std::size_t>(schema.level_shape(m.scale).columns());
      if (payload != expect) {
        throw DecodeError(to_string(m.kind) + " payload must be " + std::to_string(expect) + " bytes", 16);
      }
      m.values.resize(payload / 4);
      for (float& v : m.values) v = finite_f32(r);
      break;
    }
    case MessageKind::kInstanceQuery:
      if (payload % kPositionBytes != 0) throw DecodeError("query payload is not a whole number of cells", 16);
      m.positions.resize(payload / kPositionBytes);
      for (Cell& c : m.positions) {
        c.h = r.i32();
        c.w = r.i32();
      }
      break;
    case MessageKind::kInstanceReply:
    case MessageKind::kInstanceBroadcast: {
      const std::size_t rec = schema.record_bytes();
      if (payload % rec != 0) throw DecodeError("instance payload is not a whole number of records", 16);
      m.instances.resize(payload / rec);
      for (auto& inst : m.instances) {
        inst.position.h = r.i32();
        inst.position.w = r.i32();
        inst.feature.resize(schema.feature_channels);
        for (Eigen::Index c = 0; c < inst.feature.size(); ++c) inst.feature[c] = finite_f32(r);
        inst.heat = finite_f32(r);
        inst.scale = m.scale;
        inst.owner = m.sender;
      }
      break;
    }
  }
  return m;
}

std::size_t encoded_size(MessageKind kind, const WireSchema& schema, int scale, std::size_t count) {
  switch (kind) {
    case MessageKind::kVoxelPrior:
      return kHeaderBytes + voxel_bytes(schema.prior_shape());
    case MessageKind::kHeatmapShare:
      return kHeaderBytes + 4 * static_cast<std::size_t>(schema.level_shape(scale).columns());
    case MessageKind::kInstanceQuery:
      return kHeaderBytes + kPositionBytes * count;
    case MessageKind::kInstanceReply:
    case MessageKind::kInstanceBroadcast:
      return kHeaderBytes + schema.record_bytes() * count;
  }
  throw ParameterError("unknown message kind");
}

double comm_volume(std::size_t bytes) {
  if (bytes == 0) throw ParameterError("communication volume of zero bytes is undefined");
  return std::log2(static_cast<double>(bytes));
}

double dense_volume(std::uint64_t h, std::uint64_t w, std::uint64_t c) {
  if (h == 0 || w == 0 || c == 0) throw ParameterError("dense map dimensions must be positive");
  return std::log2(static_cast<double>(h) * static_cast<double>(w) * static_cast<double>(c) * 4.0);
}

double reduction_vs(double baseline_log2, double ours_log2) {
  return 100.0 * (1.0 - std::exp2(ours_log2 - baseline_log2));
}

}  // namespace copercept
