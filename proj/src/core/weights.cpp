#include "copercept/core/weights.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "copercept/core/byte_io.hpp"

namespace copercept {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'W', 'S'};

std::string dims_string(const std::vector<int>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

std::vector<float> identity_values(int out, int in) {
  std::vector<float> v(std::size_t(out) * in, 0.0f);
  for (int i = 0; i < std::min(out, in); ++i) v[std::size_t(i) * in + i] = 1.0f;
  return v;
}

void set_linear(WeightSet& w, const std::string& prefix, int out, int in) {
  w.set(prefix + ".weight", {out, in}, identity_values(out, in));
  w.set(prefix + ".bias", {out}, std::vector<float>(out, 0.0f));
}

void set_projections(WeightSet& w, const std::string& prefix, int c) {
  for (const char* part : {".query", ".key", ".value"}) {
    w.set(prefix + part, {c, c}, identity_values(c, c));
  }
}

// Untrained head calibration: keeps object logits off the sigmoid plateau.
constexpr float kHeadGain = 0.25f;
constexpr float kHeadBias = -1.0f;

// Conv weights are laid out [out][in][ky][kx].
std::vector<float> smoothing_conv(int out, int in, float gain) {
  std::vector<float> v(std::size_t(out) * in * 9, 0.0f);
  auto at = [&](int o, int i, int ky, int kx) -> float& {
    return v[((std::size_t(o) * in + i) * 3 + ky) * 3 + kx];
  };
  for (int k = 0; k < 9; ++k) at(0, 0, k / 3, k % 3) = gain / 9.0f;
  for (int c = 1; c < std::min(out, in); ++c) at(c, c, 1, 1) = 1.0f;
  return v;
}

}  // namespace

Linear Linear::identity(int out, int in) {
  Linear l;
  l.weight = CellMatrix<float>::Zero(out, in);
  for (int i = 0; i < std::min(out, in); ++i) l.weight(i, i) = 1.0f;
  l.bias = RowVector<float>::Zero(out);
  return l;
}

AttentionProjections AttentionProjections::identity(int channels) {
  const CellMatrix<float> eye = CellMatrix<float>::Identity(channels, channels);
  return {eye, eye, eye};
}

std::size_t WeightSet::Slot::element_count() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * std::size_t(d); });
}

void WeightSet::set(const std::string& name, std::vector<int> dims, std::vector<float> values) {
  if (name.empty()) throw ParameterError("weight slot name must not be empty");
  for (int d : dims) {
    if (d < 1) throw ShapeError("weight slot " + name + " has non-positive dim " + dims_string(dims));
  }
  Slot s{name, std::move(dims), std::move(values)};
  if (s.values.size() != s.element_count()) {
    throw ShapeError("weight slot " + name + " expects " + std::to_string(s.element_count()) +
                     " values, got " + std::to_string(s.values.size()));
  }
  if (!std::all_of(s.values.begin(), s.values.end(), [](float x) { return std::isfinite(x); })) {
    throw ShapeError("weight slot " + name + " contains non-finite values");
  }
  auto it = index_.find(s.name);
  if (it != index_.end()) {
    slots_[it->second] = std::move(s);
  } else {
    index_.emplace(s.name, slots_.size());
    slots_.push_back(std::move(s));
  }
}

const WeightSet::Slot& WeightSet::slot(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("missing weight slot " + name);
  return slots_[it->second];
}

CellMatrix<float> WeightSet::matrix(const std::string& name, int rows, int cols) const {
  const Slot& s = slot(name);
  if (s.dims != std::vector<int>{rows, cols}) {
    throw ShapeError("weight slot " + name + " has dims " + dims_string(s.dims) + ", expected " +
                     dims_string({rows, cols}));
  }
  return Eigen::Map<const CellMatrix<float>>(s.values.data(), rows, cols);
}

RowVector<float> WeightSet::vector(const std::string& name, int n) const {
  const Slot& s = slot(name);
  if (s.dims != std::vector<int>{n}) {
    throw ShapeError("weight slot " + name + " has dims " + dims_string(s.dims) + ", expected " +
                     dims_string({n}));
  }
  return Eigen::Map<const RowVector<float>>(s.values.data(), n);
}

Linear WeightSet::linear(const std::string& prefix, int out, int in) const {
  return {matrix(prefix + ".weight", out, in), vector(prefix + ".bias", out)};
}

AttentionProjections WeightSet::projections(const std::string& prefix, int channels) const {
  return {matrix(prefix + ".query", channels, channels), matrix(prefix + ".key", channels, channels),
          matrix(prefix + ".value", channels, channels)};
}

void WeightSet::validate(const ModelDims& d) const {
  const int cl = d.lidar_channels, ci = d.camera_channels, c = d.fused_channels;
  const int hid = d.heatmap_hidden();
  linear("collapse.lidar", cl, cl);
  linear("collapse.camera", ci, ci);
  projections("mix", cl);
  linear("occ", 1, cl);
  if (cl != ci) linear("gate.proj", ci, cl);
  linear("hmf.expand_lidar", c, cl);
  linear("hmf.expand_camera", c, ci);
  linear("hmf.concat", c, 2 * c);
  for (int i = 0; i < d.mlp_layers; ++i) linear("hmf.mlp." + std::to_string(i), c, c);
  matrix("hm.conv1.weight", hid, c * 9);
  vector("hm.conv1.bias", hid);
  matrix("hm.conv2.weight", 1, hid * 9);
  vector("hm.conv2.bias", 1);
  projections("ic", c);
  projections("ir.self", c);
  projections("ir.cross", c);
}

WeightSet WeightSet::defaults(const ModelDims& d) {
  if (d.lidar_channels < 1 || d.camera_channels < 1 || d.fused_channels < 1 || d.mlp_layers < 1) {
    throw ParameterError("model dims must be >= 1");
  }
  const int cl = d.lidar_channels, ci = d.camera_channels, c = d.fused_channels;
  const int hid = d.heatmap_hidden();
  WeightSet w;
  set_linear(w, "collapse.lidar", cl, cl);
  set_linear(w, "collapse.camera", ci, ci);
  set_projections(w, "mix", cl);
  set_linear(w, "occ", 1, cl);
  if (cl != ci) set_linear(w, "gate.proj", ci, cl);
  set_linear(w, "hmf.expand_lidar", c, cl);
  set_linear(w, "hmf.expand_camera", c, ci);
  set_linear(w, "hmf.concat", c, 2 * c);
  for (int i = 0; i < d.mlp_layers; ++i) set_linear(w, "hmf.mlp." + std::to_string(i), c, c);
  w.set("hm.conv1.weight", {hid, c * 9}, smoothing_conv(hid, c, kHeadGain));
  w.set("hm.conv1.bias", {hid}, std::vector<float>(hid, 0.0f));
  w.set("hm.conv2.weight", {1, hid * 9}, smoothing_conv(1, hid, 1.0f));
  w.set("hm.conv2.bias", {1}, {kHeadBias});
  set_projections(w, "ic", c);
  set_projections(w, "ir.self", c);
  set_projections(w, "ir.cross", c);
  return w;
}

std::vector<std::byte> WeightSet::serialize() const {
  ByteWriter out;
  out.bytes(std::as_bytes(std::span(kMagic)));
  out.u32(kVersion);
  out.u32(static_cast<std::uint32_t>(slots_.size()));
  for (const Slot& s : slots_) {
    out.u32(static_cast<std::uint32_t>(s.name.size()));
    out.bytes(std::as_bytes(std::span(s.name.data(), s.name.size())));
    out.u32(static_cast<std::uint32_t>(s.dims.size()));
    for (int d : s.dims) out.u32(static_cast<std::uint32_t>(d));
  }
  for (const Slot& s : slots_) {
    for (float v : s.values) out.f32(v);
  }
  return out.take();
}

WeightSet WeightSet::deserialize(std::span<const std::byte> bytes) {
  ByteReader in(bytes);
  auto magic = in.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), std::as_bytes(std::span(kMagic)).begin())) {
    throw DecodeError("weight file: bad magic", 0);
  }
  const std::size_t version_at = in.offset();
  if (in.u32() != kVersion) throw DecodeError("weight file: unsupported version", version_at);
  const std::uint32_t count = in.u32();
  struct Header {
    std::string name;
    std::vector<int> dims;
  };
  std::vector<Header> headers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = in.u32();
    auto name = in.bytes(len);
    Header h{std::string(reinterpret_cast<const char*>(name.data()), name.size()), {}};
    const std::size_t rank_at = in.offset();
    const std::uint32_t rank = in.u32();
    if (rank == 0 || rank > 8) throw DecodeError("weight file: bad rank for " + h.name, rank_at);
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::size_t at = in.offset();
      const std::uint32_t d = in.u32();
      if (d == 0 || d > (1u << 24)) throw DecodeError("weight file: bad dim for " + h.name, at);
      h.dims.push_back(static_cast<int>(d));
    }
    headers.push_back(std::move(h));
  }
  WeightSet w;
  for (Header& h : headers) {
    std::size_t n = 1;
    for (int d : h.dims) n *= std::size_t(d);
    if (n > in.remaining() / 4) throw DecodeError("weight file: truncated payload for " + h.name, in.offset());
    std::vector<float> values(n);
    for (float& v : values) v = in.f32();
    w.set(h.name, std::move(h.dims), std::move(values));
  }
  if (in.remaining() != 0) throw DecodeError("weight file: trailing bytes", in.offset());
  return w;
}

void WeightSet::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write weight file " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

WeightSet WeightSet::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open weight file " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(std::as_bytes(std::span(raw)));
}

}  // namespace copercept
