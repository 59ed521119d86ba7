#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "copercept/core/grid.hpp"

namespace copercept {

/// Dense layer y = x W^T + b applied to every row of x.
struct Linear {
  CellMatrix<float> weight;  // out x in
  RowVector<float> bias;     // 1 x out

  int in_features() const { return static_cast<int>(weight.cols()); }
  int out_features() const { return static_cast<int>(weight.rows()); }

  template <typename Derived>
  CellMatrix<float> apply(const Eigen::MatrixBase<Derived>& x) const {
    if (x.cols() != weight.cols()) {
      throw ShapeError("linear: input width " + std::to_string(x.cols()) + " != " +
                       std::to_string(weight.cols()));
    }
    CellMatrix<float> y = x * weight.transpose();
    y.rowwise() += bias;
    return y;
  }

  /// Identity on the leading min(out, in) channels, zero bias.
  static Linear identity(int out, int in);
};

/// Query/key/value projections (each C x C, no bias) in front of an attention call.
struct AttentionProjections {
  CellMatrix<float> query;
  CellMatrix<float> key;
  CellMatrix<float> value;

  static AttentionProjections identity(int channels);
};

/// Channel counts that fix the dimensions of every learned slot.
struct ModelDims {
  int lidar_channels = 16;
  int camera_channels = 16;
  int fused_channels = 16;
  int mlp_layers = 1;

  int heatmap_hidden() const { return fused_channels / 2 > 0 ? fused_channels / 2 : 1; }
};

/// Named tensors for every forward-only layer of the pipeline.
///
/// File layout (little-endian):
///   "CPWS" | u32 version | u32 slot count
///   per slot: u32 name length | name bytes | u32 rank | u32 dims[rank]
///   then each slot's float32 payload, in declaration order.
class WeightSet {
 public:
  struct Slot {
    std::string name;
    std::vector<int> dims;
    std::vector<float> values;

    std::size_t element_count() const;
  };

  static constexpr std::uint32_t kVersion = 1;

  /// Adds or replaces a slot; values.size() must equal the product of dims.
  void set(const std::string& name, std::vector<int> dims, std::vector<float> values);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Slot& slot(const std::string& name) const;
  const std::vector<Slot>& slots() const { return slots_; }

  /// Slot reshaped as a rows x cols matrix; the slot's dims must be exactly {rows, cols}.
  CellMatrix<float> matrix(const std::string& name, int rows, int cols) const;
  RowVector<float> vector(const std::string& name, int n) const;
  Linear linear(const std::string& prefix, int out, int in) const;
  AttentionProjections projections(const std::string& prefix, int channels) const;

  /// Checks every slot the pipeline reads against `dims`.
  void validate(const ModelDims& dims) const;

  std::vector<std::byte> serialize() const;
  static WeightSet deserialize(std::span<const std::byte> bytes);

  void save(const std::filesystem::path& path) const;
  static WeightSet load(const std::filesystem::path& path);

  /// Identity-on-leading-channels linear layers with zero bias; the heatmap head
  /// convolutions default to 3x3 mean filters on the leading channel (gain 0.25 on the
  /// first, bias -1 on the second).
  static WeightSet defaults(const ModelDims& dims);

 private:
  std::vector<Slot> slots_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace copercept
