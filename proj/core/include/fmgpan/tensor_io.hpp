#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "fmgpan/tensor.hpp"

namespace fmgpan {

// FMGT container layout (little-endian):
//   "FMGT" | u8 version=1 | u32 height | u32 width | u32 bands | u8 dtype (1 = float32)
//   | f64 min_valid | f64 max_valid | float32 samples, band-major planar.
// Samples are stored in sensor digital numbers; in memory they are divided
// by max_valid so the working range is [0, 1].
inline constexpr std::uint8_t kTensorFormatVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;

struct TensorSidecar {
  std::string sensor;
  std::size_t ratio = 0;
};

struct LoadedTensor {
  ImageTensor tensor;
  std::optional<TensorSidecar> sidecar;
};

void write_tensor(const std::filesystem::path& path, const ImageTensor& img,
                  const std::optional<TensorSidecar>& sidecar = std::nullopt);
LoadedTensor read_tensor(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path);

}  // namespace fmgpan
