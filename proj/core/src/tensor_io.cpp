#include "fmgpan/tensor_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <vector>

#include "fmgpan/error.hpp"

namespace fmgpan {

namespace {

static_assert(std::endian::native == std::endian::little, "FMGT I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated header in " + path.string());
  return v;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path) {
  auto p = tensor_path;
  p.replace_extension(".json");
  return p;
}

void write_tensor(const std::filesystem::path& path, const ImageTensor& img,
                  const std::optional<TensorSidecar>& sidecar) {
  if (!img.all_finite()) throw DegeneracyError("refusing to write non-finite samples to " + path.string());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write("FMGT", 4);
  put<std::uint8_t>(os, kTensorFormatVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(img.height()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(img.width()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(img.bands()));
  put<std::uint8_t>(os, kDtypeFloat32);
  put<double>(os, img.min_valid);
  put<double>(os, img.max_valid);
  std::vector<float> payload(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) payload[i] = static_cast<float>(img.data()[i] * img.max_valid);
  os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!os) throw IoError("write failed for " + path.string());

  if (sidecar) {
    nlohmann::json j{{"sensor", sidecar->sensor}, {"ratio", sidecar->ratio}};
    std::ofstream js(sidecar_path(path), std::ios::trunc);
    if (!js) throw IoError("cannot write sidecar for " + path.string());
    js << j.dump(2) << '\n';
  }
}

LoadedTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "FMGT", 4) != 0) {
    throw FormatError(path.string() + " is not an FMGT tensor");
  }
  const auto version = get<std::uint8_t>(is, path);
  if (version != kTensorFormatVersion) {
    throw FormatError("unsupported FMGT version " + std::to_string(version) + " in " + path.string());
  }
  const auto height = get<std::uint32_t>(is, path);
  const auto width = get<std::uint32_t>(is, path);
  const auto bands = get<std::uint32_t>(is, path);
  const auto dtype = get<std::uint8_t>(is, path);
  if (dtype != kDtypeFloat32) throw FormatError("unsupported dtype " + std::to_string(dtype));
  const auto min_valid = get<double>(is, path);
  const auto max_valid = get<double>(is, path);
  if (!(max_valid > 0.0) || !std::isfinite(max_valid) || !std::isfinite(min_valid)) {
    throw FormatError("invalid radiometric range in " + path.string());
  }
  if (height == 0 || width == 0 || bands == 0) throw FormatError("empty tensor in " + path.string());

  const std::size_t n = std::size_t{height} * width * bands;
  std::vector<float> payload(n);
  if (!is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
    throw FormatError("truncated payload in " + path.string());
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(payload[i])) throw FormatError("non-finite sample in " + path.string());
    data[i] = static_cast<double>(payload[i]) / max_valid;
  }

  LoadedTensor out{ImageTensor(height, width, bands, std::move(data)), std::nullopt};
  out.tensor.min_valid = min_valid;
  out.tensor.max_valid = max_valid;

  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    try {
      std::ifstream js(side);
      const auto j = nlohmann::json::parse(js);
      out.sidecar = TensorSidecar{j.value("sensor", std::string{}), j.value("ratio", std::size_t{0})};
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad sidecar " + side.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace fmgpan
