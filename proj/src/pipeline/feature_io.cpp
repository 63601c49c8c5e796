#include "rjca/feature_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace rjca {

namespace le {

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

bool get_u32(std::istream& in, std::uint32_t& v) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

bool get_f32(std::istream& in, float& v) {
  std::uint32_t bits = 0;
  if (!get_u32(in, bits)) return false;
  v = std::bit_cast<float>(bits);
  return true;
}

}  // namespace le

namespace {
constexpr char kMagic[4] = {'A', 'V', 'F', '1'};
}

FeatureMatrix read_features(std::istream& in, const std::string& origin) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FeatureFormatError(origin + ": not a feature file (bad magic)");
  }
  std::uint32_t rows = 0, cols = 0;
  if (!le::get_u32(in, rows) || !le::get_u32(in, cols)) throw FeatureTruncatedError(origin + ": truncated header");
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
  if (rows == 0 || cols == 0 || count > kMaxFeatureElements) {
    throw FeatureExtentError(origin + ": unsupported extents " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    float v = 0.0f;
    if (!le::get_f32(in, v)) {
      throw FeatureTruncatedError(origin + ": payload holds " + std::to_string(i) + " of " + std::to_string(count) +
                                  " values");
    }
    if (!std::isfinite(v)) throw FeatureFormatError(origin + ": non-finite value at index " + std::to_string(i));
    data[i] = v;
  }
  return Tensor({rows, cols}, std::move(data));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FeatureIoError("cannot open feature file " + path.string());
  return read_features(in, path.string());
}

void write_features(std::ostream& out, const FeatureMatrix& m) {
  if (m.rank() != 2) throw DimensionError("write_features: rank-2 matrix required");
  const std::uint64_t count = static_cast<std::uint64_t>(m.rows()) * m.cols();
  if (m.rows() == 0 || m.cols() == 0 || count > kMaxFeatureElements || m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) {
    throw FeatureExtentError("write_features: unsupported extents " + shape_string(m.shape()));
  }
  out.write(kMagic, 4);
  le::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  le::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f)) throw FeatureExtentError("write_features: value " + std::to_string(v) + " overflows float32");
    le::put_f32(out, f);
  }
}

void save_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FeatureIoError("cannot write feature file " + path.string());
  write_features(out, m);
  if (!out) throw FeatureIoError("write failed for " + path.string());
}

}  // namespace rjca
