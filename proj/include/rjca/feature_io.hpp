#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "rjca/tensor.hpp"

namespace rjca {

// Per-segment features of one modality of one utterance: d x L.
using FeatureMatrix = Tensor;

class FeatureIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class FeatureFormatError : public FeatureIoError {  // bad magic
 public:
  using FeatureIoError::FeatureIoError;
};
class FeatureTruncatedError : public FeatureIoError {  // payload shorter than the header says
 public:
  using FeatureIoError::FeatureIoError;
};
class FeatureExtentError : public FeatureIoError {  // zero or oversized extents
 public:
  using FeatureIoError::FeatureIoError;
};

// Largest accepted rows * cols.
inline constexpr std::uint64_t kMaxFeatureElements = std::uint64_t{1} << 28;

// Layout: "AVF1", rows (u32 LE), cols (u32 LE), rows*cols float32 LE, row-major.
FeatureMatrix read_features(std::istream& in, const std::string& origin = "<stream>");
FeatureMatrix load_features(const std::filesystem::path& path);
void write_features(std::ostream& out, const FeatureMatrix& m);
void save_features(const FeatureMatrix& m, const std::filesystem::path& path);

// Little-endian primitives shared with the checkpoint format.
namespace le {
void put_u32(std::ostream& out, std::uint32_t v);
void put_f32(std::ostream& out, float v);
bool get_u32(std::istream& in, std::uint32_t& v);
bool get_f32(std::istream& in, float& v);
}  // namespace le

}  // namespace rjca
