#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "rjca/train.hpp"

namespace rjca {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian):
//   "RJCK"  u32 version
//   u32 n, n bytes of TrainConfig text
//   u32 tensor count, then per tensor in name order:
//     u32 name length, name, u32 rank, rank x u32 extents, float32 payload
struct Checkpoint {
  TrainConfig config;
  ParamStore params;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const std::string& origin = "<stream>");
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace rjca
