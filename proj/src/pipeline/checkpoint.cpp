#include "rjca/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "rjca/feature_io.hpp"

namespace rjca {

namespace {

constexpr char kMagic[4] = {'R', 'J', 'C', 'K'};
constexpr std::uint32_t kMaxStringBytes = 1u << 20;

void put_string(std::ostream& out, const std::string& s) {
  le::put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t need_u32(std::istream& in, const std::string& origin, const char* what) {
  std::uint32_t v = 0;
  if (!le::get_u32(in, v)) throw CheckpointError(origin + ": truncated while reading " + what);
  return v;
}

std::string need_string(std::istream& in, const std::string& origin, const char* what) {
  const std::uint32_t n = need_u32(in, origin, what);
  if (n > kMaxStringBytes) throw CheckpointError(origin + ": implausible length for " + what);
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw CheckpointError(origin + ": truncated while reading " + what);
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, 4);
  le::put_u32(out, kCheckpointVersion);
  put_string(out, ckpt.config.to_text());
  le::put_u32(out, static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, t] : ckpt.params) {
    put_string(out, name);
    le::put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) le::put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : t.values()) {
      if (std::abs(v) > std::numeric_limits<float>::max()) {
        throw CheckpointError("checkpoint: parameter '" + name + "' overflows single precision");
      }
      le::put_f32(out, static_cast<float>(v));
    }
  }
}

Checkpoint read_checkpoint(std::istream& in, const std::string& origin) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(origin + ": not a checkpoint (bad magic)");
  }
  const std::uint32_t version = need_u32(in, origin, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(origin + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = TrainConfig::from_text(need_string(in, origin, "config"));
  const std::uint32_t count = need_u32(in, origin, "tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = need_string(in, origin, "tensor name");
    const std::uint32_t rank = need_u32(in, origin, "rank");
    if (rank < 1 || rank > 3) throw CheckpointError(origin + ": tensor '" + name + "' has rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape.push_back(need_u32(in, origin, "extent"));
      n *= shape.back();
    }
    if (n > kMaxFeatureElements) throw CheckpointError(origin + ": tensor '" + name + "' is implausibly large");
    std::vector<double> data(n);
    for (auto& v : data) {
      float f = 0.0f;
      if (!le::get_f32(in, f)) throw CheckpointError(origin + ": truncated payload of '" + name + "'");
      if (!std::isfinite(f)) throw CheckpointError(origin + ": non-finite value in '" + name + "'");
      v = f;
    }
    if (ckpt.params.contains(name)) throw CheckpointError(origin + ": duplicate tensor '" + name + "'");
    ckpt.params.set(name, Tensor(shape, std::move(data)));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError(origin + ": trailing bytes after last tensor");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return read_checkpoint(in, path.string());
}

Model model_from_checkpoint(const Checkpoint& ckpt) { return Model(ckpt.config.model, ckpt.params); }

}  // namespace rjca
