#pragma once

// Binary weight checkpoints. Layout, all little-endian:
//
//   0   8  magic "ARLABCKP"
//   8   4  u32 format version (1)
//   12  4  u32 reserved (0)
//   16  4  i32 d
//   20  4  i32 k
//   24  4  i32 N
//   28  4  u32 feature-map kind (0 dense, 1 experiment, 2 constant, 3 hard)
//   32  8  i64 step
//   40  8  u64 D
//   48  8D f64 weights
//
// The teacher sidecar uses magic "ARLABTCH" with (d, k) followed by W1 then W2.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>

#include "arlab/tasks.hpp"

namespace arlab::harness {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
  int d = 0;
  int k = 0;
  int length = 0;
  std::string map_kind;
  std::int64_t step = 0;

  bool operator==(const CheckpointMeta&) const = default;
};

struct LoadedCheckpoint {
  CheckpointMeta meta;
  Weights w;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Writes through a temporary file and a rename.
void write_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                      std::span<const double> w);
LoadedCheckpoint read_checkpoint(const std::filesystem::path& path);

void write_teacher(const std::filesystem::path& path, const Teacher& teacher);
std::shared_ptr<const Teacher> read_teacher(const std::filesystem::path& path);

// "ckpt_00001000.bin"
std::string checkpoint_name(std::int64_t step);
// All ckpt_*.bin files in dir, ordered by step.
std::vector<std::filesystem::path> list_checkpoints(const std::filesystem::path& dir);

}  // namespace arlab::harness
