#include "arlab/harness/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include <fmt/format.h>

namespace arlab::harness {

namespace {

constexpr std::array<char, 8> kMagic{'A', 'R', 'L', 'A', 'B', 'C', 'K', 'P'};
constexpr std::array<char, 8> kTeacherMagic{'A', 'R', 'L', 'A', 'B', 'T', 'C', 'H'};

class ByteWriter {
 public:
  void raw(std::span<const char> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  template <class U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
    }
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string name) : d_(std::move(data)), name_(std::move(name)) {}
  void need(std::size_t n) const {
    if (pos_ + n > d_.size()) throw FormatError(name_ + ": truncated file");
  }
  std::array<char, 8> magic() {
    need(8);
    std::array<char, 8> m{};
    std::memcpy(m.data(), d_.data() + pos_, 8);
    pos_ += 8;
    return m;
  }
  template <class U>
  U le() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(d_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  bool at_end() const { return pos_ == d_.size(); }

 private:
  std::vector<char> d_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::uint32_t kind_code(const std::string& kind) {
  if (kind == "dense") return 0;
  if (kind == "experiment") return 1;
  if (kind == "constant") return 2;
  if (kind == "hard") return 3;
  throw std::invalid_argument("unknown feature-map kind '" + kind + "'");
}

std::string kind_name(std::uint32_t code) {
  switch (code) {
    case 0: return "dense";
    case 1: return "experiment";
    case 2: return "constant";
    case 3: return "hard";
  }
  throw FormatError(fmt::format("unknown feature-map code {}", code));
}

void write_atomic(const std::filesystem::path& path, const std::vector<char>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                      std::span<const double> w) {
  ByteWriter b;
  b.raw(kMagic);
  b.le<std::uint32_t>(kCheckpointVersion);
  b.le<std::uint32_t>(0);
  b.le<std::uint32_t>(static_cast<std::uint32_t>(meta.d));
  b.le<std::uint32_t>(static_cast<std::uint32_t>(meta.k));
  b.le<std::uint32_t>(static_cast<std::uint32_t>(meta.length));
  b.le<std::uint32_t>(kind_code(meta.map_kind));
  b.le<std::uint64_t>(static_cast<std::uint64_t>(meta.step));
  b.le<std::uint64_t>(w.size());
  for (double v : w) b.f64(v);
  write_atomic(path, b.bytes());
}

LoadedCheckpoint read_checkpoint(const std::filesystem::path& path) {
  ByteReader r(slurp(path), path.string());
  if (r.magic() != kMagic) throw FormatError(path.string() + ": not a checkpoint file");
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(fmt::format("{}: unsupported checkpoint version {}", path.string(), version));
  }
  r.le<std::uint32_t>();
  LoadedCheckpoint c;
  c.meta.d = static_cast<std::int32_t>(r.le<std::uint32_t>());
  c.meta.k = static_cast<std::int32_t>(r.le<std::uint32_t>());
  c.meta.length = static_cast<std::int32_t>(r.le<std::uint32_t>());
  c.meta.map_kind = kind_name(r.le<std::uint32_t>());
  c.meta.step = static_cast<std::int64_t>(r.le<std::uint64_t>());
  const auto dim = r.le<std::uint64_t>();
  r.need(dim * 8);
  c.w.resize(dim);
  for (double& v : c.w) v = r.f64();
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");
  return c;
}

void write_teacher(const std::filesystem::path& path, const Teacher& teacher) {
  ByteWriter b;
  b.raw(kTeacherMagic);
  b.le<std::uint32_t>(kCheckpointVersion);
  b.le<std::uint32_t>(0);
  b.le<std::uint32_t>(static_cast<std::uint32_t>(teacher.d));
  b.le<std::uint32_t>(static_cast<std::uint32_t>(teacher.k));
  for (double v : teacher.w1) b.f64(v);
  for (double v : teacher.w2) b.f64(v);
  write_atomic(path, b.bytes());
}

std::shared_ptr<const Teacher> read_teacher(const std::filesystem::path& path) {
  ByteReader r(slurp(path), path.string());
  if (r.magic() != kTeacherMagic) throw FormatError(path.string() + ": not a teacher file");
  if (r.le<std::uint32_t>() != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported teacher version");
  }
  r.le<std::uint32_t>();
  auto t = std::make_shared<Teacher>();
  t->d = static_cast<std::int32_t>(r.le<std::uint32_t>());
  t->k = static_cast<std::int32_t>(r.le<std::uint32_t>());
  if (t->d < 1 || t->k < 1) throw FormatError(path.string() + ": bad teacher shape");
  t->w1.resize(static_cast<std::size_t>(t->k) * static_cast<std::size_t>(t->d));
  t->w2.resize(static_cast<std::size_t>(t->k) * static_cast<std::size_t>(t->k));
  r.need((t->w1.size() + t->w2.size()) * 8);
  for (double& v : t->w1) v = r.f64();
  for (double& v : t->w2) v = r.f64();
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");
  return t;
}

std::string checkpoint_name(std::int64_t step) { return fmt::format("ckpt_{:08d}.bin", step); }

std::vector<std::filesystem::path> list_checkpoints(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("ckpt_", 0) == 0 && e.path().extension() == ".bin") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());  // zero-padded names sort by step
  return out;
}

}  // namespace arlab::harness
