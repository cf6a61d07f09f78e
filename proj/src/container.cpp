#include "cvs/container.hpp"

#include <cmath>
#include <fstream>

#include "cvs/binio.hpp"

namespace cvs {

namespace {

constexpr char kMagic[5] = {'C', 'V', 'S', 'M', '1'};
constexpr std::uint8_t kVectorizationColumnMajor = 0;
constexpr std::uint8_t kRoleKey = 'K';
constexpr std::uint8_t kRoleNonKey = 'N';

int measurements_per_block(double mr, int block_side) {
  return static_cast<int>(std::floor(mr * block_side * block_side));
}

}  // namespace

void write_container(const MeasurementSet& set, const std::string& path) {
  if (set.frames.size() != set.roles.size())
    throw config_error("write_container: role/frame count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path + ": cannot open for writing");
  out.write(kMagic, 5);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.rows));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.cols));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.block_side));
  binio::write_le<double>(out, set.mr_key);
  binio::write_le<double>(out, set.mr_nonkey);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.gop_size));
  binio::write_le<std::uint64_t>(out, set.seed_key);
  binio::write_le<std::uint64_t>(out, set.seed_nonkey);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.frame_count()));
  binio::write_le<std::uint8_t>(out, kVectorizationColumnMajor);
  for (int i = 0; i < set.frame_count(); ++i) {
    const bool key = set.roles[static_cast<std::size_t>(i)] == FrameRole::Key;
    binio::write_le<std::uint8_t>(out, key ? kRoleKey : kRoleNonKey);
    const Vector& f = set.frames[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < f.size(); ++j) binio::write_le<double>(out, f[j]);
  }
  if (!out) throw io_error(path + ": write failed");
}

MeasurementSet read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open");
  char magic[5];
  in.read(magic, 5);
  if (in.gcount() != 5 || std::string(magic, 5) != std::string(kMagic, 5))
    throw io_error(path + ": bad magic, not a CVSM1 container");

  MeasurementSet set;
  set.rows = static_cast<int>(binio::read_le<std::uint32_t>(in, path, "rows"));
  set.cols = static_cast<int>(binio::read_le<std::uint32_t>(in, path, "cols"));
  set.block_side = static_cast<int>(binio::read_le<std::uint32_t>(in, path, "block_side"));
  set.mr_key = binio::read_le<double>(in, path, "mr_key");
  set.mr_nonkey = binio::read_le<double>(in, path, "mr_nonkey");
  set.gop_size = static_cast<int>(binio::read_le<std::uint32_t>(in, path, "gop_size"));
  set.seed_key = binio::read_le<std::uint64_t>(in, path, "seed_key");
  set.seed_nonkey = binio::read_le<std::uint64_t>(in, path, "seed_nonkey");
  const auto frames = binio::read_le<std::uint32_t>(in, path, "frame_count");
  const auto tag = binio::read_le<std::uint8_t>(in, path, "vectorization tag");
  if (tag != kVectorizationColumnMajor)
    throw io_error(path + ": unsupported vectorization tag " + std::to_string(tag));
  if (set.rows <= 0 || set.cols <= 0 || set.block_side <= 0 ||
      set.rows % set.block_side != 0 || set.cols % set.block_side != 0)
    throw io_error(path + ": inconsistent geometry header");

  const int blocks = (set.rows / set.block_side) * (set.cols / set.block_side);
  for (std::uint32_t i = 0; i < frames; ++i) {
    const auto role = binio::read_le<std::uint8_t>(in, path, "role byte");
    if (role != kRoleKey && role != kRoleNonKey)
      throw io_error(path + ": unknown frame role " + std::to_string(role));
    const bool key = role == kRoleKey;
    set.roles.push_back(key ? FrameRole::Key : FrameRole::NonKey);
    const int m_b = measurements_per_block(key ? set.mr_key : set.mr_nonkey, set.block_side);
    Vector f(static_cast<Eigen::Index>(blocks) * m_b);
    for (Eigen::Index j = 0; j < f.size(); ++j)
      f[j] = binio::read_le<double>(in, path, "measurement payload");
    set.frames.push_back(std::move(f));
  }
  return set;
}

}  // namespace cvs
