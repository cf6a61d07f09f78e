#pragma once

#include <vector>

#include "cvs/common.hpp"

namespace cvs {

// One grayscale frame. Pixels are kept real-valued through the whole
// decoder; quantization to 8 bits happens only at file boundaries.
struct Frame {
  Matrix pix;  // rows x cols, nominal range [0,255]

  int rows() const { return static_cast<int>(pix.rows()); }
  int cols() const { return static_cast<int>(pix.cols()); }
};

struct VideoSequence {
  std::vector<Frame> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int rows() const { return frames.empty() ? 0 : frames.front().rows(); }
  int cols() const { return frames.empty() ? 0 : frames.front().cols(); }
};

enum class FrameRole : std::uint8_t { Key, NonKey };

struct GopStructure {
  int gop_size = 1;
  std::vector<FrameRole> roles;

  bool is_key(int i) const { return roles.at(static_cast<std::size_t>(i)) == FrameRole::Key; }
  int key_count() const;
};

// Frame i is a key frame iff i % gop_size == 0.
GopStructure split_gop(int frame_count, int gop_size);

inline GopStructure split_gop(const VideoSequence& seq, int gop_size) {
  return split_gop(seq.frame_count(), gop_size);
}

}  // namespace cvs
