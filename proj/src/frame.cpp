#include "cvs/frame.hpp"

namespace cvs {

int GopStructure::key_count() const {
  int n = 0;
  for (FrameRole r : roles)
    if (r == FrameRole::Key) ++n;
  return n;
}

GopStructure split_gop(int frame_count, int gop_size) {
  if (gop_size < 1) throw config_error("split_gop: gop_size must be >= 1");
  if (frame_count < 0) throw config_error("split_gop: negative frame count");
  GopStructure gop;
  gop.gop_size = gop_size;
  gop.roles.resize(static_cast<std::size_t>(frame_count));
  for (int i = 0; i < frame_count; ++i)
    gop.roles[static_cast<std::size_t>(i)] = (i % gop_size == 0) ? FrameRole::Key : FrameRole::NonKey;
  return gop;
}

}  // namespace cvs
