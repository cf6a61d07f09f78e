#pragma once

#include <string>

#include "cvs/frame.hpp"

namespace cvs {

enum class VideoFormat { Raw8, Y4mLuma };

// Reads grayscale frames. raw8 is headerless planar 8-bit luma and needs
// rows/cols from the caller (a JSON sidecar written by save_sequence can
// supply them, but the explicit arguments win). y4m parses the YUV4MPEG2
// header; only C420* and Cmono streams are accepted and chroma planes are
// skipped. Nonzero rows/cols passed alongside a y4m stream must match the
// header. max_frames = 0 means "all frames in the file".
VideoSequence load_sequence(const std::string& path, VideoFormat format, int rows, int cols,
                            int max_frames = 0);

// Writes 8-bit output: pixels are clamped to [0,255] and rounded to nearest.
// raw8 gets a "<path>.json" sidecar carrying rows/cols/fps/frame_count;
// y4m is emitted as Cmono.
void save_sequence(const VideoSequence& seq, const std::string& path, VideoFormat format,
                   double fps = 30.0);

std::uint8_t to_byte(double pixel);

}  // namespace cvs
