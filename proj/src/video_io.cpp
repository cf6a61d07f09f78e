#include "cvs/video_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace cvs {

namespace {

std::string offset_msg(const std::string& path, std::uint64_t offset, const std::string& what) {
  std::ostringstream os;
  os << path << ": " << what << " (byte offset " << offset << ")";
  return os.str();
}

Frame frame_from_bytes(const std::vector<std::uint8_t>& buf, int rows, int cols) {
  Frame f;
  f.pix.resize(rows, cols);
  // raw8 payload is scanline (row-major) order.
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      f.pix(r, c) = static_cast<double>(buf[static_cast<std::size_t>(r) * cols + c]);
  return f;
}

VideoSequence load_raw8(const std::string& path, int rows, int cols, int max_frames) {
  if (rows <= 0 || cols <= 0) {
    // fall back to the sidecar written by save_sequence
    std::ifstream js(path + ".json");
    if (js) {
      try {
        const nlohmann::json sidecar = nlohmann::json::parse(js);
        rows = sidecar.value("rows", 0);
        cols = sidecar.value("cols", 0);
      } catch (const nlohmann::json::exception&) {
        throw io_error(path + ".json: malformed sidecar");
      }
    }
  }
  if (rows <= 0 || cols <= 0)
    throw config_error("load_sequence: raw8 needs positive rows/cols (or a JSON sidecar)");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open");
  in.seekg(0, std::ios::end);
  const std::uint64_t size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  const std::uint64_t frame_bytes = static_cast<std::uint64_t>(rows) * cols;
  const std::uint64_t available = size / frame_bytes;
  if (available == 0)
    throw io_error(offset_msg(path, size, "truncated payload: shorter than one frame"));
  if (max_frames > 0 && static_cast<std::uint64_t>(max_frames) > available)
    throw io_error(offset_msg(path, size,
                              "truncated payload: requested " + std::to_string(max_frames) +
                                  " frames, file holds " + std::to_string(available)));
  const std::uint64_t want = max_frames > 0 ? static_cast<std::uint64_t>(max_frames) : available;

  VideoSequence seq;
  std::vector<std::uint8_t> buf(frame_bytes);
  for (std::uint64_t i = 0; i < want; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(frame_bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != frame_bytes)
      throw io_error(offset_msg(path, i * frame_bytes + static_cast<std::uint64_t>(in.gcount()),
                                "truncated payload"));
    seq.frames.push_back(frame_from_bytes(buf, rows, cols));
  }
  return seq;
}

struct Y4mHeader {
  int width = 0;
  int height = 0;
  std::string chroma = "420";  // YUV4MPEG2 streams default to 4:2:0
};

Y4mHeader parse_y4m_header(const std::string& path, const std::string& line) {
  std::istringstream is(line);
  std::string tok;
  is >> tok;
  if (tok != "YUV4MPEG2") throw io_error(offset_msg(path, 0, "malformed header: not a YUV4MPEG2 stream"));
  Y4mHeader h;
  while (is >> tok) {
    if (tok.size() < 2) continue;
    switch (tok[0]) {
      case 'W': h.width = std::stoi(tok.substr(1)); break;
      case 'H': h.height = std::stoi(tok.substr(1)); break;
      case 'C': h.chroma = tok.substr(1); break;
      default: break;  // F/I/A/X parameters are irrelevant to the luma plane
    }
  }
  if (h.width <= 0 || h.height <= 0)
    throw io_error(offset_msg(path, 0, "malformed header: missing W/H"));
  return h;
}

VideoSequence load_y4m(const std::string& path, int rows, int cols, int max_frames) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open");
  std::string header;
  if (!std::getline(in, header)) throw io_error(offset_msg(path, 0, "malformed header: empty file"));
  const Y4mHeader h = parse_y4m_header(path, header);

  const bool mono = h.chroma.rfind("mono", 0) == 0;
  const bool c420 = h.chroma.rfind("420", 0) == 0;
  if (!mono && !c420)
    throw io_error(offset_msg(path, 0, "unsupported chroma subsampling C" + h.chroma));
  if ((rows > 0 && rows != h.height) || (cols > 0 && cols != h.width)) {
    std::ostringstream os;
    os << "geometry mismatch: header says " << h.width << "x" << h.height << ", caller expects "
       << cols << "x" << rows;
    throw io_error(offset_msg(path, 0, os.str()));
  }

  const std::uint64_t luma_bytes = static_cast<std::uint64_t>(h.width) * h.height;
  const std::uint64_t chroma_bytes =
      mono ? 0 : 2 * (static_cast<std::uint64_t>((h.width + 1) / 2) * ((h.height + 1) / 2));

  VideoSequence seq;
  std::vector<std::uint8_t> buf(luma_bytes);
  std::string frame_line;
  while (std::getline(in, frame_line)) {
    const std::uint64_t line_start =
        static_cast<std::uint64_t>(in.tellg()) - frame_line.size() - 1;
    if (frame_line.rfind("FRAME", 0) != 0)
      throw io_error(offset_msg(path, line_start, "malformed frame marker"));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(luma_bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != luma_bytes)
      throw io_error(offset_msg(path, line_start + frame_line.size() + 1 +
                                          static_cast<std::uint64_t>(in.gcount()),
                                "truncated luma plane"));
    in.seekg(static_cast<std::streamoff>(chroma_bytes), std::ios::cur);
    if (!in && chroma_bytes > 0)
      throw io_error(offset_msg(path, static_cast<std::uint64_t>(-1), "truncated chroma planes"));
    seq.frames.push_back(frame_from_bytes(buf, h.height, h.width));
    if (max_frames > 0 && seq.frame_count() >= max_frames) break;
  }
  if (seq.frames.empty()) throw io_error(offset_msg(path, header.size() + 1, "no frames in stream"));
  return seq;
}

}  // namespace

std::uint8_t to_byte(double pixel) {
  const double clamped = std::clamp(pixel, 0.0, 255.0);
  return static_cast<std::uint8_t>(std::lround(clamped));
}

VideoSequence load_sequence(const std::string& path, VideoFormat format, int rows, int cols,
                            int max_frames) {
  switch (format) {
    case VideoFormat::Raw8: return load_raw8(path, rows, cols, max_frames);
    case VideoFormat::Y4mLuma: return load_y4m(path, rows, cols, max_frames);
  }
  throw config_error("load_sequence: unknown format");
}

void save_sequence(const VideoSequence& seq, const std::string& path, VideoFormat format,
                   double fps) {
  if (seq.frames.empty()) throw config_error("save_sequence: empty sequence");
  const int rows = seq.rows(), cols = seq.cols();
  for (const Frame& f : seq.frames)
    if (f.rows() != rows || f.cols() != cols)
      throw config_error("save_sequence: non-uniform frame geometry");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path + ": cannot open for writing");

  if (format == VideoFormat::Y4mLuma) {
    out << "YUV4MPEG2 W" << cols << " H" << rows << " F30:1 Ip A1:1 Cmono\n";
  }
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(rows) * cols);
  for (const Frame& f : seq.frames) {
    if (format == VideoFormat::Y4mLuma) out << "FRAME\n";
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        buf[static_cast<std::size_t>(r) * cols + c] = to_byte(f.pix(r, c));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw io_error(path + ": write failed");
  out.close();

  if (format == VideoFormat::Raw8) {
    nlohmann::json sidecar = {
        {"rows", rows}, {"cols", cols}, {"fps", fps}, {"frame_count", seq.frame_count()}};
    std::ofstream js(path + ".json");
    if (!js) throw io_error(path + ".json: cannot open for writing");
    js << sidecar.dump(2) << "\n";
  }
}

}  // namespace cvs
