#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cvs/container.hpp"
#include "cvs/pipeline.hpp"
#include "test_util.hpp"

using cvs::MeasurementSet;
using cvs::Vector;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cvsm container round-trips an encoded sequence bitwise") {
  const cvs::VideoSequence seq = cvs_test::synthetic_sequence(32, 32, 6, 3);
  cvs::PipelineConfig config;
  config.block_side = 16;
  config.mr_key = 0.5;
  config.mr_nonkey = 0.25;
  config.gop_size = 3;
  config.seed = 99;
  const MeasurementSet set = cvs::encode_sequence(seq, config);

  const std::string path = temp_path("cvs_container_test.cvsm");
  cvs::write_container(set, path);
  const MeasurementSet loaded = cvs::read_container(path);

  CHECK(loaded.rows == 32);
  CHECK(loaded.cols == 32);
  CHECK(loaded.block_side == 16);
  CHECK(loaded.mr_key == 0.5);
  CHECK(loaded.mr_nonkey == 0.25);
  CHECK(loaded.gop_size == 3);
  CHECK(loaded.seed_key == set.seed_key);
  CHECK(loaded.seed_nonkey == set.seed_nonkey);
  REQUIRE(loaded.frame_count() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(loaded.roles[static_cast<std::size_t>(i)] == set.roles[static_cast<std::size_t>(i)]);
    CHECK(loaded.frames[static_cast<std::size_t>(i)] == set.frames[static_cast<std::size_t>(i)]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("role bytes land as K and N in the payload") {
  const cvs::VideoSequence seq = cvs_test::synthetic_sequence(16, 16, 4, 5);
  cvs::PipelineConfig config;
  config.block_side = 16;
  config.gop_size = 2;
  const MeasurementSet set = cvs::encode_sequence(seq, config);
  const std::string path = temp_path("cvs_container_roles.cvsm");
  cvs::write_container(set, path);
  const std::string bytes = file_bytes(path);
  REQUIRE(bytes.substr(0, 5) == "CVSM1");
  // header is 5 + 3*4 + 2*8 + 4 + 2*8 + 4 + 1 = 58 bytes, then frame 0 role
  CHECK(bytes[58] == 'K');
  std::filesystem::remove(path);
}

TEST_CASE("key and non-key payload lengths follow their ratios") {
  const cvs::VideoSequence seq = cvs_test::synthetic_sequence(32, 32, 3, 7);
  cvs::PipelineConfig config;
  config.block_side = 16;
  config.mr_key = 0.5;
  config.mr_nonkey = 0.1;
  config.gop_size = 3;
  const MeasurementSet set = cvs::encode_sequence(seq, config);
  CHECK(set.frames[0].size() == 4 * 128);  // floor(0.5*256) per block, 4 blocks
  CHECK(set.frames[1].size() == 4 * 25);   // floor(0.1*256)
}

TEST_CASE("re-encoding with equal seeds is bitwise identical on disk") {
  const cvs::VideoSequence seq = cvs_test::synthetic_sequence(32, 32, 5, 11);
  cvs::PipelineConfig config;
  config.block_side = 16;
  config.seed = 1234;
  const std::string a = temp_path("cvs_container_a.cvsm");
  const std::string b = temp_path("cvs_container_b.cvsm");
  cvs::write_container(cvs::encode_sequence(seq, config), a);
  cvs::write_container(cvs::encode_sequence(seq, config), b);
  CHECK(file_bytes(a) == file_bytes(b));
  config.seed = 1235;
  cvs::write_container(cvs::encode_sequence(seq, config), b);
  CHECK(file_bytes(a) != file_bytes(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST_CASE("corrupt containers are rejected") {
  const std::string path = temp_path("cvs_container_bad.cvsm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "JUNK!";
  }
  CHECK_THROWS_AS(cvs::read_container(path), cvs::io_error);
  {
    std::ofstream out(path, std::ios::binary);
    out << "CVSM1";  // header cut short
  }
  CHECK_THROWS_AS(cvs::read_container(path), cvs::io_error);
  std::filesystem::remove(path);
}

TEST_CASE("derived seeds differ by role") {
  CHECK(cvs::derive_seed(7, 'K') != cvs::derive_seed(7, 'N'));
  CHECK(cvs::derive_seed(7, 'K') == cvs::derive_seed(7, 'K'));
  CHECK(cvs::derive_seed(7, 'K') != cvs::derive_seed(8, 'K'));
}
