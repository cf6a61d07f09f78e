#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cvs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bad user-supplied configuration or malformed input file.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A solver produced a non-finite iterate.
class divergence_error : public std::runtime_error {
 public:
  explicit divergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic Gaussian source. std::normal_distribution is
// implementation-defined, so the Box-Muller transform is spelled out here;
// identical seeds give identical streams on every platform.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  double next();

  // Uniform in [0,1), 53-bit resolution.
  double next_uniform();

 private:
  std::uint64_t next_u64();

  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Runs fn(i) for i in [0, n). Work is split into chunks whose boundaries do
// not depend on the thread count, so writes to disjoint slots are
// reproducible under any CVS_THREADS setting.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Thread cap: min(hardware_concurrency, CVS_THREADS) with CVS_THREADS=0/unset
// meaning no cap.
unsigned thread_count();

// FNV-1a over a string; used to stamp CSV rows with the originating config.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace cvs
