#pragma once

#include <vector>

#include "cvs/common.hpp"
#include "cvs/frame.hpp"

namespace cvs {

// Per-block random projection with orthonormal rows. The global sensing
// operator is block-diagonal: the same matrix is applied to every B x B
// block of a frame, blocks enumerated in raster order and vectorized
// column-major.
struct SensingMatrix {
  Matrix entries;  // m_b x n_b, n_b = block_side^2
  int block_side = 0;
  std::uint64_t seed = 0;
  double mr = 0.0;

  int measurement_rows() const { return static_cast<int>(entries.rows()); }
  int block_pixels() const { return static_cast<int>(entries.cols()); }
};

// Seeded i.i.d. Gaussian entries, rows orthonormalized by Householder QR
// with the R diagonal forced positive (kills the QR sign ambiguity, so a
// given (seed, mr, block_side) is bitwise reproducible).
// m_b = floor(mr * block_side^2).
SensingMatrix gen_sensing_matrix(std::uint64_t seed, double mr, int block_side);

struct BlockGrid {
  int rows = 0, cols = 0, block_side = 0;

  int blocks_down() const { return rows / block_side; }
  int blocks_across() const { return cols / block_side; }
  int block_count() const { return blocks_down() * blocks_across(); }
};

BlockGrid block_grid(int rows, int cols, int block_side);

// Column-major vectorization of block i (raster order) of the frame.
Vector block_to_vector(const Matrix& img, const BlockGrid& grid, int block_index);

// f_i = Phi_B u_i (+ optional i.i.d. Gaussian noise), one vector per block.
std::vector<Vector> measure_frame(const Matrix& img, const SensingMatrix& phi,
                                  double noise_sigma = 0.0, std::uint64_t noise_seed = 0);

// Stacked forms used by the solvers: measurements of all blocks concatenated
// in raster order.
Vector apply_global_forward(const Matrix& img, const SensingMatrix& phi);
Matrix apply_global_adjoint(const Vector& stacked, const SensingMatrix& phi, int rows, int cols);

Vector stack_measurements(const std::vector<Vector>& per_block);

// Per-frame stacked measurements plus the geometry needed to interpret them.
struct MeasurementSet {
  int rows = 0, cols = 0;
  int block_side = 0;
  double mr_key = 0.0, mr_nonkey = 0.0;
  std::uint64_t seed_key = 0, seed_nonkey = 0;
  int gop_size = 1;
  std::vector<FrameRole> roles;
  std::vector<Vector> frames;  // stacked measurement vector per frame

  int frame_count() const { return static_cast<int>(frames.size()); }
};

}  // namespace cvs
