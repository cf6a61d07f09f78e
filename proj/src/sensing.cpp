#include "cvs/sensing.hpp"

#include <cmath>

#include <Eigen/QR>

namespace cvs {

SensingMatrix gen_sensing_matrix(std::uint64_t seed, double mr, int block_side) {
  if (block_side <= 0) throw config_error("gen_sensing_matrix: block_side must be positive");
  if (!(mr > 0.0) || mr > 1.0) throw config_error("gen_sensing_matrix: mr must be in (0,1]");
  const int n_b = block_side * block_side;
  const int m_b = static_cast<int>(std::floor(mr * n_b));
  if (m_b < 1) throw config_error("gen_sensing_matrix: zero measurement rows");

  GaussianSource gauss(seed);
  Matrix g(m_b, n_b);
  // Row-major fill order so the stream layout is part of the format.
  for (int r = 0; r < m_b; ++r)
    for (int c = 0; c < n_b; ++c) g(r, c) = gauss.next();

  // Orthonormalize the rows: QR of G^T gives Q with orthonormal columns,
  // then Phi = Q^T. Flipping columns where diag(R) < 0 pins the sign.
  Eigen::HouseholderQR<Matrix> qr(g.transpose());
  Matrix q = qr.householderQ() * Matrix::Identity(n_b, m_b);
  const Matrix r_full = qr.matrixQR().topRows(m_b).triangularView<Eigen::Upper>();
  for (int k = 0; k < m_b; ++k)
    if (r_full(k, k) < 0.0) q.col(k) = -q.col(k);

  SensingMatrix phi;
  phi.entries = q.transpose();
  phi.block_side = block_side;
  phi.seed = seed;
  phi.mr = mr;
  return phi;
}

BlockGrid block_grid(int rows, int cols, int block_side) {
  if (rows <= 0 || cols <= 0) throw config_error("block_grid: empty frame");
  if (rows % block_side != 0 || cols % block_side != 0)
    throw config_error("block_grid: frame " + std::to_string(cols) + "x" + std::to_string(rows) +
                       " not divisible by block side " + std::to_string(block_side));
  return BlockGrid{rows, cols, block_side};
}

Vector block_to_vector(const Matrix& img, const BlockGrid& grid, int block_index) {
  const int across = grid.blocks_across();
  const int br = block_index / across;
  const int bc = block_index % across;
  const int b = grid.block_side;
  return img.block(br * b, bc * b, b, b).reshaped();
}

std::vector<Vector> measure_frame(const Matrix& img, const SensingMatrix& phi, double noise_sigma,
                                  std::uint64_t noise_seed) {
  const BlockGrid grid = block_grid(static_cast<int>(img.rows()), static_cast<int>(img.cols()),
                                    phi.block_side);
  std::vector<Vector> out(static_cast<std::size_t>(grid.block_count()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = phi.entries * block_to_vector(img, grid, static_cast<int>(i));
  });
  if (noise_sigma > 0.0) {
    GaussianSource gauss(noise_seed);
    for (Vector& f : out)
      for (Eigen::Index j = 0; j < f.size(); ++j) f[j] += noise_sigma * gauss.next();
  }
  return out;
}

Vector apply_global_forward(const Matrix& img, const SensingMatrix& phi) {
  const BlockGrid grid = block_grid(static_cast<int>(img.rows()), static_cast<int>(img.cols()),
                                    phi.block_side);
  const int m_b = phi.measurement_rows();
  Vector out(static_cast<Eigen::Index>(grid.block_count()) * m_b);
  parallel_for(static_cast<std::size_t>(grid.block_count()), [&](std::size_t i) {
    out.segment(static_cast<Eigen::Index>(i) * m_b, m_b) =
        phi.entries * block_to_vector(img, grid, static_cast<int>(i));
  });
  return out;
}

Matrix apply_global_adjoint(const Vector& stacked, const SensingMatrix& phi, int rows, int cols) {
  const BlockGrid grid = block_grid(rows, cols, phi.block_side);
  const int m_b = phi.measurement_rows();
  if (stacked.size() != static_cast<Eigen::Index>(grid.block_count()) * m_b)
    throw config_error("apply_global_adjoint: measurement length does not match block grid");
  Matrix img(rows, cols);
  const int b = grid.block_side;
  const int across = grid.blocks_across();
  parallel_for(static_cast<std::size_t>(grid.block_count()), [&](std::size_t i) {
    const Vector u = phi.entries.transpose() * stacked.segment(static_cast<Eigen::Index>(i) * m_b, m_b);
    const int br = static_cast<int>(i) / across;
    const int bc = static_cast<int>(i) % across;
    img.block(br * b, bc * b, b, b) = u.reshaped(b, b);
  });
  return img;
}

Vector stack_measurements(const std::vector<Vector>& per_block) {
  Eigen::Index total = 0;
  for (const Vector& f : per_block) total += f.size();
  Vector out(total);
  Eigen::Index at = 0;
  for (const Vector& f : per_block) {
    out.segment(at, f.size()) = f;
    at += f.size();
  }
  return out;
}

}  // namespace cvs
