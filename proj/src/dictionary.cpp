#include "cvs/dictionary.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cvs/binio.hpp"

namespace cvs {

void Dictionary::validate() const {
  if (!atoms.allFinite()) throw config_error("Dictionary: non-finite entries");
  for (int k = 0; k < atom_count(); ++k) {
    const double norm = atoms.col(k).norm();
    if (std::abs(norm - 1.0) > 1e-10)
      throw config_error("Dictionary: atom " + std::to_string(k) + " has norm " +
                         std::to_string(norm));
  }
}

double SparseCode::value_at(int atom) const {
  const auto it = std::lower_bound(idx.begin(), idx.end(), atom);
  if (it == idx.end() || *it != atom) return 0.0;
  return val[static_cast<std::size_t>(it - idx.begin())];
}

bool SparseCode::uses(int atom) const {
  return std::binary_search(idx.begin(), idx.end(), atom);
}

Vector code_to_dense(const SparseCode& code, int atom_count) {
  Vector dense = Vector::Zero(atom_count);
  for (std::size_t i = 0; i < code.idx.size(); ++i) dense[code.idx[i]] = code.val[i];
  return dense;
}

SparseCode code_from_dense(const Vector& dense) {
  SparseCode code;
  for (Eigen::Index i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      code.idx.push_back(static_cast<int>(i));
      code.val.push_back(dense[i]);
    }
  }
  return code;
}

Dictionary init_dictionary(int atom_dim, int atom_count, DictInit kind, std::uint64_t seed) {
  if (atom_dim <= 0 || atom_count <= 0) throw config_error("init_dictionary: invalid dimensions");
  Dictionary dict;
  if (kind == DictInit::SeededRandom) {
    GaussianSource gauss(seed);
    dict.atoms.resize(atom_dim, atom_count);
    for (int c = 0; c < atom_count; ++c)
      for (int r = 0; r < atom_dim; ++r) dict.atoms(r, c) = gauss.next();
  } else {
    const int p = static_cast<int>(std::lround(std::sqrt(static_cast<double>(atom_dim))));
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(atom_count))));
    if (p * p != atom_dim || k * k != atom_count || k < p)
      throw config_error("init_dictionary: overcomplete-dct needs square patch and atom counts "
                         "with atom_count >= atom_dim");
    // 1-D sampled-cosine base; exact DCT-II when k == p.
    Matrix base(p, k);
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < p; ++i)
        base(i, j) = std::cos(M_PI * (2.0 * i + 1.0) * j / (2.0 * k));
      base.col(j).normalize();
    }
    dict.atoms.resize(atom_dim, atom_count);
    for (int jc = 0; jc < k; ++jc)
      for (int jr = 0; jr < k; ++jr) {
        // Column-major patch vectorization: atom = base.col(jc) kron base.col(jr).
        Matrix outer = base.col(jr) * base.col(jc).transpose();
        dict.atoms.col(jc * k + jr) = outer.reshaped();
      }
  }
  for (int c = 0; c < atom_count; ++c) {
    const double norm = dict.atoms.col(c).norm();
    if (norm < 1e-12) throw config_error("init_dictionary: degenerate atom");
    dict.atoms.col(c) /= norm;
  }
  return dict;
}

SparseCode omp(const Vector& y, const Dictionary& dict, int sparsity_cap, double error_threshold) {
  if (!y.allFinite()) throw config_error("omp: non-finite input");
  if (y.size() != dict.atom_dim()) throw config_error("omp: input length != atom dimension");
  if (sparsity_cap < 1 && !(error_threshold > 0.0))
    throw config_error("omp: need sparsity_cap >= 1 or error_threshold > 0");
  for (int k = 0; k < dict.atom_count(); ++k)
    if (dict.atoms.col(k).norm() < 1e-12)
      throw config_error("omp: dictionary has a zero column");

  const int cap = sparsity_cap >= 1 ? std::min(sparsity_cap, dict.atom_dim()) : dict.atom_dim();
  const double corr_floor = 1e-10 * std::max(1.0, y.norm());

  std::vector<int> support;
  Matrix q(dict.atom_dim(), cap);  // orthonormalized selected atoms
  Matrix r_fact = Matrix::Zero(cap, cap);
  Vector z(cap);
  Vector residual = y;

  while (static_cast<int>(support.size()) < cap) {
    if (residual.squaredNorm() <= error_threshold) break;
    const Vector corr = dict.atoms.transpose() * residual;
    int best = -1;
    double best_abs = corr_floor;
    for (Eigen::Index k = 0; k < corr.size(); ++k) {
      if (std::abs(corr[k]) > best_abs) {
        best_abs = std::abs(corr[k]);
        best = static_cast<int>(k);
      }
    }
    if (best < 0) break;  // nothing correlates above noise floor

    // Modified Gram-Schmidt step against the atoms already selected.
    const int s = static_cast<int>(support.size());
    Vector v = dict.atoms.col(best);
    for (int j = 0; j < s; ++j) {
      r_fact(j, s) = q.col(j).dot(v);
      v -= r_fact(j, s) * q.col(j);
    }
    const double mag = v.norm();
    if (mag < 1e-12) break;  // linearly dependent on the active set
    r_fact(s, s) = mag;
    q.col(s) = v / mag;
    z[s] = q.col(s).dot(residual);
    residual -= z[s] * q.col(s);
    support.push_back(best);
  }

  // Back-substitute R x = z for the active-set least-squares coefficients.
  const int s = static_cast<int>(support.size());
  Vector coef(s);
  for (int i = s - 1; i >= 0; --i) {
    double acc = z[i];
    for (int j = i + 1; j < s; ++j) acc -= r_fact(i, j) * coef[j];
    coef[i] = acc / r_fact(i, i);
  }

  std::vector<int> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return support[a] < support[b]; });
  SparseCode code;
  code.idx.reserve(static_cast<std::size_t>(s));
  code.val.reserve(static_cast<std::size_t>(s));
  for (int i : order) {
    code.idx.push_back(support[static_cast<std::size_t>(i)]);
    code.val.push_back(coef[i]);
  }
  return code;
}

SparseCodeSet sparse_code_all(const std::vector<Vector>& patches, const Dictionary& dict,
                              int sparsity_cap, double error_threshold) {
  SparseCodeSet set;
  set.atom_count = dict.atom_count();
  set.codes.resize(patches.size());
  parallel_for(patches.size(), [&](std::size_t l) {
    set.codes[l] = omp(patches[l], dict, sparsity_cap, error_threshold);
  });
  return set;
}

std::vector<Vector> synthesize_patches(const SparseCodeSet& codes, const Dictionary& dict) {
  std::vector<Vector> out(codes.codes.size());
  parallel_for(out.size(), [&](std::size_t l) {
    const SparseCode& code = codes.codes[l];
    Vector acc = Vector::Zero(dict.atom_dim());
    for (std::size_t i = 0; i < code.idx.size(); ++i)
      acc += code.val[i] * dict.atoms.col(code.idx[i]);
    out[l] = std::move(acc);
  });
  return out;
}

Matrix synthesize_image(const SparseCodeSet& codes, const Dictionary& dict,
                        const PatchLayout& layout) {
  if (dict.atom_dim() != layout.patch_pixels())
    throw config_error("synthesize_image: atom dimension != patch pixels");
  if (codes.size() != layout.patch_count())
    throw config_error("synthesize_image: code count != patch count");
  return aggregate_patches(synthesize_patches(codes, dict), layout);
}

double fit_objective(const std::vector<Vector>& patches, const Dictionary& dict,
                     const SparseCodeSet& codes) {
  if (patches.size() != codes.codes.size())
    throw config_error("fit_objective: patch/code count mismatch");
  const std::vector<Vector> synth = synthesize_patches(codes, dict);
  double acc = 0.0;
  for (std::size_t l = 0; l < patches.size(); ++l) acc += (patches[l] - synth[l]).squaredNorm();
  return acc;
}

namespace {

// Index of the worst-approximated patch under the current model, skipping
// patches already consumed as replacements and near-zero patches.
int worst_patch(const std::vector<Vector>& patches, const Dictionary& dict,
                const SparseCodeSet& codes, const std::set<int>& taken) {
  const std::vector<Vector> synth = synthesize_patches(codes, dict);
  int best = -1;
  double best_err = -1.0;
  for (std::size_t l = 0; l < patches.size(); ++l) {
    if (taken.count(static_cast<int>(l))) continue;
    if (patches[l].norm() < 1e-12) continue;
    const double err = (patches[l] - synth[l]).squaredNorm();
    if (err > best_err) {  // strict greater: ties go to the lowest index
      best_err = err;
      best = static_cast<int>(l);
    }
  }
  return best;
}

// Leading singular triple (u, s, v) of a dense matrix via the symmetric
// eigenproblem on the smaller Gram side. Exact up to dense-eigensolver
// accuracy and much cheaper than a full SVD when only the top pair is used.
void leading_singular_pair(const Matrix& e, Vector& u, Vector& sv) {
  const Eigen::Index n = e.rows(), m = e.cols();
  if (m <= n) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(e.transpose() * e);
    const Eigen::Index last = m - 1;  // eigenvalues ascend
    const double sigma = std::sqrt(std::max(0.0, eig.eigenvalues()[last]));
    const Vector v = eig.eigenvectors().col(last);
    if (sigma < 1e-14) {
      u.setZero(n);
      sv = Vector::Zero(m);
      return;
    }
    u = e * v / sigma;
    u.normalize();
    sv = sigma * v;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(e * e.transpose());
    const Eigen::Index last = n - 1;
    const double sigma = std::sqrt(std::max(0.0, eig.eigenvalues()[last]));
    u = eig.eigenvectors().col(last);
    if (sigma < 1e-14) {
      u.setZero(n);
      sv = Vector::Zero(m);
      return;
    }
    sv = e.transpose() * u;
  }
}

// Rank-one refit of atom k against its users: leading singular pair of the
// residual that excludes atom k. Shared by K-SVD and single-atom MDU groups.
void rank_one_update(const std::vector<Vector>& patches, SparseCodeSet& codes, Dictionary& dict,
                     int k, const std::vector<int>& users) {
  const int n = dict.atom_dim();
  Matrix residual(n, static_cast<Eigen::Index>(users.size()));
  for (std::size_t j = 0; j < users.size(); ++j) {
    const int l = users[j];
    const SparseCode& code = codes.codes[static_cast<std::size_t>(l)];
    Vector e = patches[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < code.idx.size(); ++i)
      if (code.idx[i] != k) e -= code.val[i] * dict.atoms.col(code.idx[i]);
    residual.col(static_cast<Eigen::Index>(j)) = e;
  }
  Vector u, w;
  leading_singular_pair(residual, u, w);
  if (u.norm() < 0.5) return;  // degenerate residual: keep the atom as-is
  // Deterministic sign: largest-magnitude entry of the atom made positive.
  Eigen::Index imax = 0;
  u.cwiseAbs().maxCoeff(&imax);
  if (u[imax] < 0.0) {
    u = -u;
    w = -w;
  }
  dict.atoms.col(k) = u;
  for (std::size_t j = 0; j < users.size(); ++j) {
    SparseCode& code = codes.codes[static_cast<std::size_t>(users[j])];
    const auto it = std::lower_bound(code.idx.begin(), code.idx.end(), k);
    code.val[static_cast<std::size_t>(it - code.idx.begin())] = w[static_cast<Eigen::Index>(j)];
  }
}

void replace_dead_atom(const std::vector<Vector>& patches, const SparseCodeSet& codes,
                       Dictionary& dict, int k, std::set<int>& taken) {
  const int l = worst_patch(patches, dict, codes, taken);
  if (l < 0) return;  // nothing usable; leave the atom as-is
  taken.insert(l);
  dict.atoms.col(k) = patches[static_cast<std::size_t>(l)].normalized();
}

std::vector<int> users_of_atom(const SparseCodeSet& codes, int k) {
  std::vector<int> users;
  for (int l = 0; l < codes.size(); ++l)
    if (codes.codes[static_cast<std::size_t>(l)].uses(k)) users.push_back(l);
  return users;
}

}  // namespace

std::pair<Dictionary, SparseCodeSet> dict_update_mod(const std::vector<Vector>& patches,
                                                     const SparseCodeSet& codes,
                                                     const Dictionary& dict) {
  if (patches.size() != codes.codes.size())
    throw config_error("dict_update_mod: patch/code count mismatch");
  const int t = dict.atom_count();
  const int n = dict.atom_dim();
  const auto big_j = static_cast<Eigen::Index>(patches.size());

  Matrix lambda = Matrix::Zero(t, big_j);
  Matrix p(n, big_j);
  for (Eigen::Index l = 0; l < big_j; ++l) {
    p.col(l) = patches[static_cast<std::size_t>(l)];
    const SparseCode& code = codes.codes[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < code.idx.size(); ++i) lambda(code.idx[i], l) = code.val[i];
  }

  Matrix gram = lambda * lambda.transpose();
  const double trace = gram.trace();
  Dictionary updated = dict;
  SparseCodeSet rescaled = codes;
  if (trace > 0.0) {
    gram.diagonal().array() += 1e-8 * trace / t;
    updated.atoms = gram.ldlt().solve(lambda * p.transpose()).transpose();
  }

  std::set<int> taken;
  for (int k = 0; k < t; ++k) {
    const double norm = updated.atoms.col(k).norm();
    if (norm < 1e-12) {
      if (users_of_atom(codes, k).empty())
        replace_dead_atom(patches, codes, updated, k, taken);
      else
        updated.atoms.col(k) = dict.atoms.col(k);  // keep the previous direction
      continue;
    }
    updated.atoms.col(k) /= norm;
    for (SparseCode& code : rescaled.codes) {
      const auto it = std::lower_bound(code.idx.begin(), code.idx.end(), k);
      if (it != code.idx.end() && *it == k)
        code.val[static_cast<std::size_t>(it - code.idx.begin())] *= norm;
    }
  }
  return {std::move(updated), std::move(rescaled)};
}

std::pair<Dictionary, SparseCodeSet> dict_update_ksvd(const std::vector<Vector>& patches,
                                                      const SparseCodeSet& codes,
                                                      const Dictionary& dict) {
  if (patches.size() != codes.codes.size())
    throw config_error("dict_update_ksvd: patch/code count mismatch");
  Dictionary updated = dict;
  SparseCodeSet refit = codes;
  std::set<int> taken;
  for (int k = 0; k < dict.atom_count(); ++k) {
    const std::vector<int> users = users_of_atom(refit, k);
    if (users.empty()) {
      replace_dead_atom(patches, refit, updated, k, taken);
      continue;
    }
    rank_one_update(patches, refit, updated, k, users);
  }
  return {std::move(updated), std::move(refit)};
}

std::pair<Dictionary, SparseCodeSet> dict_update_mdu(const std::vector<Vector>& patches,
                                                     const SparseCodeSet& codes,
                                                     const Dictionary& dict, int group_size) {
  if (group_size < 1 || group_size > dict.atom_count())
    throw config_error("dict_update_mdu: invalid group_size");
  if (patches.size() != codes.codes.size())
    throw config_error("dict_update_mdu: patch/code count mismatch");

  Dictionary updated = dict;
  SparseCodeSet refit = codes;
  const int n = dict.atom_dim();
  const int t = dict.atom_count();
  std::set<int> taken;

  for (int g0 = 0; g0 < t; g0 += group_size) {
    const int g = std::min(group_size, t - g0);
    std::vector<int> group(static_cast<std::size_t>(g));
    std::iota(group.begin(), group.end(), g0);

    std::vector<int> users;
    for (int l = 0; l < refit.size(); ++l) {
      const SparseCode& code = refit.codes[static_cast<std::size_t>(l)];
      for (int k : group)
        if (code.uses(k)) {
          users.push_back(l);
          break;
        }
    }
    if (users.empty()) {
      for (int k : group) replace_dead_atom(patches, refit, updated, k, taken);
      continue;
    }
    if (g == 1) {
      rank_one_update(patches, refit, updated, group[0], users);
      continue;
    }

    // Residual with the whole group's contribution removed.
    Matrix residual(n, static_cast<Eigen::Index>(users.size()));
    for (std::size_t j = 0; j < users.size(); ++j) {
      const SparseCode& code = refit.codes[static_cast<std::size_t>(users[j])];
      Vector e = patches[static_cast<std::size_t>(users[j])];
      for (std::size_t i = 0; i < code.idx.size(); ++i)
        if (code.idx[i] < g0 || code.idx[i] >= g0 + g) e -= code.val[i] * updated.atoms.col(code.idx[i]);
      residual.col(static_cast<Eigen::Index>(j)) = e;
    }

    // Coefficient/atom alternations until the group subproblem is solved to
    // machine tolerance (minimum two passes), mirroring the exact per-atom
    // solve of the rank-one case. Sparsity pattern held fixed. Both
    // half-steps go through the SVD least-squares solver: group submatrices
    // can be rank-deficient (correlated atoms inside one group), and the
    // pseudoinverse keeps each half-step an exact minimizer.
    double prev_obj = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 50; ++pass) {
      if (pass >= 2) {
        Matrix lambda_now = Matrix::Zero(g, static_cast<Eigen::Index>(users.size()));
        for (std::size_t j = 0; j < users.size(); ++j)
          for (int kk = 0; kk < g; ++kk)
            lambda_now(kk, static_cast<Eigen::Index>(j)) =
                refit.codes[static_cast<std::size_t>(users[j])].value_at(g0 + kk);
        const double obj =
            (residual - updated.atoms.middleCols(g0, g) * lambda_now).squaredNorm();
        if (obj >= prev_obj * (1.0 - 1e-10)) break;
        prev_obj = obj;
      }
      for (std::size_t j = 0; j < users.size(); ++j) {
        SparseCode& code = refit.codes[static_cast<std::size_t>(users[j])];
        std::vector<std::size_t> slots;
        for (std::size_t i = 0; i < code.idx.size(); ++i)
          if (code.idx[i] >= g0 && code.idx[i] < g0 + g) slots.push_back(i);
        Matrix sub(n, static_cast<Eigen::Index>(slots.size()));
        for (std::size_t s = 0; s < slots.size(); ++s)
          sub.col(static_cast<Eigen::Index>(s)) = updated.atoms.col(code.idx[slots[s]]);
        const Vector beta = sub.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                                .solve(residual.col(static_cast<Eigen::Index>(j)));
        for (std::size_t s = 0; s < slots.size(); ++s)
          code.val[slots[s]] = beta[static_cast<Eigen::Index>(s)];
      }

      Matrix lambda_g = Matrix::Zero(g, static_cast<Eigen::Index>(users.size()));
      for (std::size_t j = 0; j < users.size(); ++j) {
        const SparseCode& code = refit.codes[static_cast<std::size_t>(users[j])];
        for (int kk = 0; kk < g; ++kk)
          lambda_g(kk, static_cast<Eigen::Index>(j)) = code.value_at(g0 + kk);
      }
      if (lambda_g.squaredNorm() == 0.0) break;
      const Matrix atoms_g = lambda_g.transpose()
                                 .jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                                 .solve(residual.transpose())
                                 .transpose();
      for (int kk = 0; kk < g; ++kk) updated.atoms.col(g0 + kk) = atoms_g.col(kk);
    }

    for (int kk = 0; kk < g; ++kk) {
      const int k = g0 + kk;
      const double norm = updated.atoms.col(k).norm();
      if (norm < 1e-12) {
        if (users_of_atom(refit, k).empty())
          replace_dead_atom(patches, refit, updated, k, taken);
        else
          updated.atoms.col(k) = dict.atoms.col(k);
        continue;
      }
      updated.atoms.col(k) /= norm;
      for (int l : users) {
        SparseCode& code = refit.codes[static_cast<std::size_t>(l)];
        const auto it = std::lower_bound(code.idx.begin(), code.idx.end(), k);
        if (it != code.idx.end() && *it == k)
          code.val[static_cast<std::size_t>(it - code.idx.begin())] *= norm;
      }
    }
  }
  return {std::move(updated), std::move(refit)};
}

std::pair<Dictionary, SparseCodeSet> dict_update(const std::vector<Vector>& patches,
                                                 const SparseCodeSet& codes,
                                                 const Dictionary& dict,
                                                 const LearnConfig& config) {
#ifndef NDEBUG
  const double before = fit_objective(patches, dict, codes);
#endif
  std::pair<Dictionary, SparseCodeSet> result;
  switch (config.method) {
    case DictMethod::MOD: result = dict_update_mod(patches, codes, dict); break;
    case DictMethod::KSVD: result = dict_update_ksvd(patches, codes, dict); break;
    case DictMethod::MDU:
      result = dict_update_mdu(patches, codes, dict, config.mdu_group_size);
      break;
    default: throw config_error("dict_update: unknown method");
  }
#ifndef NDEBUG
  assert(fit_objective(patches, result.first, result.second) <=
         before * (1.0 + 1e-9) + 1e-9);
#endif
  return result;
}

Dictionary learn_dictionary(const std::vector<Vector>& training_patches, const LearnConfig& config,
                            const Dictionary& init) {
  if (training_patches.empty()) throw config_error("learn_dictionary: empty training set");
  if (config.iterations < 1) throw config_error("learn_dictionary: iterations must be >= 1");
  if (config.sparsity_cap >= init.atom_dim())
    throw config_error("learn_dictionary: sparsity cap must stay below the atom dimension");
  Dictionary dict = init;
  for (int it = 0; it < config.iterations; ++it) {
    SparseCodeSet codes =
        sparse_code_all(training_patches, dict, config.sparsity_cap, config.error_threshold);
    std::tie(dict, codes) = dict_update(training_patches, codes, dict, config);
  }
  return dict;
}

void save_dictionary(const Dictionary& dict, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path + ": cannot open for writing");
  out.write("CVSD1", 5);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dict.atom_dim()));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dict.atom_count()));
  for (int r = 0; r < dict.atom_dim(); ++r)
    for (int c = 0; c < dict.atom_count(); ++c) binio::write_le<double>(out, dict.atoms(r, c));
  if (!out) throw io_error(path + ": write failed");
}

Dictionary load_dictionary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open");
  char magic[5];
  in.read(magic, 5);
  if (in.gcount() != 5 || std::string(magic, 5) != "CVSD1")
    throw io_error(path + ": bad magic, not a CVSD1 dictionary");
  const auto rows = binio::read_le<std::uint32_t>(in, path, "atom_dim");
  const auto cols = binio::read_le<std::uint32_t>(in, path, "atom_count");
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20))
    throw io_error(path + ": implausible dictionary dimensions");
  Dictionary dict;
  dict.atoms.resize(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c)
      dict.atoms(r, c) = binio::read_le<double>(in, path, "atom payload");
  return dict;
}

}  // namespace cvs
