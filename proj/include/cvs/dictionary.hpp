#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cvs/common.hpp"
#include "cvs/patch.hpp"

namespace cvs {

// Learned sparsifying basis: unit-norm atoms as columns.
struct Dictionary {
  Matrix atoms;  // atom_dim x atom_count

  int atom_dim() const { return static_cast<int>(atoms.rows()); }
  int atom_count() const { return static_cast<int>(atoms.cols()); }
  void validate() const;  // unit norms, finite entries
};

// Sparse coefficient vector stored as sorted index/value pairs.
struct SparseCode {
  std::vector<int> idx;  // strictly increasing
  std::vector<double> val;

  int nnz() const { return static_cast<int>(idx.size()); }
  double value_at(int atom) const;
  bool uses(int atom) const;
};

struct SparseCodeSet {
  int atom_count = 0;
  std::vector<SparseCode> codes;

  int size() const { return static_cast<int>(codes.size()); }
};

Vector code_to_dense(const SparseCode& code, int atom_count);
SparseCode code_from_dense(const Vector& dense);

enum class DictMethod { MOD, KSVD, MDU };

struct LearnConfig {
  DictMethod method = DictMethod::KSVD;
  int iterations = 20;
  int sparsity_cap = 8;          // L, per-patch atom budget
  double error_threshold = 0.0;  // delta, squared-residual stop for OMP
  int mdu_group_size = 4;
};

enum class DictInit { OvercompleteDct, SeededRandom };

// overcomplete-dct: separable 2-D DCT frame, kron of a p x k sampled-cosine
// base with normalized columns (orthonormal when atom_count == atom_dim).
// seeded-random: normalized Gaussian columns.
Dictionary init_dictionary(int atom_dim, int atom_count, DictInit kind, std::uint64_t seed = 0);

// Orthogonal matching pursuit. Greedy selection by maximal absolute
// correlation with the residual, least-squares refit on the active set via
// an incrementally updated QR. Stops when ||residual||^2 <= error_threshold
// or the support reaches sparsity_cap (or nothing correlates any more).
SparseCode omp(const Vector& y, const Dictionary& dict, int sparsity_cap, double error_threshold);

SparseCodeSet sparse_code_all(const std::vector<Vector>& patches, const Dictionary& dict,
                              int sparsity_cap, double error_threshold);

// Fit objective sum_l ||p_l - D a_l||^2 for the monotonicity contracts.
double fit_objective(const std::vector<Vector>& patches, const Dictionary& dict,
                     const SparseCodeSet& codes);

// Whole-dictionary least-squares refit (ridge-stabilized), columns
// renormalized with the matching coefficient rescale.
std::pair<Dictionary, SparseCodeSet> dict_update_mod(const std::vector<Vector>& patches,
                                                     const SparseCodeSet& codes,
                                                     const Dictionary& dict);

// One-atom-at-a-time rank-one updates; unused atoms are replaced by the
// worst-approximated training patch.
std::pair<Dictionary, SparseCodeSet> dict_update_ksvd(const std::vector<Vector>& patches,
                                                      const SparseCodeSet& codes,
                                                      const Dictionary& dict);

// Group update: contiguous groups of atoms jointly refit against the
// residual that excludes the group, alternating (coefficients, atoms) twice
// with the sparsity pattern held fixed. group_size 1 reduces to the K-SVD
// rank-one update.
std::pair<Dictionary, SparseCodeSet> dict_update_mdu(const std::vector<Vector>& patches,
                                                     const SparseCodeSet& codes,
                                                     const Dictionary& dict, int group_size);

std::pair<Dictionary, SparseCodeSet> dict_update(const std::vector<Vector>& patches,
                                                 const SparseCodeSet& codes,
                                                 const Dictionary& dict,
                                                 const LearnConfig& config);

// Alternates sparse coding and the configured update for config.iterations
// rounds, starting from init.
Dictionary learn_dictionary(const std::vector<Vector>& training_patches, const LearnConfig& config,
                            const Dictionary& init);

// Per-patch reconstructions D a_l.
std::vector<Vector> synthesize_patches(const SparseCodeSet& codes, const Dictionary& dict);

// The D-compose-alpha image: overlapping patch reconstructions averaged
// back onto the frame.
Matrix synthesize_image(const SparseCodeSet& codes, const Dictionary& dict,
                        const PatchLayout& layout);

// ".cvsd" binary dictionary container.
void save_dictionary(const Dictionary& dict, const std::string& path);
Dictionary load_dictionary(const std::string& path);

}  // namespace cvs
