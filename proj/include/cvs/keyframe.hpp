#pragma once

#include <functional>
#include <vector>

#include "cvs/dictionary.hpp"
#include "cvs/frame.hpp"
#include "cvs/patch.hpp"
#include "cvs/sensing.hpp"

namespace cvs {

// Per-outer-iteration progress report from the split Bregman decoders.
struct SbiProgress {
  int k = 0;                 // outer iteration just finished (1-based)
  double quadratic = 0.0;    // data-plus-penalty objective after the v-update
  double psnr_vs_init = 0.0; // distance travelled from the initializer
  double ssim_step = 0.0;    // SSIM between successive outer iterates
  double dict_update_ms = 0.0;
  const Matrix* v = nullptr; // current frame estimate
};

using ProgressCallback = std::function<void(const SbiProgress&)>;

using Initializer =
    std::function<Matrix(const Vector& f, const SensingMatrix& phi, int rows, int cols)>;

struct KeyRecoveryConfig {
  double mu = 2.5e-3;
  double lambda = 0.75;  // l0 weight; theta = lambda*K/(mu*n)
  double omega = 0.35;   // delta = omega*theta, floored at 1e-6
  int inner_iters = 200; // steepest-descent steps per outer iteration
  int max_outer_iters = 20;
  double tol = 1e-4;     // stop when |s^{k+1} - s^k| <= tol
  int patch_side = 8;
  int patch_stride = 4;
  int dict_atoms = 256;
  LearnConfig dict;
  Initializer initializer;  // optional replacement for the built-in one
  ProgressCallback progress;
};

struct SbiState {
  Matrix v;
  Matrix b;
  SparseCodeSet codes;
  Dictionary dict;
  int k = 0;
  double last_ssim = 0.0;
};

struct KeyRecoveryResult {
  Frame frame;  // u* = D-compose-alpha at the final iterate
  Dictionary dict;
  SparseCodeSet codes;
  Matrix init;  // the initializer output, kept for diagnostics
  int outer_iters = 0;
};

// Built-in initializer: per-block minimum-norm estimate Phi^T f followed by
// one pass of patchwise DCT hard-thresholding (threshold = 2% of the
// enclosing block's peak magnitude, DC always kept).
Matrix init_keyframe(const Vector& f, const SensingMatrix& phi, int rows, int cols,
                     const PatchLayout& layout);

struct VUpdateTrace {
  std::vector<double> objective;  // value on entry, then after every step
  int steps = 0;
};

// iin steepest-descent steps with the exact line-search step size on
//   Q1(v) = 1/2 ||f - Phi v||^2 + mu/2 ||synth - v - b||^2
// where synth = D-compose-alpha is held fixed. The objective never
// increases; a non-finite gradient raises divergence_error.
VUpdateTrace v_update(Matrix& v, const Matrix& synth, const Matrix& b, const Vector& f,
                      const SensingMatrix& phi, double mu, int iters);

// Relearns the dictionary on the patches of r = v + b (warm start) and
// recodes every patch under the error budget delta.
std::pair<SparseCodeSet, Dictionary> alpha_update(const Matrix& r, const Dictionary& warm_dict,
                                                  const PatchLayout& layout,
                                                  const LearnConfig& learn, double delta);

// b <- b + v - synth.
void b_update(Matrix& b, const Matrix& v, const Matrix& synth);

// Error budget per patch: delta = max(omega * lambda*K/(mu*n), 1e-6) with
// K = patch_pixels * patch_count.
double coding_budget(const KeyRecoveryConfig& config, const PatchLayout& layout, int frame_pixels);

KeyRecoveryResult recover_keyframe(const Vector& f, const SensingMatrix& phi, int rows, int cols,
                                   const KeyRecoveryConfig& config);

}  // namespace cvs
