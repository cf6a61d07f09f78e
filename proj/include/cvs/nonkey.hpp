#pragma once

#include "cvs/dictionary.hpp"
#include "cvs/keyframe.hpp"
#include "cvs/patch.hpp"
#include "cvs/sensing.hpp"

namespace cvs {

// Scalar prox of z -> 1/2 (z-x)^2 + theta1*|z| + theta2*|z - rho|.
// The five-piece closed form assumes rho >= 0; the public entry wraps the
// sign so any rho works (sgn(0) treated as +1).
double shrink_double_l1(double x, double theta1, double theta2, double rho);

// Everything carried from frame t-1 into the recovery of frame t.
struct TemporalContext {
  Matrix prev_frame;
  SparseCodeSet prev_codes;
  Dictionary dict;
};

struct NonKeyConfig {
  double mu = 2.5e-3;
  double lambda = 0.75;  // theta1 = lambda*K/(mu*n)
  double tau = 0.75;     // theta2 = tau*K/(mu*n); defaults to lambda
  int inner_iters = 200;
  int shrink_iters = 25;   // surrogate-shrinkage iterations per patch
  double c_margin = 1.05;  // c = c_margin * lambda_max(D^T D)
  int max_outer_iters = 6;
  double tol = 1e-4;
  double refine_weight = 0.1;         // lambda' in the refinement problem
  double refine_code_budget = 420.0;  // mu', OMP squared-error budget
  int refine_rounds = 3;
  bool refine_update_dict = true;
  int patch_side = 8;
  int patch_stride = 4;
  LearnConfig dict;  // method + sparsity cap for the refinement updates
  ProgressCallback progress;
};

// Power-iteration estimate of lambda_max(D^T D).
double gram_spectral_norm(const Dictionary& dict, int power_iters = 50);

// Iterative shrinkage on the double-l1 patch objective
//   1/2 ||D a - r||^2 + theta1 ||a||_1 + theta2 ||a - prev||_1
// via the strictly convex surrogate (requires c > lambda_max(D^T D)).
// Starts from the previous frame's code, which also anchors the second
// l1 term. The objective never increases across iterations.
class DoubleL1PatchSolver {
 public:
  DoubleL1PatchSolver(const Dictionary& dict, double theta1, double theta2, double c, int iters);

  SparseCode solve(const Vector& r_patch, const SparseCode& prev_code) const;
  double objective(const Vector& r_patch, const Vector& alpha, const Vector& prev) const;
  double c() const { return c_; }

 private:
  Matrix atoms_;
  double theta1_, theta2_, c_;
  int iters_;
};

// One-shot form; estimates the spectral bound itself.
SparseCode solve_patch_double_l1(const Vector& r_patch, const SparseCode& prev_code,
                                 const Dictionary& dict, double theta1, double theta2, double c,
                                 int iters);

struct NonKeyState {
  Matrix v;
  Matrix b;
  SparseCodeSet codes;
  Vector f_running;  // residual-feedback measurement vector f^k
  int k = 0;
  double last_ssim = 0.0;
  double last_quadratic = 0.0;  // v-update objective after the latest step
};

NonKeyState init_nonkey_state(const Vector& f_meas, const TemporalContext& ctx);

// One outer iteration: v-update (steepest descent against f^k), per-patch
// double-l1 alpha-update on r = v + b, Bregman update, then the residual
// feedback f^{k+1} = f^k + f - Phi v^{k+1}.
void sbi_nonkey_step(NonKeyState& state, const Vector& f_meas, const SensingMatrix& phi,
                     const TemporalContext& ctx, const DoubleL1PatchSolver& solver,
                     const PatchLayout& layout, const NonKeyConfig& config);

// Closed-form reconstruction of the refinement problem,
//   (Phi^T Phi + I + lambda' sum R^T R) u = v* + Phi^T f + lambda' sum R^T D a_l,
// solved matrix-free by conjugate gradients to relative residual cg_tol.
Matrix refine_reconstruct(const Matrix& v_star, const Vector& f_meas, const SensingMatrix& phi,
                          const std::vector<Vector>& coded_patches, const PatchLayout& layout,
                          double refine_weight, double cg_tol = 1e-8, int cg_cap = 2000);

struct RefineResult {
  Frame frame;
  SparseCodeSet codes;
  Dictionary dict;
};

// Alternates sparse coding / optional dictionary update / reconstruction
// for config.refine_rounds rounds, starting from v*.
RefineResult refine_frame(const Matrix& v_star, const Vector& f_meas, const SensingMatrix& phi,
                          const Dictionary& dict, const PatchLayout& layout,
                          const NonKeyConfig& config);

struct NonKeyRecoveryResult {
  Frame frame;
  TemporalContext next_context;
  int outer_iters = 0;
};

NonKeyRecoveryResult recover_nonkey_frame(const Vector& f_meas, const SensingMatrix& phi,
                                          const TemporalContext& ctx, int rows, int cols,
                                          const NonKeyConfig& config);

}  // namespace cvs
