#include "cvs/nonkey.hpp"

#include <cmath>

#include "cvs/metrics.hpp"

namespace cvs {

namespace {

// The five-piece operator for rho >= 0.
double shrink_nonneg(double x, double t1, double t2, double rho) {
  if (x < -t1 - t2) return x + t1 + t2;
  if (x <= t1 - t2) return 0.0;
  if (x < t1 - t2 + rho) return x - t1 + t2;
  if (x <= t1 + t2 + rho) return rho;
  return x - t1 - t2;
}

}  // namespace

double shrink_double_l1(double x, double theta1, double theta2, double rho) {
  const double sign = rho < 0.0 ? -1.0 : 1.0;  // sgn(0) = +1
  return sign * shrink_nonneg(sign * x, theta1, theta2, sign * rho);
}

double gram_spectral_norm(const Dictionary& dict, int power_iters) {
  const Matrix gram = dict.atoms.transpose() * dict.atoms;
  Vector x = Vector::Ones(gram.rows()).normalized();
  double eig = 0.0;
  for (int i = 0; i < power_iters; ++i) {
    Vector y = gram * x;
    eig = y.norm();
    if (eig == 0.0) return 0.0;
    x = y / eig;
  }
  return eig;
}

DoubleL1PatchSolver::DoubleL1PatchSolver(const Dictionary& dict, double theta1, double theta2,
                                         double c, int iters)
    : atoms_(dict.atoms), theta1_(theta1), theta2_(theta2), c_(c), iters_(iters) {
  if (theta1 < 0.0 || theta2 < 0.0) throw config_error("DoubleL1PatchSolver: negative thresholds");
  if (iters < 1) throw config_error("DoubleL1PatchSolver: iters must be >= 1");
  // c == lambda_max still majorizes (convex, no longer strictly); only a
  // genuinely smaller c invalidates the surrogate.
  const double bound = gram_spectral_norm(dict);
  if (c < bound * (1.0 - 1e-10))
    throw config_error("DoubleL1PatchSolver: c = " + std::to_string(c) +
                       " is below the spectral bound " + std::to_string(bound));
}

double DoubleL1PatchSolver::objective(const Vector& r_patch, const Vector& alpha,
                                      const Vector& prev) const {
  return 0.5 * (atoms_ * alpha - r_patch).squaredNorm() + theta1_ * alpha.lpNorm<1>() +
         theta2_ * (alpha - prev).lpNorm<1>();
}

SparseCode DoubleL1PatchSolver::solve(const Vector& r_patch, const SparseCode& prev_code) const {
  const int t = static_cast<int>(atoms_.cols());
  const Vector prev = code_to_dense(prev_code, t);
  Vector alpha = prev;
  const double t1 = theta1_ / c_;
  const double t2 = theta2_ / c_;
  for (int it = 0; it < iters_; ++it) {
    const Vector v = alpha + atoms_.transpose() * (r_patch - atoms_ * alpha) / c_;
    for (int i = 0; i < t; ++i) alpha[i] = shrink_double_l1(v[i], t1, t2, prev[i]);
  }
  return code_from_dense(alpha);
}

SparseCode solve_patch_double_l1(const Vector& r_patch, const SparseCode& prev_code,
                                 const Dictionary& dict, double theta1, double theta2, double c,
                                 int iters) {
  return DoubleL1PatchSolver(dict, theta1, theta2, c, iters).solve(r_patch, prev_code);
}

NonKeyState init_nonkey_state(const Vector& f_meas, const TemporalContext& ctx) {
  NonKeyState state;
  state.v = ctx.prev_frame;
  state.b = Matrix::Zero(ctx.prev_frame.rows(), ctx.prev_frame.cols());
  state.codes = ctx.prev_codes;
  state.f_running = f_meas;
  return state;
}

void sbi_nonkey_step(NonKeyState& state, const Vector& f_meas, const SensingMatrix& phi,
                     const TemporalContext& ctx, const DoubleL1PatchSolver& solver,
                     const PatchLayout& layout, const NonKeyConfig& config) {
  const Matrix synth = synthesize_image(state.codes, ctx.dict, layout);
  const VUpdateTrace trace =
      v_update(state.v, synth, state.b, state.f_running, phi, config.mu, config.inner_iters);
  state.last_quadratic = trace.objective.back();

  const Matrix r = state.v + state.b;
  const std::vector<Vector> patches = extract_patches(r, layout);
  parallel_for(patches.size(), [&](std::size_t l) {
    state.codes.codes[l] = solver.solve(patches[l], ctx.prev_codes.codes[l]);
  });

  const Matrix synth_new = synthesize_image(state.codes, ctx.dict, layout);
  b_update(state.b, state.v, synth_new);
  state.f_running += f_meas - apply_global_forward(state.v, phi);
  ++state.k;
}

Matrix refine_reconstruct(const Matrix& v_star, const Vector& f_meas, const SensingMatrix& phi,
                          const std::vector<Vector>& coded_patches, const PatchLayout& layout,
                          double refine_weight, double cg_tol, int cg_cap) {
  const int rows = static_cast<int>(v_star.rows());
  const int cols = static_cast<int>(v_star.cols());
  const Matrix coverage = coverage_counts(layout);

  Matrix scatter = Matrix::Zero(rows, cols);
  const int p = layout.patch_side;
  for (int l = 0; l < layout.patch_count(); ++l) {
    const auto [r, c] = layout.anchor(l);
    scatter.block(r, c, p, p) += coded_patches[static_cast<std::size_t>(l)].reshaped(p, p);
  }

  const Matrix rhs =
      v_star + apply_global_adjoint(f_meas, phi, rows, cols) + refine_weight * scatter;
  const auto apply = [&](const Matrix& x) -> Matrix {
    return apply_global_adjoint(apply_global_forward(x, phi), phi, rows, cols) + x +
           refine_weight * coverage.cwiseProduct(x);
  };

  Matrix u = v_star;  // warm start
  Matrix residual = rhs - apply(u);
  Matrix direction = residual;
  double rr = residual.squaredNorm();
  const double target = cg_tol * rhs.norm();
  int it = 0;
  while (std::sqrt(rr) > target) {
    if (++it > cg_cap)
      throw divergence_error("refine_reconstruct: CG exceeded iteration cap");
    const Matrix ad = apply(direction);
    const double alpha = rr / (direction.array() * ad.array()).sum();
    u += alpha * direction;
    residual -= alpha * ad;
    const double rr_new = residual.squaredNorm();
    direction = residual + (rr_new / rr) * direction;
    rr = rr_new;
  }
  return u;
}

RefineResult refine_frame(const Matrix& v_star, const Vector& f_meas, const SensingMatrix& phi,
                          const Dictionary& dict, const PatchLayout& layout,
                          const NonKeyConfig& config) {
  RefineResult result;
  result.dict = dict;
  Matrix u = v_star;
  for (int round = 0; round < config.refine_rounds; ++round) {
    const std::vector<Vector> patches = extract_patches(u, layout);
    result.codes = sparse_code_all(patches, result.dict, config.dict.sparsity_cap,
                                   config.refine_code_budget);
    if (config.refine_update_dict)
      std::tie(result.dict, result.codes) =
          dict_update(patches, result.codes, result.dict, config.dict);
    u = refine_reconstruct(v_star, f_meas, phi, synthesize_patches(result.codes, result.dict),
                           layout, config.refine_weight);
  }
  result.frame.pix = std::move(u);
  return result;
}

NonKeyRecoveryResult recover_nonkey_frame(const Vector& f_meas, const SensingMatrix& phi,
                                          const TemporalContext& ctx, int rows, int cols,
                                          const NonKeyConfig& config) {
  if (config.mu <= 0.0 || config.tol <= 0.0 || config.c_margin <= 1.0)
    throw config_error("recover_nonkey_frame: invalid config");
  if (ctx.prev_frame.rows() != rows || ctx.prev_frame.cols() != cols)
    throw config_error("recover_nonkey_frame: context geometry mismatch");
  const PatchLayout layout =
      make_patch_layout(rows, cols, config.patch_side, config.patch_stride);
  if (ctx.prev_codes.size() != layout.patch_count())
    throw config_error("recover_nonkey_frame: context codes do not match patch layout");

  const double n = static_cast<double>(rows) * cols;
  const double big_k =
      static_cast<double>(layout.patch_pixels()) * static_cast<double>(layout.patch_count());
  const double theta1 = config.lambda * big_k / (config.mu * n);
  const double theta2 = config.tau * big_k / (config.mu * n);
  const double c = config.c_margin * gram_spectral_norm(ctx.dict);
  const DoubleL1PatchSolver solver(ctx.dict, theta1, theta2, c, config.shrink_iters);

  NonKeyState state = init_nonkey_state(f_meas, ctx);
  while (state.k < config.max_outer_iters) {
    const Matrix v_tilde = state.v;
    sbi_nonkey_step(state, f_meas, phi, ctx, solver, layout, config);
    const double s = ssim(state.v, v_tilde);
    const double diff = std::abs(s - state.last_ssim);
    state.last_ssim = s;
    if (config.progress) {
      SbiProgress p;
      p.k = state.k;
      p.quadratic = state.last_quadratic;
      p.psnr_vs_init = psnr(state.v, ctx.prev_frame);
      p.ssim_step = s;
      p.v = &state.v;
      config.progress(p);
    }
    if (diff <= config.tol) break;
  }

  RefineResult refined = refine_frame(state.v, f_meas, phi, ctx.dict, layout, config);
  NonKeyRecoveryResult result;
  result.frame = refined.frame;
  result.next_context.prev_frame = result.frame.pix;
  result.next_context.prev_codes = std::move(refined.codes);
  result.next_context.dict = std::move(refined.dict);
  result.outer_iters = state.k;
  return result;
}

}  // namespace cvs
