#include "cvs/keyframe.hpp"

#include <chrono>
#include <cmath>

#include "cvs/metrics.hpp"

namespace cvs {

namespace {

double quadratic_objective(const Matrix& v, const Matrix& synth, const Matrix& b, const Vector& f,
                           const SensingMatrix& phi, double mu) {
  const double data = (f - apply_global_forward(v, phi)).squaredNorm();
  const double split = (synth - v - b).squaredNorm();
  return 0.5 * data + 0.5 * mu * split;
}

}  // namespace

Matrix init_keyframe(const Vector& f, const SensingMatrix& phi, int rows, int cols,
                     const PatchLayout& layout) {
  const Matrix estimate = apply_global_adjoint(f, phi, rows, cols);
  const BlockGrid grid = block_grid(rows, cols, phi.block_side);

  // Per-block hard threshold: 2% of the block estimate's peak magnitude.
  std::vector<double> threshold(static_cast<std::size_t>(grid.block_count()));
  for (int i = 0; i < grid.block_count(); ++i) {
    const int br = i / grid.blocks_across();
    const int bc = i % grid.blocks_across();
    threshold[static_cast<std::size_t>(i)] =
        0.02 * estimate.block(br * phi.block_side, bc * phi.block_side, phi.block_side,
                              phi.block_side)
                   .cwiseAbs()
                   .maxCoeff();
  }

  const int p2 = layout.patch_pixels();
  const Dictionary dct = init_dictionary(p2, p2, DictInit::OvercompleteDct);
  std::vector<Vector> patches = extract_patches(estimate, layout);
  parallel_for(patches.size(), [&](std::size_t l) {
    const auto [ar, ac] = layout.anchor(static_cast<int>(l));
    const double t =
        threshold[static_cast<std::size_t>((ar / phi.block_side) * grid.blocks_across() +
                                           (ac / phi.block_side))];
    Vector coeff = dct.atoms.transpose() * patches[l];
    for (Eigen::Index i = 1; i < coeff.size(); ++i)  // keep DC
      if (std::abs(coeff[i]) < t) coeff[i] = 0.0;
    patches[l] = dct.atoms * coeff;
  });
  return aggregate_patches(patches, layout);
}

VUpdateTrace v_update(Matrix& v, const Matrix& synth, const Matrix& b, const Vector& f,
                      const SensingMatrix& phi, double mu, int iters) {
  if (iters < 1) throw config_error("v_update: iters must be >= 1");
  VUpdateTrace trace;
  trace.objective.push_back(quadratic_objective(v, synth, b, f, phi, mu));
  for (int i = 0; i < iters; ++i) {
    const Vector forward = apply_global_forward(v, phi);
    const Matrix grad =
        apply_global_adjoint(forward - f, phi, static_cast<int>(v.rows()),
                             static_cast<int>(v.cols())) -
        mu * (synth - v - b);
    if (!grad.allFinite()) throw divergence_error("v_update: non-finite gradient");
    const double gg = grad.squaredNorm();
    if (gg == 0.0) break;  // stationary point
    const Vector phi_g = apply_global_forward(grad, phi);
    const double step = std::abs(gg / (phi_g.squaredNorm() + mu * gg));
    v -= step * grad;
    ++trace.steps;
    trace.objective.push_back(quadratic_objective(v, synth, b, f, phi, mu));
  }
  return trace;
}

std::pair<SparseCodeSet, Dictionary> alpha_update(const Matrix& r, const Dictionary& warm_dict,
                                                  const PatchLayout& layout,
                                                  const LearnConfig& learn, double delta) {
  const std::vector<Vector> patches = extract_patches(r, layout);
  const Dictionary dict = learn_dictionary(patches, learn, warm_dict);
  SparseCodeSet codes = sparse_code_all(patches, dict, learn.sparsity_cap, delta);
  return {std::move(codes), dict};
}

void b_update(Matrix& b, const Matrix& v, const Matrix& synth) {
  b += v - synth;
}

double coding_budget(const KeyRecoveryConfig& config, const PatchLayout& layout,
                     int frame_pixels) {
  const double big_k =
      static_cast<double>(layout.patch_pixels()) * static_cast<double>(layout.patch_count());
  const double theta = config.lambda * big_k / (config.mu * frame_pixels);
  return std::max(config.omega * theta, 1e-6);
}

KeyRecoveryResult recover_keyframe(const Vector& f, const SensingMatrix& phi, int rows, int cols,
                                   const KeyRecoveryConfig& config) {
  if (config.mu <= 0.0 || config.tol <= 0.0 || config.inner_iters < 1 ||
      config.max_outer_iters < 1)
    throw config_error("recover_keyframe: invalid config");
  const PatchLayout layout =
      make_patch_layout(rows, cols, config.patch_side, config.patch_stride);
  const double delta = coding_budget(config, layout, rows * cols);

  SbiState state;
  state.v = config.initializer ? config.initializer(f, phi, rows, cols)
                               : init_keyframe(f, phi, rows, cols, layout);
  const Matrix init = state.v;
  state.b = Matrix::Zero(rows, cols);
  state.dict =
      init_dictionary(layout.patch_pixels(), config.dict_atoms, DictInit::OvercompleteDct);
  state.codes.atom_count = config.dict_atoms;
  state.codes.codes.resize(static_cast<std::size_t>(layout.patch_count()));
  state.last_ssim = 0.0;

  while (state.k < config.max_outer_iters) {
    const Matrix v_tilde = state.v;
    const Matrix r = state.v + state.b;

    const auto t0 = std::chrono::steady_clock::now();
    std::tie(state.codes, state.dict) =
        alpha_update(r, state.dict, layout, config.dict, delta);
    const double dict_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    const Matrix synth = synthesize_image(state.codes, state.dict, layout);
    const VUpdateTrace trace =
        v_update(state.v, synth, state.b, f, phi, config.mu, config.inner_iters);

    const double s = ssim(state.v, v_tilde);
    const double diff = std::abs(s - state.last_ssim);
    b_update(state.b, state.v, synth);
    state.last_ssim = s;
    ++state.k;

    if (config.progress) {
      SbiProgress p;
      p.k = state.k;
      p.quadratic = trace.objective.back();
      p.psnr_vs_init = psnr(state.v, init);
      p.ssim_step = s;
      p.dict_update_ms = dict_ms;
      p.v = &state.v;
      config.progress(p);
    }
    if (diff <= config.tol) break;
  }

  KeyRecoveryResult result;
  result.frame.pix = synthesize_image(state.codes, state.dict, layout);
  result.dict = std::move(state.dict);
  result.codes = std::move(state.codes);
  result.init = init;
  result.outer_iters = state.k;
  return result;
}

}  // namespace cvs
