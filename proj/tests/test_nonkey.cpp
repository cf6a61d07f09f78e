#include <doctest.h>

#include <cmath>
#include <vector>

#include "cvs/metrics.hpp"
#include "cvs/nonkey.hpp"
#include "test_util.hpp"

using cvs::Dictionary;
using cvs::Matrix;
using cvs::SensingMatrix;
using cvs::SparseCode;
using cvs::Vector;

namespace {

double shrink_objective(double z, double x, double t1, double t2, double rho) {
  return 0.5 * (z - x) * (z - x) + t1 * std::abs(z) + t2 * std::abs(z - rho);
}

// Two-stage grid search over the (convex) scalar objective: coarse pass,
// then a fine pass at 1e-4 resolution around the coarse winner.
double grid_search_prox(double x, double t1, double t2, double rho) {
  const double lo = std::min({x, 0.0, rho}) - t1 - t2 - 1.0;
  const double hi = std::max({x, 0.0, rho}) + t1 + t2 + 1.0;
  double best_z = lo, best = shrink_objective(lo, x, t1, t2, rho);
  for (double z = lo; z <= hi; z += 1e-2) {
    const double v = shrink_objective(z, x, t1, t2, rho);
    if (v < best) {
      best = v;
      best_z = z;
    }
  }
  const double flo = best_z - 2e-2, fhi = best_z + 2e-2;
  for (double z = flo; z <= fhi; z += 1e-4) {
    const double v = shrink_objective(z, x, t1, t2, rho);
    if (v < best) {
      best = v;
      best_z = z;
    }
  }
  return best_z;
}

Vector random_vector(int n, cvs::GaussianSource& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.next();
  return v;
}

Vector measure(const Matrix& img, const SensingMatrix& phi) {
  return cvs::stack_measurements(cvs::measure_frame(img, phi));
}

// Coordinate descent on the double-l1 patch objective with candidate
// enumeration for the scalar subproblem (independent of the shrink path).
Vector coordinate_descent_oracle(const Vector& r, const Dictionary& dict, const Vector& prev,
                                 double t1, double t2, int sweeps) {
  const int t = dict.atom_count();
  Vector alpha = prev;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int i = 0; i < t; ++i) {
      const Vector di = dict.atoms.col(i);
      Vector partial = r - dict.atoms * alpha + alpha[i] * di;
      const double b = di.dot(partial);  // unit-norm atoms: quadratic is 1/2 z^2 - b z
      const double rho = prev[i];
      const double candidates[6] = {0.0,          rho,          b - t1 - t2,
                                    b - t1 + t2,  b + t1 - t2,  b + t1 + t2};
      double best_z = 0.0, best = std::numeric_limits<double>::infinity();
      for (double z : candidates) {
        const double v = 0.5 * z * z - b * z + t1 * std::abs(z) + t2 * std::abs(z - rho);
        if (v < best) {
          best = v;
          best_z = z;
        }
      }
      alpha[i] = best_z;
    }
  }
  return alpha;
}

struct ToyNonKey {
  SensingMatrix phi;
  Matrix truth;
  cvs::TemporalContext ctx;
  cvs::PatchLayout layout;
  cvs::NonKeyConfig config;

  ToyNonKey(int rows, int cols, int block, double mr, std::uint64_t seed, bool exact_ctx = true)
      : phi(cvs::gen_sensing_matrix(seed, mr, block)),
        truth(cvs_test::piecewise_frame(rows, cols, seed + 1)),
        layout(cvs::make_patch_layout(rows, cols, 8, 4)) {
    config.patch_side = 8;
    config.patch_stride = 4;
    config.dict.iterations = 2;
    ctx.dict = cvs::init_dictionary(64, 256, cvs::DictInit::OvercompleteDct);
    const Matrix base = exact_ctx ? truth : Matrix::Zero(rows, cols);
    ctx.prev_frame = base;
    // exact contexts code the prior tightly so D-compose-alpha ~ prev_frame
    ctx.prev_codes =
        cvs::sparse_code_all(cvs::extract_patches(base, layout), ctx.dict, 32, 1.0);
  }
};

}  // namespace

TEST_CASE("zero thresholds make the shrink an identity") {
  for (double rho : {0.0, 1.5, 7.0}) {
    for (double x : {-3.0, -0.1, 0.0, 0.4, 2.0, 9.0}) {
      CHECK(cvs::shrink_double_l1(x, 0.0, 0.0, rho) == x);
    }
  }
}

TEST_CASE("shrink matches the worked five-case values") {
  CHECK(cvs::shrink_double_l1(-3.0, 1.0, 0.5, 2.0) == doctest::Approx(-1.5));
  CHECK(cvs::shrink_double_l1(0.2, 1.0, 0.5, 2.0) == doctest::Approx(0.0));
  CHECK(cvs::shrink_double_l1(2.2, 1.0, 0.5, 2.0) == doctest::Approx(1.7));
  CHECK(cvs::shrink_double_l1(3.0, 1.0, 0.5, 2.0) == doctest::Approx(2.0));
  CHECK(cvs::shrink_double_l1(4.0, 1.0, 0.5, 2.0) == doctest::Approx(2.5));
}

TEST_CASE("shrink equals the scalar grid-search argmin") {
  cvs::GaussianSource rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const double x = 4.0 * rng.next();
    const double t1 = 1.5 * rng.next_uniform();
    const double t2 = 1.5 * rng.next_uniform();
    const double rho = 2.5 * rng.next();
    const double got = cvs::shrink_double_l1(x, t1, t2, rho);
    const double expected = grid_search_prox(x, t1, t2, rho);
    CHECK(std::abs(got - expected) <= 2e-4);
  }
}

TEST_CASE("shrink is continuous across every breakpoint") {
  cvs::GaussianSource rng(7);
  const double eps = 1e-9;
  for (int trial = 0; trial < 200; ++trial) {
    const double t1 = 2.0 * rng.next_uniform();
    const double t2 = 2.0 * rng.next_uniform();
    const double rho = 3.0 * rng.next();  // wrapper handles negatives
    const double ar = std::abs(rho);
    for (double bp : {-t1 - t2, t1 - t2, t1 - t2 + ar, t1 + t2 + ar}) {
      for (double side : {-1.0, 1.0}) {
        const double a = cvs::shrink_double_l1(side * (bp - eps), t1, t2, rho);
        const double b = cvs::shrink_double_l1(side * (bp + eps), t1, t2, rho);
        CHECK(std::abs(a - b) <= 1e-6);
      }
    }
  }
}

TEST_CASE("one surrogate step on an orthonormal dictionary is the exact projection") {
  const Dictionary d = cvs::init_dictionary(64, 64, cvs::DictInit::OvercompleteDct);
  cvs::GaussianSource rng(11);
  const Vector r = random_vector(64, rng);
  SparseCode prev;
  prev.idx = {3, 40};
  prev.val = {1.2, -0.7};
  const SparseCode code = cvs::solve_patch_double_l1(r, prev, d, 0.0, 0.0, 1.0, 1);
  const Vector expected = d.atoms.transpose() * r;
  CHECK((cvs::code_to_dense(code, 64) - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zero anchor collapses to plain soft-thresholding") {
  const Dictionary d = cvs::init_dictionary(64, 64, cvs::DictInit::OvercompleteDct);
  cvs::GaussianSource rng(13);
  const Vector r = random_vector(64, rng);
  const double t1 = 0.3, t2 = 0.2, c = 1.0;
  const SparseCode code = cvs::solve_patch_double_l1(r, SparseCode{}, d, t1, t2, c, 1);
  const Vector v = d.atoms.transpose() * r;  // alpha0 = 0, orthonormal D
  for (int i = 0; i < 64; ++i) {
    const double soft =
        std::copysign(std::max(std::abs(v[i]) - (t1 + t2) / c, 0.0), v[i]);
    CHECK(cvs::code_to_dense(code, 64)[i] == doctest::Approx(soft).epsilon(1e-10));
  }
}

TEST_CASE("surrogate iterations approach the coordinate-descent optimum") {
  const Dictionary d = cvs::init_dictionary(8, 12, cvs::DictInit::SeededRandom, 21);
  cvs::GaussianSource rng(22);
  const Vector r = random_vector(8, rng);
  Vector prev_dense = Vector::Zero(12);
  prev_dense[2] = 0.8;
  prev_dense[9] = -1.1;
  const SparseCode prev = cvs::code_from_dense(prev_dense);
  const double t1 = 0.15, t2 = 0.1;
  const double c = 1.05 * cvs::gram_spectral_norm(d);
  const cvs::DoubleL1PatchSolver solver(d, t1, t2, c, 500);
  const Vector got = cvs::code_to_dense(solver.solve(r, prev), 12);
  const Vector oracle = coordinate_descent_oracle(r, d, prev_dense, t1, t2, 400);
  const double f_got = solver.objective(r, got, prev_dense);
  const double f_oracle = solver.objective(r, oracle, prev_dense);
  CHECK(f_got <= f_oracle + 1e-5 * std::max(1.0, std::abs(f_oracle)));
}

TEST_CASE("surrogate iterations never increase the objective") {
  const Dictionary d = cvs::init_dictionary(16, 24, cvs::DictInit::SeededRandom, 31);
  cvs::GaussianSource rng(32);
  const Vector r = random_vector(16, rng);
  Vector prev_dense = Vector::Zero(24);
  prev_dense[5] = 1.0;
  const SparseCode prev = cvs::code_from_dense(prev_dense);
  const double t1 = 0.2, t2 = 0.15;
  const double c = 1.05 * cvs::gram_spectral_norm(d);
  double last = std::numeric_limits<double>::infinity();
  for (int iters = 1; iters <= 40; iters += 3) {
    const cvs::DoubleL1PatchSolver solver(d, t1, t2, c, iters);
    const Vector alpha = cvs::code_to_dense(solver.solve(r, prev), 24);
    const double obj = solver.objective(r, alpha, prev_dense);
    CHECK(obj <= last + 1e-12);
    last = obj;
  }
}

TEST_CASE("a c below the spectral bound is rejected") {
  const Dictionary d = cvs::init_dictionary(16, 24, cvs::DictInit::SeededRandom, 41);
  const double bound = cvs::gram_spectral_norm(d);
  CHECK_THROWS_AS(cvs::DoubleL1PatchSolver(d, 0.1, 0.1, 0.5 * bound, 5), cvs::config_error);
  CHECK_NOTHROW(cvs::DoubleL1PatchSolver(d, 0.1, 0.1, 1.05 * bound, 5));
}

TEST_CASE("residual feedback telescopes exactly") {
  ToyNonKey toy(16, 16, 8, 0.4, 51);
  const Vector f_meas = measure(toy.truth, toy.phi);
  const double theta = 0.05;
  const double c = 1.05 * cvs::gram_spectral_norm(toy.ctx.dict);
  const cvs::DoubleL1PatchSolver solver(toy.ctx.dict, theta, theta, c, 5);
  toy.config.inner_iters = 10;

  cvs::NonKeyState state = cvs::init_nonkey_state(f_meas, toy.ctx);
  std::vector<Matrix> iterates;
  for (int k = 0; k < 3; ++k) {
    cvs::sbi_nonkey_step(state, f_meas, toy.phi, toy.ctx, solver, toy.layout, toy.config);
    iterates.push_back(state.v);
  }
  Vector recomputed = f_meas;
  for (const Matrix& v : iterates) recomputed += f_meas - cvs::apply_global_forward(v, toy.phi);
  CHECK(recomputed == state.f_running);
}

TEST_CASE("feedback is a fixed point when the estimate explains the measurements") {
  ToyNonKey toy(16, 16, 8, 1.0, 61);
  const Vector f_meas = measure(toy.truth, toy.phi);
  const double c = 1.05 * cvs::gram_spectral_norm(toy.ctx.dict);
  const cvs::DoubleL1PatchSolver solver(toy.ctx.dict, 1e-6, 1e-6, c, 10);
  toy.config.inner_iters = 300;

  cvs::NonKeyState state = cvs::init_nonkey_state(f_meas, toy.ctx);
  const Vector f_before = state.f_running;
  cvs::sbi_nonkey_step(state, f_meas, toy.phi, toy.ctx, solver, toy.layout, toy.config);
  // at full rate the v-update drives Phi v to f, so the feedback barely moves
  CHECK((state.f_running - f_before).norm() <= 1e-3 * f_before.norm());
}

TEST_CASE("one step at full rate with an exact prior lands above 40 dB") {
  ToyNonKey toy(16, 16, 8, 1.0, 71);
  const Vector f_meas = measure(toy.truth, toy.phi);
  const double theta = 0.01;
  const double c = 1.05 * cvs::gram_spectral_norm(toy.ctx.dict);
  const cvs::DoubleL1PatchSolver solver(toy.ctx.dict, theta, theta, c, 25);
  toy.config.inner_iters = 200;
  cvs::NonKeyState state = cvs::init_nonkey_state(f_meas, toy.ctx);
  cvs::sbi_nonkey_step(state, f_meas, toy.phi, toy.ctx, solver, toy.layout, toy.config);
  CHECK(cvs::psnr(state.v, toy.truth) >= 40.0);
}

TEST_CASE("refinement reconstruction with zero weight at full rate averages v* and adjoint") {
  const SensingMatrix phi = cvs::gen_sensing_matrix(81, 1.0, 8);
  const Matrix truth = cvs_test::piecewise_frame(16, 16, 82);
  const Vector f = measure(truth, phi);
  const Matrix v_star = cvs_test::random_frame(16, 16, 83);
  const cvs::PatchLayout layout = cvs::make_patch_layout(16, 16, 8, 4);
  std::vector<Vector> coded(static_cast<std::size_t>(layout.patch_count()), Vector::Zero(64));
  const Matrix u = cvs::refine_reconstruct(v_star, f, phi, coded, layout, 0.0);
  const Matrix expected = 0.5 * (v_star + cvs::apply_global_adjoint(f, phi, 16, 16));
  CHECK((u - expected).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("conjugate gradients match a dense solve of the refinement system") {
  const SensingMatrix phi = cvs::gen_sensing_matrix(91, 0.4, 16);
  const Matrix truth = cvs_test::piecewise_frame(16, 16, 92);
  const Vector f = measure(truth, phi);
  const Matrix v_star = cvs_test::textured_frame(16, 16, 93);
  const cvs::PatchLayout layout = cvs::make_patch_layout(16, 16, 8, 4);
  const double lp = 0.2;

  const Dictionary dict = cvs::init_dictionary(64, 64, cvs::DictInit::OvercompleteDct);
  const cvs::SparseCodeSet codes =
      cvs::sparse_code_all(cvs::extract_patches(v_star, layout), dict, 4, 0.0);
  const std::vector<Vector> coded = cvs::synthesize_patches(codes, dict);

  // dense assembly of (Phi^T Phi + I + lp * sum R^T R) over 256 pixels
  const int n = 256;
  Matrix a = Matrix::Identity(n, n);
  a += phi.entries.transpose() * phi.entries;  // single 16x16 block
  Matrix cover = cvs::coverage_counts(layout);
  for (int i = 0; i < n; ++i) a(i, i) += lp * cover.reshaped()[i];
  Vector rhs = v_star.reshaped();
  rhs += phi.entries.transpose() * f;
  Matrix scatter = Matrix::Zero(16, 16);
  for (int l = 0; l < layout.patch_count(); ++l) {
    const auto [ar, ac] = layout.anchor(l);
    scatter.block(ar, ac, 8, 8) += coded[static_cast<std::size_t>(l)].reshaped(8, 8);
  }
  rhs += lp * scatter.reshaped();
  const Vector dense = a.ldlt().solve(rhs);

  const Matrix cg = cvs::refine_reconstruct(v_star, f, phi, coded, layout, lp, 1e-10);
  CHECK((cg.reshaped() - dense).norm() <= 1e-8 * dense.norm());
}

TEST_CASE("refinement does not damage a consistent estimate") {
  ToyNonKey toy(32, 32, 16, 0.5, 101);
  const Vector f_meas = measure(toy.truth, toy.phi);
  toy.config.refine_rounds = 3;
  toy.config.refine_code_budget = 100.0;
  // v* = truth plus a faint perturbation, so its PSNR is finite
  cvs::GaussianSource rng(102);
  Matrix v_star = toy.truth;
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) v_star(r, c) += 0.5 * rng.next();
  const cvs::RefineResult refined =
      cvs::refine_frame(v_star, f_meas, toy.phi, toy.ctx.dict, toy.layout, toy.config);
  CHECK(cvs::psnr(refined.frame.pix, toy.truth) >= cvs::psnr(v_star, toy.truth));
}

TEST_CASE("static scene recovery with an exact context is strong at moderate rates") {
  ToyNonKey toy(32, 32, 16, 0.3, 111);
  const Vector f_meas = measure(toy.truth, toy.phi);
  toy.config.max_outer_iters = 4;
  const cvs::NonKeyRecoveryResult result =
      cvs::recover_nonkey_frame(f_meas, toy.phi, toy.ctx, 32, 32, toy.config);
  CHECK(cvs::psnr(result.frame.pix, toy.truth) >= 35.0);
  CHECK(result.next_context.prev_codes.size() == toy.layout.patch_count());
}

TEST_CASE("a useless prediction cannot defeat full-rate data") {
  // prediction orthogonal to the truth in every block; at mr = 1 the data
  // term still pins the frame down
  ToyNonKey toy(16, 16, 8, 1.0, 141, false);
  cvs::GaussianSource rng(142);
  Matrix ortho(16, 16);
  for (int br = 0; br < 2; ++br)
    for (int bc = 0; bc < 2; ++bc) {
      Vector g = random_vector(64, rng);
      Vector t = toy.truth.block(br * 8, bc * 8, 8, 8).reshaped();
      g -= g.dot(t) / t.squaredNorm() * t;
      ortho.block(br * 8, bc * 8, 8, 8) = (50.0 * g.normalized()).reshaped(8, 8);
    }
  toy.ctx.prev_frame = ortho;
  toy.ctx.prev_codes = cvs::sparse_code_all(cvs::extract_patches(ortho, toy.layout),
                                            toy.ctx.dict, 32, 1.0);
  const Vector f_meas = measure(toy.truth, toy.phi);
  toy.config.max_outer_iters = 4;
  const cvs::NonKeyRecoveryResult result =
      cvs::recover_nonkey_frame(f_meas, toy.phi, toy.ctx, 16, 16, toy.config);
  CHECK(cvs::psnr(result.frame.pix, toy.truth) >= 40.0);
}

TEST_CASE("non-key recovery is deterministic") {
  ToyNonKey toy(32, 32, 16, 0.4, 121);
  const Vector f_meas = measure(toy.truth, toy.phi);
  toy.config.max_outer_iters = 2;
  const cvs::NonKeyRecoveryResult a =
      cvs::recover_nonkey_frame(f_meas, toy.phi, toy.ctx, 32, 32, toy.config);
  const cvs::NonKeyRecoveryResult b =
      cvs::recover_nonkey_frame(f_meas, toy.phi, toy.ctx, 32, 32, toy.config);
  CHECK(a.frame.pix == b.frame.pix);
}

TEST_CASE("context geometry is validated") {
  ToyNonKey toy(16, 16, 8, 0.4, 131);
  const Vector f_meas = measure(toy.truth, toy.phi);
  cvs::TemporalContext bad = toy.ctx;
  bad.prev_frame = Matrix::Zero(8, 8);
  CHECK_THROWS_AS(cvs::recover_nonkey_frame(f_meas, toy.phi, bad, 16, 16, toy.config),
                  cvs::config_error);
}
