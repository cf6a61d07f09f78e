#include "cvs/metrics.hpp"

#include <cmath>
#include <limits>

namespace cvs {

namespace {

void require_same_geometry(const Matrix& u, const Matrix& v, const char* who) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw config_error(std::string(who) + ": geometry mismatch");
}

}  // namespace

double psnr(const Matrix& u, const Matrix& v) {
  require_same_geometry(u, v, "psnr");
  const double err = (u - v).norm();
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  const double n = std::sqrt(static_cast<double>(u.size()));
  return 20.0 * std::log10(n * 255.0 / err);
}

double ssim(const Matrix& u, const Matrix& v) {
  require_same_geometry(u, v, "ssim");
  const double n = static_cast<double>(u.size());
  const double mu_u = u.sum() / n;
  const double mu_v = v.sum() / n;
  const Matrix du = u.array() - mu_u;
  const Matrix dv = v.array() - mu_v;
  const double var_u = du.squaredNorm() / n;
  const double var_v = dv.squaredNorm() / n;
  const double cov = (du.array() * dv.array()).sum() / n;
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  return ((2.0 * mu_u * mu_v + c1) * (2.0 * cov + c2)) /
         ((mu_u * mu_u + mu_v * mu_v + c1) * (var_u + var_v + c2));
}

}  // namespace cvs
