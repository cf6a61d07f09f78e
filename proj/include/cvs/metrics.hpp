#pragma once

#include "cvs/common.hpp"
#include "cvs/frame.hpp"

namespace cvs {

// PSNR in dB for 8-bit nominal range:
//   20*log10(sqrt(rows*cols)*255 / ||u - v||_2)
// Returns +infinity when the images are identical.
double psnr(const Matrix& u, const Matrix& v);

// Single-window SSIM over global image statistics (population moments,
// divisor N), with c1 = (0.01*255)^2 and c2 = (0.03*255)^2.
double ssim(const Matrix& u, const Matrix& v);

inline double psnr(const Frame& u, const Frame& v) { return psnr(u.pix, v.pix); }
inline double ssim(const Frame& u, const Frame& v) { return ssim(u.pix, v.pix); }

struct QualityReport {
  int frame_index = 0;
  double psnr_db = 0.0;  // +inf sentinel when reconstruction is exact
  double ssim = 0.0;
};

}  // namespace cvs
