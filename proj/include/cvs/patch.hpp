#pragma once

#include <vector>

#include "cvs/common.hpp"

namespace cvs {

// Overlapping-patch extraction grid. Anchors step by `stride` and the last
// anchor in each dimension is clamped so the final patch abuts the frame
// edge; every pixel is covered by at least one patch.
struct PatchLayout {
  int frame_rows = 0, frame_cols = 0;
  int patch_side = 0;
  int stride = 0;
  std::vector<int> anchor_rows;  // top edges
  std::vector<int> anchor_cols;  // left edges

  int patch_count() const {
    return static_cast<int>(anchor_rows.size() * anchor_cols.size());
  }
  int patch_pixels() const { return patch_side * patch_side; }
  // Raster order over (anchor_row, anchor_col).
  std::pair<int, int> anchor(int l) const {
    const int across = static_cast<int>(anchor_cols.size());
    return {anchor_rows[static_cast<std::size_t>(l / across)],
            anchor_cols[static_cast<std::size_t>(l % across)]};
  }
};

PatchLayout make_patch_layout(int frame_rows, int frame_cols, int patch_side, int stride);

// Patch l as the column-major vectorization of its window.
std::vector<Vector> extract_patches(const Matrix& img, const PatchLayout& layout);
Vector extract_patch(const Matrix& img, const PatchLayout& layout, int l);

// Least-squares recombination: per-pixel average of all covering patches.
Matrix aggregate_patches(const std::vector<Vector>& patches, const PatchLayout& layout);

// Number of patches covering each pixel. Diagonal of sum_l R_l^T R_l.
Matrix coverage_counts(const PatchLayout& layout);

}  // namespace cvs
