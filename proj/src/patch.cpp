#include "cvs/patch.hpp"

namespace cvs {

namespace {

std::vector<int> anchor_positions(int dim, int patch_side, int stride) {
  std::vector<int> anchors;
  for (int a = 0; a + patch_side <= dim; a += stride) anchors.push_back(a);
  if (anchors.empty() || anchors.back() != dim - patch_side) anchors.push_back(dim - patch_side);
  return anchors;
}

}  // namespace

PatchLayout make_patch_layout(int frame_rows, int frame_cols, int patch_side, int stride) {
  if (patch_side <= 0 || stride <= 0)
    throw config_error("make_patch_layout: patch_side and stride must be positive");
  if (patch_side > frame_rows || patch_side > frame_cols)
    throw config_error("make_patch_layout: patch larger than frame");
  PatchLayout layout;
  layout.frame_rows = frame_rows;
  layout.frame_cols = frame_cols;
  layout.patch_side = patch_side;
  layout.stride = stride;
  layout.anchor_rows = anchor_positions(frame_rows, patch_side, stride);
  layout.anchor_cols = anchor_positions(frame_cols, patch_side, stride);
  return layout;
}

Vector extract_patch(const Matrix& img, const PatchLayout& layout, int l) {
  const auto [r, c] = layout.anchor(l);
  if (r + layout.patch_side > img.rows() || c + layout.patch_side > img.cols())
    throw config_error("extract_patch: anchor out of bounds");
  return img.block(r, c, layout.patch_side, layout.patch_side).reshaped();
}

std::vector<Vector> extract_patches(const Matrix& img, const PatchLayout& layout) {
  if (img.rows() != layout.frame_rows || img.cols() != layout.frame_cols)
    throw config_error("extract_patches: layout does not match frame geometry");
  std::vector<Vector> out(static_cast<std::size_t>(layout.patch_count()));
  parallel_for(out.size(), [&](std::size_t l) {
    out[l] = extract_patch(img, layout, static_cast<int>(l));
  });
  return out;
}

Matrix coverage_counts(const PatchLayout& layout) {
  Matrix counts = Matrix::Zero(layout.frame_rows, layout.frame_cols);
  for (int r : layout.anchor_rows)
    for (int c : layout.anchor_cols)
      counts.block(r, c, layout.patch_side, layout.patch_side).array() += 1.0;
  return counts;
}

Matrix aggregate_patches(const std::vector<Vector>& patches, const PatchLayout& layout) {
  if (patches.size() != static_cast<std::size_t>(layout.patch_count()))
    throw config_error("aggregate_patches: patch count does not match layout");
  const int p = layout.patch_side;
  for (const Vector& v : patches)
    if (v.size() != layout.patch_pixels())
      throw config_error("aggregate_patches: patch vector has wrong length");

  // Shifted mean: average each pixel as first + mean(value - first), where
  // "first" is the lowest-index covering patch. Identical copies then
  // average back to themselves exactly, and accumulation order is fixed so
  // the result is bitwise reproducible.
  Matrix first(layout.frame_rows, layout.frame_cols);
  for (int l = layout.patch_count() - 1; l >= 0; --l) {
    const auto [r, c] = layout.anchor(l);
    first.block(r, c, p, p) = patches[static_cast<std::size_t>(l)].reshaped(p, p);
  }
  Matrix sum = Matrix::Zero(layout.frame_rows, layout.frame_cols);
  for (int l = 0; l < layout.patch_count(); ++l) {
    const auto [r, c] = layout.anchor(l);
    sum.block(r, c, p, p) +=
        patches[static_cast<std::size_t>(l)].reshaped(p, p) - first.block(r, c, p, p);
  }
  return first.array() + sum.array() / coverage_counts(layout).array();
}

}  // namespace cvs
