#pragma once

#include <string>

#include "cvs/sensing.hpp"

namespace cvs {

// ".cvsm" measurement container: magic "CVSM1", little-endian header
// (rows, cols, block side, measurement ratios, gop size, seeds, frame
// count, vectorization tag), then per frame a role byte ('K'/'N') followed
// by the stacked float64 measurement payload in block raster order.
void write_container(const MeasurementSet& set, const std::string& path);
MeasurementSet read_container(const std::string& path);

}  // namespace cvs
