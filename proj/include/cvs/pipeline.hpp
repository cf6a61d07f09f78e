#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cvs/container.hpp"
#include "cvs/keyframe.hpp"
#include "cvs/metrics.hpp"
#include "cvs/nonkey.hpp"
#include "cvs/video_io.hpp"

namespace cvs {

struct PipelineConfig {
  int block_side = 32;
  double mr_key = 0.5;
  double mr_nonkey = 0.3;
  int gop_size = 5;
  std::uint64_t seed = 1;
  double noise_sigma = 0.0;
  KeyRecoveryConfig key;
  NonKeyConfig nonkey;

  // Canonical knob string; its FNV-1a hash stamps every CSV row.
  std::string describe() const;
  std::uint64_t hash() const { return fnv1a(describe()); }
};

// Role-tagged sub-seeds so key and non-key sensing matrices draw
// independent Gaussian streams from one user-facing seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

MeasurementSet encode_sequence(const VideoSequence& seq, const PipelineConfig& config);

struct FrameDecodeInfo {
  int frame_index = 0;
  FrameRole role = FrameRole::Key;
  int outer_iters = 0;
  double wall_ms = 0.0;
};

struct DecodeResult {
  VideoSequence sequence;
  std::vector<FrameDecodeInfo> info;
};

// Key frames through the l0 decoder, non-key frames through the temporal
// double-l1 decoder; the temporal context chains within each GOP and resets
// at every key frame.
DecodeResult decode_measurements(const MeasurementSet& set, const PipelineConfig& config);

std::vector<QualityReport> score_sequence(const VideoSequence& decoded,
                                          const VideoSequence& reference);

void write_decode_csv(const std::string& path, const DecodeResult& result,
                      const std::vector<QualityReport>& reports, std::uint64_t config_hash);

struct BenchRow {
  std::string scenario;  // "equal" or "fixed-key"
  double mr = 0.0;       // the swept (non-key) measurement ratio
  double mr_key = 0.0;
  double mr_nonkey = 0.0;
  int trials = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

enum class BenchScenario { EqualRatios, FixedKey };

// Sweeps the measurement ratio list, re-seeding per trial, and averages
// PSNR/SSIM over all frames and trials.
std::vector<BenchRow> run_bench(const VideoSequence& seq, PipelineConfig config,
                                const std::vector<double>& mr_list, BenchScenario scenario,
                                int trials);

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows,
                     std::uint64_t config_hash);

// Matplotlib script that renders PSNR-vs-MR and SSIM-vs-MR curves from the
// bench CSV.
void write_plot_script(const std::string& path, const std::string& csv_path);

struct DictCompareRow {
  std::string method;
  int iteration = 0;  // outer iteration, 1-based
  double psnr_db = 0.0;
  double update_ms = 0.0;
};

// Recovers one key frame three times (KSVD / MOD / MDU), logging PSNR
// against the reference and the dictionary-update wall time per outer
// iteration.
std::vector<DictCompareRow> run_dict_compare(const Frame& reference, PipelineConfig config);

void write_dict_compare_csv(const std::string& path, const std::vector<DictCompareRow>& rows,
                            std::uint64_t config_hash);

}  // namespace cvs
