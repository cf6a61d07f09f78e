#include "cvs/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cvs {

namespace {

const char* method_name(DictMethod m) {
  switch (m) {
    case DictMethod::MOD: return "mod";
    case DictMethod::KSVD: return "ksvd";
    case DictMethod::MDU: return "mdu";
  }
  return "?";
}

std::string csv_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

std::string PipelineConfig::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "B=" << block_side << ";mrk=" << mr_key << ";mrnk=" << mr_nonkey << ";gop=" << gop_size
     << ";seed=" << seed << ";noise=" << noise_sigma << ";key{mu=" << key.mu
     << ",lambda=" << key.lambda << ",omega=" << key.omega << ",iin=" << key.inner_iters
     << ",kmax=" << key.max_outer_iters << ",tol=" << key.tol << ",patch=" << key.patch_side
     << ",stride=" << key.patch_stride << ",atoms=" << key.dict_atoms
     << ",method=" << method_name(key.dict.method) << ",train=" << key.dict.iterations
     << ",L=" << key.dict.sparsity_cap << ",group=" << key.dict.mdu_group_size
     << "};nonkey{mu=" << nonkey.mu << ",lambda=" << nonkey.lambda << ",tau=" << nonkey.tau
     << ",iin=" << nonkey.inner_iters << ",shrink=" << nonkey.shrink_iters
     << ",cmargin=" << nonkey.c_margin << ",kmax=" << nonkey.max_outer_iters
     << ",tol=" << nonkey.tol << ",lp=" << nonkey.refine_weight
     << ",budget=" << nonkey.refine_code_budget << ",rounds=" << nonkey.refine_rounds
     << ",dictupd=" << nonkey.refine_update_dict << ",patch=" << nonkey.patch_side
     << ",stride=" << nonkey.patch_stride << ",method=" << method_name(nonkey.dict.method)
     << ",L=" << nonkey.dict.sparsity_cap << "}";
  return os.str();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  // splitmix64 of (base ^ rotated tag); avoids correlated Gaussian streams.
  std::uint64_t z = base ^ (tag * 0x9e3779b97f4a7c15ULL);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

MeasurementSet encode_sequence(const VideoSequence& seq, const PipelineConfig& config) {
  if (seq.frames.empty()) throw config_error("encode_sequence: empty sequence");
  const int rows = seq.rows(), cols = seq.cols();
  block_grid(rows, cols, config.block_side);  // validates divisibility
  const GopStructure gop = split_gop(seq, config.gop_size);

  MeasurementSet set;
  set.rows = rows;
  set.cols = cols;
  set.block_side = config.block_side;
  set.mr_key = config.mr_key;
  set.mr_nonkey = config.mr_nonkey;
  set.gop_size = config.gop_size;
  set.seed_key = derive_seed(config.seed, 'K');
  set.seed_nonkey = derive_seed(config.seed, 'N');
  set.roles = gop.roles;

  const SensingMatrix phi_key = gen_sensing_matrix(set.seed_key, config.mr_key, config.block_side);
  const SensingMatrix phi_nonkey =
      gen_sensing_matrix(set.seed_nonkey, config.mr_nonkey, config.block_side);

  for (int i = 0; i < seq.frame_count(); ++i) {
    const bool key = gop.is_key(i);
    const SensingMatrix& phi = key ? phi_key : phi_nonkey;
    const std::uint64_t noise_seed = derive_seed(config.seed, 0x1000u + static_cast<unsigned>(i));
    set.frames.push_back(stack_measurements(
        measure_frame(seq.frames[static_cast<std::size_t>(i)].pix, phi, config.noise_sigma,
                      noise_seed)));
  }
  return set;
}

DecodeResult decode_measurements(const MeasurementSet& set, const PipelineConfig& config) {
  const SensingMatrix phi_key = gen_sensing_matrix(set.seed_key, set.mr_key, set.block_side);
  const SensingMatrix phi_nonkey =
      gen_sensing_matrix(set.seed_nonkey, set.mr_nonkey, set.block_side);

  DecodeResult result;
  TemporalContext ctx;
  bool have_ctx = false;
  for (int i = 0; i < set.frame_count(); ++i) {
    const bool key = set.roles[static_cast<std::size_t>(i)] == FrameRole::Key;
    const auto t0 = std::chrono::steady_clock::now();
    Frame frame;
    int iters = 0;
    if (key) {
      KeyRecoveryResult rec = recover_keyframe(set.frames[static_cast<std::size_t>(i)], phi_key,
                                               set.rows, set.cols, config.key);
      frame = rec.frame;
      iters = rec.outer_iters;
      ctx.prev_frame = rec.frame.pix;
      ctx.prev_codes = std::move(rec.codes);
      ctx.dict = std::move(rec.dict);
      have_ctx = true;
    } else {
      if (!have_ctx)
        throw config_error("decode_measurements: non-key frame before any key frame");
      NonKeyRecoveryResult rec = recover_nonkey_frame(set.frames[static_cast<std::size_t>(i)],
                                                      phi_nonkey, ctx, set.rows, set.cols,
                                                      config.nonkey);
      frame = rec.frame;
      iters = rec.outer_iters;
      ctx = std::move(rec.next_context);
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.sequence.frames.push_back(std::move(frame));
    result.info.push_back({i, key ? FrameRole::Key : FrameRole::NonKey, iters, ms});
  }
  return result;
}

std::vector<QualityReport> score_sequence(const VideoSequence& decoded,
                                          const VideoSequence& reference) {
  if (decoded.frame_count() > reference.frame_count())
    throw config_error("score_sequence: reference has fewer frames than decode output");
  std::vector<QualityReport> reports;
  for (int i = 0; i < decoded.frame_count(); ++i) {
    QualityReport r;
    r.frame_index = i;
    r.psnr_db = psnr(decoded.frames[static_cast<std::size_t>(i)],
                     reference.frames[static_cast<std::size_t>(i)]);
    r.ssim = ssim(decoded.frames[static_cast<std::size_t>(i)],
                  reference.frames[static_cast<std::size_t>(i)]);
    reports.push_back(r);
  }
  return reports;
}

void write_decode_csv(const std::string& path, const DecodeResult& result,
                      const std::vector<QualityReport>& reports, std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << "frame,role,psnr,ssim,outer_iters,wall_ms,config_hash\n";
  for (std::size_t i = 0; i < result.info.size(); ++i) {
    const FrameDecodeInfo& info = result.info[i];
    const bool scored = i < reports.size();
    out << info.frame_index << ',' << (info.role == FrameRole::Key ? 'K' : 'N') << ','
        << (scored ? csv_double(reports[i].psnr_db) : "") << ','
        << (scored ? csv_double(reports[i].ssim) : "") << ',' << info.outer_iters << ','
        << csv_double(info.wall_ms) << ',' << std::hex << config_hash << std::dec << '\n';
  }
}

std::vector<BenchRow> run_bench(const VideoSequence& seq, PipelineConfig config,
                                const std::vector<double>& mr_list, BenchScenario scenario,
                                int trials) {
  if (trials < 1) throw config_error("run_bench: trials must be >= 1");
  std::vector<BenchRow> rows;
  const std::uint64_t base_seed = config.seed;
  for (double mr : mr_list) {
    BenchRow row;
    row.scenario = scenario == BenchScenario::EqualRatios ? "equal" : "fixed-key";
    row.mr = mr;
    row.mr_key = scenario == BenchScenario::EqualRatios ? mr : config.mr_key;
    row.mr_nonkey = mr;
    row.trials = trials;
    double psnr_acc = 0.0, ssim_acc = 0.0;
    std::size_t count = 0;
    for (int trial = 0; trial < trials; ++trial) {
      PipelineConfig trial_config = config;
      trial_config.mr_key = row.mr_key;
      trial_config.mr_nonkey = row.mr_nonkey;
      trial_config.seed = derive_seed(base_seed, 0xbe000000u + static_cast<unsigned>(trial));
      const MeasurementSet set = encode_sequence(seq, trial_config);
      const DecodeResult decoded = decode_measurements(set, trial_config);
      for (const QualityReport& r : score_sequence(decoded.sequence, seq)) {
        psnr_acc += r.psnr_db;
        ssim_acc += r.ssim;
        ++count;
      }
    }
    row.mean_psnr = psnr_acc / static_cast<double>(count);
    row.mean_ssim = ssim_acc / static_cast<double>(count);
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows,
                     std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << "scenario,mr,mr_key,mr_nonkey,trials,mean_psnr,mean_ssim,config_hash\n";
  for (const BenchRow& r : rows)
    out << r.scenario << ',' << csv_double(r.mr) << ',' << csv_double(r.mr_key) << ','
        << csv_double(r.mr_nonkey) << ',' << r.trials << ',' << csv_double(r.mean_psnr) << ','
        << csv_double(r.mean_ssim) << ',' << std::hex << config_hash << std::dec << '\n';
}

void write_plot_script(const std::string& path, const std::string& csv_path) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << "#!/usr/bin/env python3\n"
         "\"\"\"Render rate-distortion curves from a bench CSV.\"\"\"\n"
         "import csv\n"
         "import sys\n"
         "\n"
         "import matplotlib.pyplot as plt\n"
         "\n"
         "csv_path = sys.argv[1] if len(sys.argv) > 1 else \"" << csv_path << "\"\n"
         "rows = list(csv.DictReader(open(csv_path)))\n"
         "scenarios = sorted({r[\"scenario\"] for r in rows})\n"
         "fig, (ax_psnr, ax_ssim) = plt.subplots(1, 2, figsize=(11, 4))\n"
         "for sc in scenarios:\n"
         "    pts = sorted((float(r[\"mr\"]), float(r[\"mean_psnr\"]), float(r[\"mean_ssim\"]))\n"
         "                 for r in rows if r[\"scenario\"] == sc)\n"
         "    mr = [p[0] for p in pts]\n"
         "    ax_psnr.plot(mr, [p[1] for p in pts], marker=\"o\", label=sc)\n"
         "    ax_ssim.plot(mr, [p[2] for p in pts], marker=\"s\", label=sc)\n"
         "ax_psnr.set_xlabel(\"measurement ratio\")\n"
         "ax_psnr.set_ylabel(\"mean PSNR (dB)\")\n"
         "ax_ssim.set_xlabel(\"measurement ratio\")\n"
         "ax_ssim.set_ylabel(\"mean SSIM\")\n"
         "for ax in (ax_psnr, ax_ssim):\n"
         "    ax.grid(True, alpha=0.4)\n"
         "    ax.legend()\n"
         "fig.tight_layout()\n"
         "out = csv_path.rsplit(\".\", 1)[0] + \".png\"\n"
         "fig.savefig(out, dpi=150)\n"
         "print(f\"wrote {out}\")\n";
}

std::vector<DictCompareRow> run_dict_compare(const Frame& reference, PipelineConfig config) {
  const int rows = reference.rows(), cols = reference.cols();
  const SensingMatrix phi =
      gen_sensing_matrix(derive_seed(config.seed, 'K'), config.mr_key, config.block_side);
  const Vector f = stack_measurements(measure_frame(reference.pix, phi));

  std::vector<DictCompareRow> out;
  for (DictMethod method : {DictMethod::KSVD, DictMethod::MOD, DictMethod::MDU}) {
    KeyRecoveryConfig key = config.key;
    key.dict.method = method;
    key.tol = std::numeric_limits<double>::denorm_min();  // log every iteration
    key.progress = [&](const SbiProgress& p) {
      out.push_back({method_name(method), p.k, psnr(*p.v, reference.pix), p.dict_update_ms});
    };
    recover_keyframe(f, phi, rows, cols, key);
  }
  return out;
}

void write_dict_compare_csv(const std::string& path, const std::vector<DictCompareRow>& rows,
                            std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << "method,iter,psnr,update_ms,config_hash\n";
  for (const DictCompareRow& r : rows)
    out << r.method << ',' << r.iteration << ',' << csv_double(r.psnr_db) << ','
        << csv_double(r.update_ms) << ',' << std::hex << config_hash << std::dec << '\n';
}

}  // namespace cvs
