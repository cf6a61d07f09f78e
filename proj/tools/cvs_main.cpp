#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvs/pipeline.hpp"

namespace {

cvs::VideoFormat format_for(const std::string& path, const std::string& forced) {
  if (forced == "raw8") return cvs::VideoFormat::Raw8;
  if (forced == "y4m") return cvs::VideoFormat::Y4mLuma;
  if (!forced.empty()) throw cvs::config_error("unknown format: " + forced);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".y4m") return cvs::VideoFormat::Y4mLuma;
  return cvs::VideoFormat::Raw8;
}

cvs::DictMethod parse_method(const std::string& name) {
  if (name == "ksvd") return cvs::DictMethod::KSVD;
  if (name == "mod") return cvs::DictMethod::MOD;
  if (name == "mdu") return cvs::DictMethod::MDU;
  throw cvs::config_error("unknown dictionary method: " + name);
}

struct CommonVideoArgs {
  std::string input;
  std::string format;
  int rows = 0;
  int cols = 0;
  int max_frames = 0;
};

void add_video_options(CLI::App* cmd, CommonVideoArgs& args) {
  cmd->add_option("--in", args.input, "input video (raw8 or y4m)")->required();
  cmd->add_option("--format", args.format, "force input format: raw8|y4m");
  cmd->add_option("--rows", args.rows, "frame rows (raw8)");
  cmd->add_option("--cols", args.cols, "frame cols (raw8)");
  cmd->add_option("--max-frames", args.max_frames, "limit number of frames (0 = all)");
}

cvs::VideoSequence load_video(const CommonVideoArgs& args) {
  return cvs::load_sequence(args.input, format_for(args.input, args.format), args.rows, args.cols,
                            args.max_frames);
}

void add_decoder_options(CLI::App* cmd, cvs::PipelineConfig& config, std::string& dict_method) {
  cmd->add_option("--dict", dict_method, "dictionary update: ksvd|mod|mdu");
  cmd->add_option("--lambda", config.key.lambda, "sparsity weight (key, also non-key default)");
  cmd->add_option("--tau", config.nonkey.tau, "temporal-difference weight (non-key)");
  cmd->add_option("--omega", config.key.omega, "coding-budget control factor");
  cmd->add_option("--mu", config.key.mu, "split penalty weight");
  cmd->add_option("--iin", config.key.inner_iters, "steepest-descent steps per outer iteration");
  cmd->add_option("--kmax", config.key.max_outer_iters, "outer iteration cap");
  cmd->add_option("--tol", config.key.tol, "SSIM-difference stopping tolerance");
  cmd->add_option("--train-iters", config.key.dict.iterations, "dictionary learning rounds");
  cmd->add_option("--atoms", config.key.dict_atoms, "dictionary size");
  cmd->add_option("--sparsity", config.key.dict.sparsity_cap, "per-patch atom budget L");
  cmd->add_option("--patch", config.key.patch_side, "patch side");
  cmd->add_option("--stride", config.key.patch_stride, "patch stride");
  cmd->add_option("--shrink-iters", config.nonkey.shrink_iters, "shrinkage iterations per patch");
  cmd->add_option("--refine-rounds", config.nonkey.refine_rounds, "refinement rounds (non-key)");
  cmd->add_option("--refine-weight", config.nonkey.refine_weight, "refinement weight lambda'");
}

// The one-flag decoder knobs above land in the key config; mirror them into
// the non-key config so both stages agree unless individually overridden.
void sync_configs(cvs::PipelineConfig& config, const std::string& dict_method, bool lambda_set,
                  bool tau_set) {
  const cvs::DictMethod method = parse_method(dict_method);
  config.key.dict.method = method;
  config.nonkey.dict.method = method;
  config.nonkey.mu = config.key.mu;
  config.nonkey.lambda = config.key.lambda;
  if (lambda_set && !tau_set) config.nonkey.tau = config.key.lambda;
  config.nonkey.inner_iters = config.key.inner_iters;
  config.nonkey.max_outer_iters = config.key.max_outer_iters;
  config.nonkey.tol = config.key.tol;
  config.nonkey.patch_side = config.key.patch_side;
  config.nonkey.patch_stride = config.key.patch_stride;
  config.nonkey.dict.sparsity_cap = config.key.dict.sparsity_cap;
  config.nonkey.dict.mdu_group_size = config.key.dict.mdu_group_size;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block compressive video sensing codec"};
  app.require_subcommand(1);

  cvs::PipelineConfig config;
  std::string dict_method = "ksvd";

  // encode
  auto* enc = app.add_subcommand("encode", "project a sequence to a .cvsm container");
  CommonVideoArgs enc_in;
  std::string enc_out;
  add_video_options(enc, enc_in);
  enc->add_option("--out", enc_out, "output .cvsm path")->required();
  enc->add_option("--block", config.block_side, "block side B");
  enc->add_option("--mrk", config.mr_key, "key-frame measurement ratio");
  enc->add_option("--mrnk", config.mr_nonkey, "non-key measurement ratio");
  enc->add_option("--gop", config.gop_size, "GOP size");
  enc->add_option("--seed", config.seed, "sensing seed");
  enc->add_option("--noise-sigma", config.noise_sigma, "additive measurement noise sigma");

  // decode
  auto* dec = app.add_subcommand("decode", "reconstruct a sequence from a .cvsm container");
  std::string dec_in, dec_out, dec_ref, dec_csv;
  int dec_ref_rows = 0, dec_ref_cols = 0;
  std::string dec_ref_format;
  dec->add_option("--in", dec_in, "input .cvsm container")->required();
  dec->add_option("--out", dec_out, "reconstructed video output (raw8 or .y4m)");
  dec->add_option("--ref", dec_ref, "reference video for quality metrics");
  dec->add_option("--ref-format", dec_ref_format, "reference format: raw8|y4m");
  dec->add_option("--ref-rows", dec_ref_rows, "reference rows (raw8)");
  dec->add_option("--ref-cols", dec_ref_cols, "reference cols (raw8)");
  dec->add_option("--csv", dec_csv, "per-frame metrics CSV path");
  config.key.max_outer_iters = 6;  // sequence-mode default
  add_decoder_options(dec, config, dict_method);

  // bench
  auto* bench = app.add_subcommand("bench", "measurement-ratio sweep with averaged metrics");
  CommonVideoArgs bench_in;
  std::vector<double> mr_list{0.1, 0.2, 0.3, 0.4, 0.5};
  std::string scenario = "equal", bench_csv = "bench.csv", bench_plot = "plot_bench.py";
  int trials = 5;
  add_video_options(bench, bench_in);
  bench->add_option("--mr-list", mr_list, "measurement ratios to sweep")->delimiter(',');
  bench->add_option("--scenario", scenario, "equal|fixed-key");
  bench->add_option("--trials", trials, "independent trials per ratio");
  bench->add_option("--block", config.block_side, "block side B");
  bench->add_option("--mrk", config.mr_key, "key ratio for the fixed-key scenario");
  bench->add_option("--gop", config.gop_size, "GOP size");
  bench->add_option("--seed", config.seed, "base seed");
  bench->add_option("--out-csv", bench_csv, "aggregate CSV path");
  bench->add_option("--out-plot", bench_plot, "plot script path");
  add_decoder_options(bench, config, dict_method);

  // dict-compare
  auto* dcmp = app.add_subcommand("dict-compare",
                                  "per-iteration PSNR and update time for ksvd/mod/mdu");
  CommonVideoArgs dcmp_in;
  int frame_index = 20;
  std::string dcmp_csv = "dict_compare.csv";
  add_video_options(dcmp, dcmp_in);
  dcmp->add_option("--frame-index", frame_index, "key frame to study");
  dcmp->add_option("--mrk", config.mr_key, "key-frame measurement ratio");
  dcmp->add_option("--block", config.block_side, "block side B");
  dcmp->add_option("--seed", config.seed, "sensing seed");
  dcmp->add_option("--out-csv", dcmp_csv, "per-iteration CSV path");
  add_decoder_options(dcmp, config, dict_method);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*enc) {
      const cvs::VideoSequence seq = load_video(enc_in);
      cvs::write_container(cvs::encode_sequence(seq, config), enc_out);
      std::cout << "encoded " << seq.frame_count() << " frames -> " << enc_out << "\n";
      return 0;
    }

    if (*dec) {
      sync_configs(config, dict_method, dec->count("--lambda") > 0, dec->count("--tau") > 0);
      const cvs::MeasurementSet set = cvs::read_container(dec_in);
      const cvs::DecodeResult result = cvs::decode_measurements(set, config);
      std::vector<cvs::QualityReport> reports;
      if (!dec_ref.empty()) {
        const cvs::VideoSequence ref =
            cvs::load_sequence(dec_ref, format_for(dec_ref, dec_ref_format), dec_ref_rows,
                               dec_ref_cols, result.sequence.frame_count());
        reports = cvs::score_sequence(result.sequence, ref);
        for (const cvs::QualityReport& r : reports)
          std::cout << "frame " << r.frame_index << ": psnr=" << r.psnr_db << " ssim=" << r.ssim
                    << "\n";
      }
      if (!dec_out.empty())
        cvs::save_sequence(result.sequence, dec_out, format_for(dec_out, ""));
      if (!dec_csv.empty()) cvs::write_decode_csv(dec_csv, result, reports, config.hash());
      return 0;
    }

    if (*bench) {
      sync_configs(config, dict_method, bench->count("--lambda") > 0, bench->count("--tau") > 0);
      cvs::BenchScenario sc;
      if (scenario == "equal") sc = cvs::BenchScenario::EqualRatios;
      else if (scenario == "fixed-key") sc = cvs::BenchScenario::FixedKey;
      else throw cvs::config_error("unknown scenario: " + scenario);
      const cvs::VideoSequence seq = load_video(bench_in);
      const std::vector<cvs::BenchRow> rows = cvs::run_bench(seq, config, mr_list, sc, trials);
      cvs::write_bench_csv(bench_csv, rows, config.hash());
      cvs::write_plot_script(bench_plot, bench_csv);
      for (const cvs::BenchRow& r : rows)
        std::cout << r.scenario << " mr=" << r.mr << ": psnr=" << r.mean_psnr
                  << " ssim=" << r.mean_ssim << "\n";
      std::cout << "wrote " << bench_csv << " and " << bench_plot << "\n";
      return 0;
    }

    if (*dcmp) {
      sync_configs(config, dict_method, dcmp->count("--lambda") > 0, dcmp->count("--tau") > 0);
      if (dcmp->count("--kmax") == 0) config.key.max_outer_iters = 20;
      const cvs::VideoSequence seq = load_video(dcmp_in);
      if (frame_index < 0 || frame_index >= seq.frame_count())
        throw cvs::config_error("frame index out of range");
      const std::vector<cvs::DictCompareRow> rows =
          cvs::run_dict_compare(seq.frames[static_cast<std::size_t>(frame_index)], config);
      cvs::write_dict_compare_csv(dcmp_csv, rows, config.hash());
      std::cout << "wrote " << dcmp_csv << "\n";
      return 0;
    }
  } catch (const cvs::divergence_error& e) {
    std::cerr << "numeric divergence: " << e.what() << "\n";
    return 3;
  } catch (const cvs::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cvs::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
