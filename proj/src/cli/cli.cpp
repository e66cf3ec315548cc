#include "nanomvg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "nanomvg/error.hpp"
#include "nanomvg/fixtures.hpp"
#include "nanomvg/io.hpp"
#include "nanomvg/verify/acceptance.hpp"

namespace nanomvg {

namespace fs = std::filesystem;

namespace {

struct InferArgs {
  std::string config, weights, image, radar, prompt, out_dir, vocab;
  std::optional<int> topk;
  std::optional<double> score_thresh;
  std::optional<double> mask_thresh;
  bool attention_normalize = false;
  bool fused = false;
  bool train_mode = false;
  std::optional<unsigned long long> seed;
};

int run_infer_command(const InferArgs& a, std::ostream& out) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : RunConfig::load(a.config);
  if (a.topk) cfg.topk = *a.topk;
  if (a.score_thresh) cfg.score_thresh = *a.score_thresh;
  if (a.mask_thresh) cfg.mask_thresh = static_cast<float>(*a.mask_thresh);
  if (a.attention_normalize) cfg.attention_normalize = true;
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();

  const std::string vocab_path = a.vocab.empty() ? cfg.vocab : a.vocab;
  const Vocabulary vocab = vocab_path.empty()
                               ? Vocabulary::from_tokens(fixture_vocabulary())
                               : Vocabulary::load(vocab_path);
  ModelParams model =
      a.weights.empty()
          ? ModelParams::random(cfg, vocab.size(), cfg.seed)
          : ModelParams::from_archive(cfg, load_archive(a.weights));
  require(!(a.train_mode && model.fused()), ErrorCode::kState,
          "--train-mode needs an unfused archive");
  if (a.fused && !model.fused()) model = model.fuse();

  const InferOutput r =
      run_infer(model, a.image, a.radar, a.prompt, vocab, a.out_dir);
  const BinaryMask& mask = r.prediction.res.masks.at(0);
  out << "boxes " << r.prediction.boxes.size() << " -> "
      << r.boxes_path.string() << "\n";
  out << "mask " << mask.width << "x" << mask.height << " foreground "
      << mask.count() << " -> " << r.mask_path.string() << "\n";
  return kExitOk;
}

int run_eval_command(const std::string& pred, const std::string& gt,
                     std::ostream& out) {
  const EvalResult r = evaluate(load_eval_set(pred), load_eval_set(gt));
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "AP50 %.4f\nAP50:95 %.4f\nAR50:95 %.4f\nmIoU %.4f\nqueries %d\n",
                r.ap50, r.ap50_95, r.ar50_95, r.miou, r.queries_scored);
  out << buf;
  return kExitOk;
}

int run_mept_command(const std::string& trace_path,
                     const std::vector<double>& perf, std::optional<int> tau,
                     std::ostream& out) {
  EnergyTrace trace = EnergyTrace::load_csv(trace_path);
  trace.tau_evals = tau;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g\n", mept(perf, trace));
  out << buf;
  return kExitOk;
}

int run_fuse_command(const std::string& in, const std::string& out_path,
                     std::ostream& out) {
  const WeightArchive fused = fuse_archive(load_archive(in));
  save_archive(fused, out_path);
  out << "fused " << fused.manifest.size() << " tensors -> " << out_path
      << "\n";
  return kExitOk;
}

int run_selftest_command(bool full, std::uint64_t seed, std::ostream& out) {
  verify::AcceptanceOptions opts;
  opts.include_large = full;
  opts.seed = seed;
  return verify::report(verify::run_acceptance(opts), out) ? kExitOk
                                                           : kExitData;
}

int run_fixtures_command(const std::string& dir, const FixtureOptions& opts,
                         std::ostream& out) {
  generate_fixtures(dir, opts);
  out << "fixtures (" << opts.input_size << "x" << opts.input_size
      << (opts.zero_weights ? ", zero weights" : "") << ") -> " << dir << "\n";
  return kExitOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  CLI::App app{"nmvg: multi-sensor visual grounding runtime", "nmvg"};
  app.require_subcommand(1);

  InferArgs infer;
  auto* cmd_infer = app.add_subcommand("infer", "run the model on one sample");
  cmd_infer->add_option("--config", infer.config, "key = value run config");
  cmd_infer->add_option("--weights", infer.weights,
                        "NMVG archive (seeded random weights when omitted)");
  cmd_infer->add_option("--image", infer.image, "P6/P5 image")->required();
  cmd_infer->add_option("--radar", infer.radar, "P6 or raw f32 planar radar")
      ->required();
  cmd_infer->add_option("--prompt", infer.prompt, "prompt text file")
      ->required();
  cmd_infer->add_option("--out-dir", infer.out_dir, "output directory")
      ->required();
  cmd_infer->add_option("--vocab", infer.vocab, "vocabulary, one token per line");
  cmd_infer->add_option("--topk", infer.topk, "maximum boxes");
  cmd_infer->add_option("--score-thresh", infer.score_thresh,
                        "minimum peak score");
  cmd_infer->add_option("--mask-thresh", infer.mask_thresh,
                        "mask logit threshold");
  cmd_infer->add_flag("--attention-normalize", infer.attention_normalize,
                      "row-softmax the similarity matrix");
  cmd_infer->add_option("--seed", infer.seed, "seed for random weights");
  auto* fused_flag = cmd_infer->add_flag(
      "--fused", infer.fused, "fold the RES-head branches before running");
  cmd_infer->add_flag("--train-mode", infer.train_mode,
                      "run the multi-branch RES head as stored")
      ->excludes(fused_flag);

  std::string fuse_in, fuse_out;
  auto* cmd_fuse =
      app.add_subcommand("fuse-rep", "fold multi-branch RES blocks in an archive");
  cmd_fuse->add_option("input", fuse_in, "train-mode archive")->required();
  cmd_fuse->add_option("output", fuse_out, "fused archive")->required();

  std::string eval_pred, eval_gt;
  auto* cmd_eval = app.add_subcommand("eval", "AP / AR / mIoU of predictions");
  cmd_eval->add_option("--pred", eval_pred, "prediction set directory")
      ->required();
  cmd_eval->add_option("--gt", eval_gt, "ground-truth set directory")->required();

  std::string trace_path;
  std::vector<double> perf;
  std::optional<int> tau;
  auto* cmd_mept = app.add_subcommand("mept", "energy / performance trade-off");
  cmd_mept->add_option("--trace", trace_path, "energy trace CSV")->required();
  cmd_mept->add_option("--perf", perf, "task performance value(s)")->required();
  cmd_mept->add_option("--tau", tau, "evaluation count (default: rows)");

  bool full = false;
  std::uint64_t selftest_seed = verify::AcceptanceOptions{}.seed;
  auto* cmd_self = app.add_subcommand("selftest", "run the acceptance oracles");
  cmd_self->add_flag("--full", full, "include the 640x640 pipeline run");
  cmd_self->add_option("--seed", selftest_seed, "oracle seed");

  std::string fixtures_dir;
  FixtureOptions fx;
  auto* cmd_fx = app.add_subcommand("gen-fixtures", "write seeded test inputs");
  cmd_fx->add_option("--out-dir", fixtures_dir, "output directory")->required();
  cmd_fx->add_option("--size", fx.input_size, "input size (multiple of 32)");
  cmd_fx->add_option("--seed", fx.seed, "seed");
  cmd_fx->add_option("--samples", fx.eval_samples, "ground-truth samples");
  cmd_fx->add_flag("--zero-weights", fx.zero_weights, "write an all-zero archive");

  if (args.empty()) {
    err << app.help();
    return kExitUsage;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (cmd_infer->parsed()) return run_infer_command(infer, out);
    if (cmd_fuse->parsed()) return run_fuse_command(fuse_in, fuse_out, out);
    if (cmd_eval->parsed()) return run_eval_command(eval_pred, eval_gt, out);
    if (cmd_mept->parsed()) return run_mept_command(trace_path, perf, tau, out);
    if (cmd_self->parsed()) return run_selftest_command(full, selftest_seed, out);
    if (cmd_fx->parsed()) return run_fixtures_command(fixtures_dir, fx, out);
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error [io]: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace nanomvg
