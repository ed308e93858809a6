#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "convtrack/apprunner.hpp"

namespace convtrack {

namespace {

struct Options {
  std::string config_path;
  std::string weights_path;
  std::optional<std::uint64_t> seed;

  std::string path;  // sequence or dataset directory
  std::string out;
  std::string report;
  int jobs = 1;

  std::string kind;
  int frames = 100;
  std::uint64_t synth_seed = 7;
  double noise = 0.0;

  int epochs = PretrainOptions{}.epochs;
  std::uint64_t pretrain_seed = PretrainOptions{}.seed;

  std::vector<std::string> results;
};

TrackerConfig config_from(const Options& o) {
  TrackerConfig c = o.config_path.empty() ? TrackerConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

std::optional<PretrainedModel> weights_from(const Options& o) {
  if (o.weights_path.empty()) return std::nullopt;
  return load_weights(o.weights_path);
}

void write_text(const fs::path& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw IoError("cannot write '" + path.string() + "'");
}

int cmd_track(const Options& o, std::ostream& out) {
  const TrackerConfig config = config_from(o);
  const auto weights = weights_from(o);
  const Sequence seq = load_sequence(o.path);
  const OpeOutput run = ope_run(config, seq, weights ? &*weights : nullptr);
  save_results(o.out, {run.result.rects, summary_metrics(run.summary)});
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: %zu frames, precision@20 %.3f, auc %.3f, %.1f fps -> %s\n",
                seq.name.c_str(), seq.size(), run.summary.precision20, run.summary.auc,
                run.summary.fps, o.out.c_str());
  out << buf;
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const TrackerConfig config = config_from(o);
  const auto weights = weights_from(o);
  const auto entries = evaluate_dataset(o.path, config, o.jobs, weights ? &*weights : nullptr);
  write_text(o.report, format_eval_report(entries), out);
  return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthSpec spec = SynthSpec::preset(parse_synth_kind(o.kind), o.frames);
  spec.noise_std = o.noise;
  const Sequence seq = synth_sequence(spec, o.synth_seed);
  const fs::path dir = o.out.empty() ? fs::path(seq.name) : fs::path(o.out);
  save_sequence(seq, dir);
  out << "wrote " << seq.size() << " frames to " << dir.string() << "\n";
  return 0;
}

int cmd_pretrain(const Options& o, std::ostream& out) {
  const TrackerConfig config = config_from(o);
  std::vector<Sequence> sequences;
  for (const auto& dir : list_sequences(o.path)) sequences.push_back(load_sequence(dir));
  if (sequences.empty()) throw IoError("dataset '" + o.path + "' holds no sequences");
  PretrainOptions options;
  options.epochs = o.epochs;
  options.seed = o.pretrain_seed;
  const PretrainedModel model = pretrain_offline(sequences, config, options);
  save_weights(o.out, model);
  for (std::size_t e = 0; e < model.epoch_losses.size(); ++e) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "epoch %zu loss %.6f\n", e + 1, model.epoch_losses[e]);
    out << buf;
  }
  out << "wrote " << o.out << "\n";
  return 0;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const TrackerConfig config = config_from(o);
  out << format_bench(run_bench(config, o.frames, o.synth_seed));
  return 0;
}

int cmd_plot(const Options& o, std::ostream& out) {
  std::vector<std::string> names;
  std::vector<Curve> precision;
  std::vector<Curve> success;
  for (const auto& p : o.results) {
    const ResultsFile r = load_results(p);
    if (r.metrics.empty()) throw IoError("results '" + p + "' carry no #metrics block");
    names.push_back(fs::path(p).stem().string());
    precision.push_back(curve_from_metrics(r.metrics, "precision"));
    success.push_back(curve_from_metrics(r.metrics, "success"));
  }
  emit_plot(o.out, render_ope_plot(names, precision, success));
  out << "wrote " << o.out << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Convolutional tracker: tracking, evaluation, data synthesis and benchmarking"};
  app.name("convtrack");
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "key = value configuration file")
        ->check(CLI::ExistingFile);
  };
  auto add_weights = [&](CLI::App* sub) {
    sub->add_option("--weights", o.weights_path, "pretrained weights (JSON)")->check(CLI::ExistingFile);
  };

  auto* track = app.add_subcommand("track", "track one sequence and write its results file");
  track->add_option("seq_dir", o.path, "sequence directory")->required();
  add_config(track);
  add_weights(track);
  track->add_option("--out", o.out, "results file")->default_val("results.txt");
  track->add_option("--seed", o.seed, "overrides the configured seed");

  auto* eval = app.add_subcommand("eval", "one-pass evaluation over a dataset directory");
  eval->add_option("dataset_dir", o.path, "directory of sequence directories")->required();
  add_config(eval);
  add_weights(eval);
  eval->add_option("--report", o.report, "report file (stdout when absent)");
  eval->add_option("--jobs", o.jobs, "sequences evaluated in parallel")->check(CLI::PositiveNumber);
  eval->add_option("--seed", o.seed, "overrides the configured seed");

  auto* synth = app.add_subcommand("synth", "write a synthetic sequence");
  synth->add_option("kind", o.kind, "translate, zoom, occlude or clutter")
      ->required()
      ->check(CLI::IsMember({"translate", "zoom", "occlude", "clutter"}));
  synth->add_option("--frames", o.frames, "frame count")->check(CLI::Range(2, 100000));
  synth->add_option("--seed", o.synth_seed, "scene seed");
  synth->add_option("--noise", o.noise, "Gaussian pixel noise std")->check(CLI::NonNegativeNumber);
  synth->add_option("--out", o.out, "sequence directory (default <kind>_<seed>)");

  auto* pretrain = app.add_subcommand("pretrain", "offline training of extractor and head");
  pretrain->add_option("dataset_dir", o.path, "directory of sequence directories")->required();
  add_config(pretrain);
  pretrain->add_option("--epochs", o.epochs, "passes over the corpus")->check(CLI::PositiveNumber);
  pretrain->add_option("--seed", o.pretrain_seed, "jitter seed");
  pretrain->add_option("--out", o.out, "weights file")->default_val("weights.json");

  auto* bench = app.add_subcommand("bench", "throughput on a synthetic translate sequence");
  add_config(bench);
  bench->add_option("--frames", o.frames, "frame count")->check(CLI::Range(2, 100000));
  bench->add_option("--seed", o.synth_seed, "scene seed");

  auto* plot = app.add_subcommand("plot", "precision and success plots from results files");
  plot->add_option("results", o.results, "results files with a #metrics block")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--out", o.out, "SVG file")->required();

  if (!args.empty() && !args.front().starts_with('-') && app.get_subcommand_no_throw(args.front()) == nullptr) {
    err << "error: unknown subcommand '" << args.front() << "'\n" << app.help();
    return 2;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*track) return cmd_track(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*synth) return cmd_synth(o, out);
    if (*pretrain) return cmd_pretrain(o, out);
    if (*bench) return cmd_bench(o, out);
    if (*plot) return cmd_plot(o, out);
  } catch (const std::exception& e) {
    std::string what = e.what();
    std::replace(what.begin(), what.end(), '\n', ' ');
    err << "error: " << what << "\n";
    return 1;
  }
  return 2;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace convtrack
