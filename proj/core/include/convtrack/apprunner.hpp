#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "convtrack/evalkit.hpp"
#include "convtrack/pretrain.hpp"
#include "convtrack/trackcore.hpp"

namespace convtrack {

namespace fs = std::filesystem;

/// Failure reading or writing a file; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- images ----------------------------------------------------------------

/// Decodes a PGM/PPM (P2, P3, P5, P6; maxval up to 65535) natively; other
/// raster formats go through OpenCV when the library was built with it.
/// Colour is reduced with luminance(); values are scaled to [0, 1].
Frame read_image(const fs::path& path);

/// Binary 8-bit PGM; each value is clamped to [0, 1] and rounded to v * 255.
void write_pgm(const fs::path& path, const Frame& frame);

/// Extensions read_image can decode in this build (lower case, with the dot).
bool is_image_file(const fs::path& path);

// ---- datasets ----------------------------------------------------------------

/// One ground-truth line in OTB's 1-based convention; separators may be
/// commas, tabs or spaces in any mix. Returns the 0-based rect.
Rect parse_ground_truth_line(std::string_view line);
/// Non-blank lines of a ground-truth file.
std::vector<Rect> parse_ground_truth(std::istream& in);

/// Ground-truth file of a sequence directory: groundtruth_rect.txt, else
/// groundtruth.txt. Empty path when neither exists.
fs::path ground_truth_file(const fs::path& sequence_dir);

/// Sequence directory: image subdirectory "img" (or the only subdirectory
/// holding images) plus a ground-truth file. Frames are taken in
/// lexicographic order of their file names.
Sequence load_sequence(const fs::path& sequence_dir);

/// Writes img/0001.pgm ... and groundtruth_rect.txt (1-based, 6 decimals).
void save_sequence(const Sequence& sequence, const fs::path& sequence_dir);

/// Subdirectories holding a ground-truth file, sorted by name.
std::vector<fs::path> list_sequences(const fs::path& dataset_dir);

// ---- configuration -----------------------------------------------------------

/// Keys are the TrackerConfig field names; ScaleConfig fields carry a
/// "scale." prefix. Absent keys keep their defaults; unknown keys, repeated
/// keys and malformed values throw ContractViolation naming the line.
TrackerConfig parse_config(std::istream& in, const std::string& source = "<config>");
TrackerConfig load_config(const fs::path& path);
/// Every key with its current value; parse_config reads it back unchanged.
std::string format_config(const TrackerConfig& config);
std::vector<std::string> config_keys();

// ---- results -------------------------------------------------------------------

struct ResultsFile {
  std::vector<Rect> rects;
  std::map<std::string, double> metrics;  // empty: no metrics block
};

/// One "x,y,w,h" line per rect with 6 decimals, then "#metrics" and one
/// "key=value" line per metric when there are any.
std::string format_results(const ResultsFile& results);
ResultsFile parse_results(std::istream& in, const std::string& source = "<results>");
void save_results(const fs::path& path, const ResultsFile& results);
ResultsFile load_results(const fs::path& path);

/// precision20, auc, updates and both curves ("precision@T", "success@T").
/// Timing is left out so the file depends only on the inputs.
std::map<std::string, double> summary_metrics(const OpeSummary& summary);
/// Rebuilds a curve stored by summary_metrics; prefix is "precision" or "success".
Curve curve_from_metrics(const std::map<std::string, double>& metrics, std::string_view prefix);

// ---- plots ---------------------------------------------------------------------

struct PlotSeries {
  std::string label;
  Curve curve;
};

/// One panel per call: axes 0..max threshold by 0..1, one polyline per series,
/// legend entries carry the given labels.
std::string render_plot(const std::vector<PlotSeries>& series, const std::string& title,
                        const std::string& x_label);
/// Precision panel above success panel; labels get "[p@20 ...]" and "[auc ...]".
std::string render_ope_plot(const std::vector<std::string>& names,
                            const std::vector<Curve>& precision, const std::vector<Curve>& success);
void emit_plot(const fs::path& path, const std::string& svg);

// ---- weights -------------------------------------------------------------------

/// JSON with the extractor kind, both extractor stacks and both head stacks.
void save_weights(const fs::path& path, const PretrainedModel& model);
PretrainedModel load_weights(const fs::path& path);

// ---- throughput ----------------------------------------------------------------

struct BenchReport {
  int frames_tracked = 0;
  double tracked_seconds = 0.0;
  double mean_fps = 0.0;    // frames_tracked / tracked_seconds
  double median_fps = 0.0;  // 1 / median per-frame time
  double init_seconds = 0.0;
  StageTimes stage_means;   // seconds per tracked frame
  double frame_mean = 0.0;  // seconds per tracked frame, all stages plus overhead
};

/// ope_run on a synthetic translate sequence of n_frames frames.
BenchReport run_bench(const TrackerConfig& config, int n_frames, std::uint64_t seed = 7);
std::string format_bench(const BenchReport& report);

// ---- evaluation ----------------------------------------------------------------

struct EvalEntry {
  std::string name;
  OpeSummary summary;
};

/// ope_run over every sequence of a dataset, jobs sequences at a time. The
/// entries come back in list_sequences order whatever jobs is.
std::vector<EvalEntry> evaluate_dataset(const fs::path& dataset_dir, const TrackerConfig& config,
                                        int jobs, const PretrainedModel* pretrained = nullptr);
/// Per-sequence precision@20, AUC and update count plus their means; no timing.
std::string format_eval_report(const std::vector<EvalEntry>& entries);

// ---- command line --------------------------------------------------------------

/// track / eval / synth / pretrain / bench / plot. Returns the exit status;
/// failures print one line to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace convtrack
