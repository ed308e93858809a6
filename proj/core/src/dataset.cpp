#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "convtrack/apprunner.hpp"

namespace convtrack {

namespace {

bool is_separator(char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r' || c == ';'; }

double parse_number(std::string_view token, std::string_view line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  require(ec == std::errc() && ptr == token.data() + token.size(),
          "ground truth: bad number '" + std::string(token) + "' in line '" + std::string(line) + "'");
  return v;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return is_separator(c) || c == '\n'; });
}

}  // namespace

Rect parse_ground_truth_line(std::string_view line) {
  std::vector<double> values;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_separator(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_separator(line[j])) ++j;
    if (j > i) values.push_back(parse_number(line.substr(i, j - i), line));
    i = j;
  }
  require(values.size() == 4,
          "ground truth: expected 4 values, got " + std::to_string(values.size()) + " in line '" +
              std::string(line) + "'");
  return {values[0] - 1.0, values[1] - 1.0, values[2], values[3]};
}

std::vector<Rect> parse_ground_truth(std::istream& in) {
  std::vector<Rect> rects;
  std::string line;
  while (std::getline(in, line))
    if (!blank(line)) rects.push_back(parse_ground_truth_line(line));
  return rects;
}

fs::path ground_truth_file(const fs::path& sequence_dir) {
  for (const char* name : {"groundtruth_rect.txt", "groundtruth.txt"}) {
    const fs::path p = sequence_dir / name;
    if (fs::is_regular_file(p)) return p;
  }
  return {};
}

namespace {

std::vector<fs::path> image_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

fs::path image_directory(const fs::path& sequence_dir) {
  if (fs::is_directory(sequence_dir / "img")) return sequence_dir / "img";
  fs::path found;
  for (const auto& entry : fs::directory_iterator(sequence_dir)) {
    if (!entry.is_directory() || image_files(entry.path()).empty()) continue;
    if (!found.empty())
      throw IoError("sequence '" + sequence_dir.string() +
                    "': several image directories and none named img");
    found = entry.path();
  }
  if (found.empty()) throw IoError("sequence '" + sequence_dir.string() + "': no image directory");
  return found;
}

}  // namespace

Sequence load_sequence(const fs::path& sequence_dir) {
  if (!fs::is_directory(sequence_dir))
    throw IoError("sequence '" + sequence_dir.string() + "' is not a directory");
  const fs::path gt_path = ground_truth_file(sequence_dir);
  if (gt_path.empty()) throw IoError("sequence '" + sequence_dir.string() + "': no ground-truth file");

  Sequence seq;
  seq.name = sequence_dir.filename().string();
  if (seq.name.empty()) seq.name = sequence_dir.parent_path().filename().string();
  {
    std::ifstream in(gt_path);
    if (!in) throw IoError("cannot read '" + gt_path.string() + "'");
    try {
      seq.ground_truth = parse_ground_truth(in);
    } catch (const ContractViolation& e) {
      throw IoError(gt_path.string() + ": " + e.what());
    }
  }
  const auto files = image_files(image_directory(sequence_dir));
  if (files.size() != seq.ground_truth.size())
    throw IoError("sequence '" + sequence_dir.string() + "': " + std::to_string(files.size()) +
                  " frames but " + std::to_string(seq.ground_truth.size()) + " ground-truth lines");
  seq.frames.reserve(files.size());
  for (const auto& f : files) seq.frames.push_back(read_image(f));
  return seq;
}

void save_sequence(const Sequence& sequence, const fs::path& sequence_dir) {
  sequence.validate();
  const fs::path img = sequence_dir / "img";
  std::error_code ec;
  fs::create_directories(img, ec);
  if (ec) throw IoError("cannot create '" + img.string() + "': " + ec.message());
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.pgm", k + 1);
    write_pgm(img / name, sequence.frames[k]);
  }
  const fs::path gt = sequence_dir / "groundtruth_rect.txt";
  std::ofstream out(gt);
  if (!out) throw IoError("cannot write '" + gt.string() + "'");
  for (const Rect& r : sequence.ground_truth) {
    char line[160];
    std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f,%.6f\n", r.x + 1.0, r.y + 1.0, r.w, r.h);
    out << line;
  }
  if (!out) throw IoError("cannot write '" + gt.string() + "'");
}

std::vector<fs::path> list_sequences(const fs::path& dataset_dir) {
  if (!fs::is_directory(dataset_dir))
    throw IoError("dataset '" + dataset_dir.string() + "' is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(dataset_dir))
    if (entry.is_directory() && !ground_truth_file(entry.path()).empty()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace convtrack
