#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>

#include "convtrack/apprunner.hpp"

namespace convtrack {

std::vector<EvalEntry> evaluate_dataset(const fs::path& dataset_dir, const TrackerConfig& config,
                                        int jobs, const PretrainedModel* pretrained) {
  require(jobs >= 1, "evaluate_dataset: jobs must be at least 1");
  const auto dirs = list_sequences(dataset_dir);
  if (dirs.empty()) throw IoError("dataset '" + dataset_dir.string() + "' holds no sequences");

  std::vector<EvalEntry> entries(dirs.size());
  std::vector<std::exception_ptr> failures(dirs.size());
  std::atomic<std::size_t> next{0};
  // Each worker owns whole sequences; results land in their list slot.
  auto work = [&] {
    for (std::size_t k = next++; k < dirs.size(); k = next++) {
      try {
        const Sequence seq = load_sequence(dirs[k]);
        entries[k].name = seq.name;
        entries[k].summary = ope_run(config, seq, pretrained).summary;
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  const int workers = std::min<int>(jobs, static_cast<int>(dirs.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return entries;
}

std::string format_eval_report(const std::vector<EvalEntry>& entries) {
  std::string out = "# sequence precision20 auc updates\n";
  double p = 0.0;
  double a = 0.0;
  char buf[256];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%s %.6f %.6f %d\n", e.name.c_str(), e.summary.precision20,
                  e.summary.auc, e.summary.updates);
    out += buf;
    p += e.summary.precision20;
    a += e.summary.auc;
  }
  if (!entries.empty()) {
    const double n = static_cast<double>(entries.size());
    std::snprintf(buf, sizeof buf, "mean %.6f %.6f\n", p / n, a / n);
    out += buf;
  }
  return out;
}

}  // namespace convtrack
