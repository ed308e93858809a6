#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <type_traits>

#include "convtrack/apprunner.hpp"

namespace convtrack {

namespace {

struct Key {
  std::string name;
  std::function<std::string(const TrackerConfig&)> get;
  std::function<void(TrackerConfig&, std::string_view)> set;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_integer(std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ContractViolation("expected an integer, got '" + std::string(text) + "'");
  return v;
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ContractViolation("expected a number, got '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ContractViolation("expected true or false, got '" + std::string(text) + "'");
}

template <class T>
Key field(std::string name, T TrackerConfig::*member) {
  Key k;
  k.name = std::move(name);
  if constexpr (std::is_same_v<T, double>) {
    k.get = [member](const TrackerConfig& c) { return format_double(c.*member); };
    k.set = [member](TrackerConfig& c, std::string_view v) { c.*member = parse_double(v); };
  } else if constexpr (std::is_same_v<T, bool>) {
    k.get = [member](const TrackerConfig& c) { return std::string(c.*member ? "true" : "false"); };
    k.set = [member](TrackerConfig& c, std::string_view v) { c.*member = parse_bool(v); };
  } else if constexpr (std::is_same_v<T, ExtractorKind>) {
    k.get = [member](const TrackerConfig& c) { return std::string(to_string(c.*member)); };
    k.set = [member](TrackerConfig& c, std::string_view v) { c.*member = parse_extractor_kind(v); };
  } else {
    k.get = [member](const TrackerConfig& c) { return std::to_string(c.*member); };
    k.set = [member](TrackerConfig& c, std::string_view v) { c.*member = parse_integer<T>(v); };
  }
  return k;
}

template <class T>
Key scale_field(std::string name, T ScaleConfig::*member) {
  Key k;
  k.name = "scale." + name;
  if constexpr (std::is_same_v<T, double>) {
    k.get = [member](const TrackerConfig& c) { return format_double(c.scale.*member); };
    k.set = [member](TrackerConfig& c, std::string_view v) { c.scale.*member = parse_double(v); };
  } else {
    k.get = [member](const TrackerConfig& c) { return std::to_string(c.scale.*member); };
    k.set = [member](TrackerConfig& c, std::string_view v) { c.scale.*member = parse_integer<T>(v); };
  }
  return k;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      field("patch_size", &TrackerConfig::patch_size),
      field("padding", &TrackerConfig::padding),
      field("sigma_factor", &TrackerConfig::sigma_factor),
      field("features", &TrackerConfig::features),
      field("hidden_channels", &TrackerConfig::hidden_channels),
      field("head_kernel", &TrackerConfig::head_kernel),
      field("head_init_std", &TrackerConfig::head_init_std),
      field("hidden_init_std", &TrackerConfig::hidden_init_std),
      field("seed", &TrackerConfig::seed),
      field("first_frame_steps", &TrackerConfig::first_frame_steps),
      field("lr_first", &TrackerConfig::lr_first),
      field("lr_update", &TrackerConfig::lr_update),
      field("momentum", &TrackerConfig::momentum),
      field("weight_decay_first", &TrackerConfig::weight_decay_first),
      field("weight_decay_update", &TrackerConfig::weight_decay_update),
      field("tinycnn_hidden", &TrackerConfig::tinycnn_hidden),
      field("tinycnn_channels", &TrackerConfig::tinycnn_channels),
      field("tinycnn_kernel", &TrackerConfig::tinycnn_kernel),
      field("tinycnn_init_std", &TrackerConfig::tinycnn_init_std),
      field("pnr_cap", &TrackerConfig::pnr_cap),
      field("epsilon", &TrackerConfig::epsilon),
      field("scale_enabled", &TrackerConfig::scale_enabled),
      field("scale_every_frame", &TrackerConfig::scale_every_frame),
      field("history_all_frames", &TrackerConfig::history_all_frames),
      scale_field("count", &ScaleConfig::count),
      scale_field("step", &ScaleConfig::step),
      scale_field("descriptor_dim", &ScaleConfig::descriptor_dim),
      scale_field("template_size", &ScaleConfig::template_size),
      scale_field("learning_rate", &ScaleConfig::learning_rate),
      scale_field("momentum", &ScaleConfig::momentum),
      scale_field("weight_decay", &ScaleConfig::weight_decay),
      scale_field("sigma_cells", &ScaleConfig::sigma_cells),
      scale_field("train_radius", &ScaleConfig::train_radius),
      scale_field("init_steps", &ScaleConfig::init_steps),
  };
  return table;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> names;
  for (const Key& k : keys()) names.push_back(k.name);
  return names;
}

TrackerConfig parse_config(std::istream& in, const std::string& source) {
  TrackerConfig config;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ContractViolation(where + "expected 'key = value'");
    const std::string_view name = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = std::find_if(keys().begin(), keys().end(),
                                 [&](const Key& k) { return k.name == name; });
    if (it == keys().end()) throw ContractViolation(where + "unknown key '" + std::string(name) + "'");
    if (!seen.insert(std::string(name)).second)
      throw ContractViolation(where + "repeated key '" + std::string(name) + "'");
    try {
      it->set(config, value);
    } catch (const ContractViolation& e) {
      throw ContractViolation(where + std::string(name) + ": " + e.what());
    }
  }
  try {
    config.validate();
  } catch (const ContractViolation& e) {
    throw ContractViolation(source + ": " + e.what());
  }
  return config;
}

TrackerConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  return parse_config(in, path.string());
}

std::string format_config(const TrackerConfig& config) {
  std::string out;
  for (const Key& k : keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace convtrack
