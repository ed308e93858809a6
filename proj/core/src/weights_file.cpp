#include <fstream>

#include "json.hpp"

#include "convtrack/apprunner.hpp"

namespace convtrack {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "convtrack-weights";
constexpr int kVersion = 1;

json stack_to_json(const FilterStack& f) {
  return {{"shape", {f.out_channels(), f.in_channels(), f.kernel_h(), f.kernel_w()}},
          {"weights", std::vector<double>(f.weights().begin(), f.weights().end())},
          {"bias", std::vector<double>(f.bias().begin(), f.bias().end())}};
}

FilterStack stack_from_json(const json& j, const std::string& what) {
  const auto shape = j.at("shape").get<std::vector<int>>();
  require(shape.size() == 4, what + ": shape needs four entries");
  FilterStack f(shape[0], shape[1], shape[2], shape[3]);
  const auto w = j.at("weights").get<std::vector<double>>();
  const auto b = j.at("bias").get<std::vector<double>>();
  require(w.size() == f.weights().size(), what + ": weight count does not match the shape");
  require(b.size() == f.bias().size(), what + ": bias count does not match the shape");
  std::copy(w.begin(), w.end(), f.weights().begin());
  std::copy(b.begin(), b.end(), f.bias().begin());
  return f;
}

}  // namespace

void save_weights(const fs::path& path, const PretrainedModel& model) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["extractor"]["kind"] = std::string(to_string(model.extractor.kind));
  if (model.extractor.kind == ExtractorKind::tinycnn) {
    doc["extractor"]["conv1"] = stack_to_json(model.extractor.conv1);
    doc["extractor"]["conv2"] = stack_to_json(model.extractor.conv2);
  }
  doc["head"]["layer1"] = stack_to_json(model.head.layer1);
  doc["head"]["layer2"] = stack_to_json(model.head.layer2);
  doc["epoch_losses"] = model.epoch_losses;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights '" + path.string() + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("cannot write weights '" + path.string() + "'");
}

PretrainedModel load_weights(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read weights '" + path.string() + "'");
  const std::string where = "weights '" + path.string() + "'";
  try {
    const json doc = json::parse(in);
    require(doc.at("format").get<std::string>() == kFormat, where + ": not a weights file");
    require(doc.at("version").get<int>() == kVersion, where + ": unsupported version");
    PretrainedModel model;
    const auto kind = parse_extractor_kind(doc.at("extractor").at("kind").get<std::string>());
    switch (kind) {
      case ExtractorKind::gray: model.extractor = Extractor::gray(); break;
      case ExtractorKind::grad: model.extractor = Extractor::grad(); break;
      case ExtractorKind::tinycnn:
        model.extractor.kind = ExtractorKind::tinycnn;
        model.extractor.conv1 = stack_from_json(doc["extractor"].at("conv1"), where + " conv1");
        model.extractor.conv2 = stack_from_json(doc["extractor"].at("conv2"), where + " conv2");
        require(model.extractor.conv2.in_channels() == model.extractor.conv1.out_channels(),
                where + ": extractor layers do not chain");
        break;
    }
    model.head.layer1 = stack_from_json(doc.at("head").at("layer1"), where + " layer1");
    model.head.layer2 = stack_from_json(doc.at("head").at("layer2"), where + " layer2");
    require(model.head.layer2.in_channels() == model.head.layer1.out_channels() &&
                model.head.layer2.out_channels() == 1,
            where + ": head layers do not chain");
    if (doc.contains("epoch_losses"))
      model.epoch_losses = doc["epoch_losses"].get<std::vector<double>>();
    return model;
  } catch (const json::exception& e) {
    throw IoError(where + ": " + e.what());
  }
}

}  // namespace convtrack
