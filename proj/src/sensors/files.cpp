#include <fstream>

#include "json.hpp"
#include "prevent/sensors/sensors.hpp"
#include "prevent/world/scenario.hpp"

namespace prevent::sensors {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SensorError(ErrorCode::LoadError, "cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SensorError(ErrorCode::LoadError, file.string() + ": " + e.what());
  }
}

std::map<Chemical, std::vector<double>> readings(const json& j, const char* group) {
  std::map<Chemical, std::vector<double>> out;
  auto it = j.find(group);
  if (it == j.end()) return out;
  for (const auto& [name, values] : it->items()) {
    auto c = world::chemical_from_string(name);
    if (!c) throw SensorError(ErrorCode::LoadError, "unknown chemical '" + name + "'");
    out[*c] = values.get<std::vector<double>>();
  }
  return out;
}

}  // namespace

CalibrationData load_calibration(const std::filesystem::path& file) {
  json j = read_json(file);
  if (j.value("format", "") != "voc_calibration 1") {
    throw SensorError(ErrorCode::LoadError, file.string() + ": expected format 'voc_calibration 1'");
  }
  try {
    return {readings(j, "sealed"), readings(j, "unsealed"), readings(j, "spilled")};
  } catch (const json::exception& e) {
    throw SensorError(ErrorCode::LoadError, file.string() + ": " + e.what());
  }
}

CalibrationData load_default_calibration() {
  return load_calibration(world::data_dir() / "calibration" / "voc_calibration.json");
}

std::map<std::string, double> load_model_parameters(const std::filesystem::path& file) {
  json j = read_json(file);
  std::map<std::string, double> out;
  try {
    for (const auto& [key, value] : j.at("parameters").items()) out[key] = value.get<double>();
  } catch (const json::exception& e) {
    throw SensorError(ErrorCode::LoadError, file.string() + ": " + e.what());
  }
  return out;
}

std::map<std::string, double> load_default_model_parameters() {
  return load_model_parameters(world::data_dir() / "models" / "table1.json");
}

}  // namespace prevent::sensors
