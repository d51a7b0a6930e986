#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "prevent/world/world.hpp"

namespace prevent::sensors {

using Rng = std::mt19937_64;
using world::Chemical;
using world::Containment;

enum class ErrorCode { DimensionMismatch, InvalidArgument, LoadError };

class SensorError : public std::runtime_error {
 public:
  SensorError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct LabelScore {
  std::string label;
  double score = 0.0;
  friend bool operator==(const LabelScore&, const LabelScore&) = default;
};

/// One joint observation. x3 is filled only when a classifier was consulted.
struct ModalityFrame {
  int x1 = 0;
  int x2 = 0;
  std::optional<LabelScore> x3;
  double quality = 1.0;
  double timestamp = 0.0;
};

class LabelSet {
 public:
  LabelSet(std::vector<std::string> labels, std::set<std::string> safe);

  /// Hazard classes of the shipped classifier surrogate.
  static const LabelSet& standard();

  const std::vector<std::string>& labels() const { return labels_; }
  bool contains(const std::string& l) const;
  bool is_safe(const std::string& l) const { return safe_.count(l) != 0; }
  bool is_unsafe(const std::string& l) const { return contains(l) && !is_safe(l); }

 private:
  std::vector<std::string> labels_;
  std::set<std::string> safe_;
};

struct VisionBinaryModel {
  double accuracy = 1.0;
  double range = 0.7;        // metres ahead of the navigation camera
  double half_width = 0.35;  // lateral half-width of the floor patch
  double min_quality = 0.3;
  double blur_probability = 0.02;
  double quality_alpha = 8.0;  // Beta shape of usable frames
  double quality_beta = 2.0;
};

struct VisionSample {
  int x1 = 0;
  double quality = 1.0;
  bool truth = false;
  bool resampled = false;
};

enum class ClassifierMode { ZeroShot, FineTuned };

struct ClassifierModel {
  ClassifierMode mode = ClassifierMode::FineTuned;
  double accuracy = 1.0;
};

struct OlfactoryModel {
  std::array<double, 3> base_emission{80.0, 50.0, 20.0};  // acetone, ethanol, isopropanol
  std::array<double, 3> containment{0.05, 0.4, 1.0};      // sealed, unsealed, spilled
  double noise_std = 0.5;
  double latency = 1.5;  // seconds for a new source to reach full strength

  double emission(Chemical c) const { return base_emission[static_cast<int>(c)]; }
  double factor(Containment c) const { return containment[static_cast<int>(c)]; }
};

double quality_sample(const VisionBinaryModel& m, Rng& rng);

/// Applies the accuracy flip to a known ground truth.
VisionSample sample_vision_binary(bool truth, const VisionBinaryModel& m, Rng& rng);
/// Ground truth is any visible hazard within range ahead of the robot.
VisionSample sample_vision_binary(const world::World& w, const VisionBinaryModel& m, Rng& rng);
bool vision_ground_truth(const world::World& w, const VisionBinaryModel& m);

LabelScore sample_classifier(const std::string& truth, const ClassifierModel& m,
                             const LabelSet& labels, Rng& rng);

/// Noise-free reading at `where`, before rounding.
double expected_voc(const world::World& w, world::Vec2 where, const OlfactoryModel& m);
double expected_voc(const world::Hazard& h, world::Vec2 where, double now, const OlfactoryModel& m);
/// round(expected + noise), clamped at zero.
int sample_voc(const world::World& w, world::Vec2 where, const OlfactoryModel& m, Rng& rng);
int noisy_reading(double expected, const OlfactoryModel& m, Rng& rng);

/// Grand mean of sealed-container readings. `readings` holds c*t values.
double compute_t_safe(const std::vector<double>& readings, int c, int t);
double compute_t_safe(const std::map<Chemical, std::vector<double>>& per_chemical);

struct CalibrationData {
  std::map<Chemical, std::vector<double>> sealed;
  std::map<Chemical, std::vector<double>> unsealed;
  std::map<Chemical, std::vector<double>> spilled;
};

CalibrationData load_calibration(const std::filesystem::path& file);
/// <data_dir>/calibration/voc_calibration.json
CalibrationData load_default_calibration();

/// Keys look like "table1.resnet18_ft.T1".
std::map<std::string, double> load_model_parameters(const std::filesystem::path& file);
std::map<std::string, double> load_default_model_parameters();

}  // namespace prevent::sensors
