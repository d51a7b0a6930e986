#include "prevent/sensors/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace prevent::sensors {

LabelSet::LabelSet(std::vector<std::string> labels, std::set<std::string> safe)
    : labels_(std::move(labels)), safe_(std::move(safe)) {
  for (const auto& s : safe_) {
    if (!contains(s)) {
      throw SensorError(ErrorCode::InvalidArgument, "safe label '" + s + "' not in label set");
    }
  }
  if (!is_safe("no_problem_detected")) {
    throw SensorError(ErrorCode::InvalidArgument, "no_problem_detected must be a safe label");
  }
}

const LabelSet& LabelSet::standard() {
  static const LabelSet set(
      {"no_problem_detected", "foreign_object_off_path", "spillage", "capping_failure",
       "obstruction", "broken_glass", "contaminated_glove", "foreign_object"},
      {"no_problem_detected", "foreign_object_off_path"});
  return set;
}

bool LabelSet::contains(const std::string& l) const {
  return std::find(labels_.begin(), labels_.end(), l) != labels_.end();
}

double quality_sample(const VisionBinaryModel& m, Rng& rng) {
  if (std::bernoulli_distribution(m.blur_probability)(rng)) {
    return std::uniform_real_distribution<double>(0.0, m.min_quality)(rng);
  }
  std::gamma_distribution<double> ga(m.quality_alpha, 1.0), gb(m.quality_beta, 1.0);
  double a = ga(rng), b = gb(rng);
  return a / (a + b);
}

VisionSample sample_vision_binary(bool truth, const VisionBinaryModel& m, Rng& rng) {
  VisionSample s;
  s.truth = truth;
  s.quality = quality_sample(m, rng);
  if (s.quality < m.min_quality) {
    s.resampled = true;
    s.quality = quality_sample(m, rng);
  }
  bool correct = std::bernoulli_distribution(m.accuracy)(rng);
  s.x1 = (truth == correct) ? 1 : 0;
  return s;
}

bool vision_ground_truth(const world::World& w, const VisionBinaryModel& m) {
  return !w.query(w.ahead_region(m.range, m.half_width), true).empty();
}

VisionSample sample_vision_binary(const world::World& w, const VisionBinaryModel& m, Rng& rng) {
  return sample_vision_binary(vision_ground_truth(w, m), m, rng);
}

LabelScore sample_classifier(const std::string& truth, const ClassifierModel& m,
                             const LabelSet& labels, Rng& rng) {
  if (!labels.contains(truth)) {
    throw SensorError(ErrorCode::InvalidArgument, "ground-truth label '" + truth + "' not in L");
  }
  if (std::bernoulli_distribution(m.accuracy)(rng)) {
    return {truth, std::uniform_real_distribution<double>(0.5, 1.0)(rng)};
  }
  std::vector<const std::string*> wrong;
  for (const auto& l : labels.labels()) {
    if (l != truth) wrong.push_back(&l);
  }
  const auto& pick = *wrong[std::uniform_int_distribution<std::size_t>(0, wrong.size() - 1)(rng)];
  return {pick, std::uniform_real_distribution<double>(0.0, 0.5)(rng)};
}

double expected_voc(const world::Hazard& h, world::Vec2 where, double now, const OlfactoryModel& m) {
  if (!h.active() || !h.chemical) return 0.0;
  double d = world::distance(h.position, where);
  double value = m.emission(*h.chemical) * m.factor(h.containment) * h.emission_scale / (1.0 + d * d);
  // Sources present at the start have been emitting long before the run.
  if (h.appears_at > 0.0 && m.latency > 0.0) {
    value *= std::clamp((now - h.appears_at) / m.latency, 0.0, 1.0);
  }
  return value;
}

double expected_voc(const world::World& w, world::Vec2 where, const OlfactoryModel& m) {
  double total = 0.0;
  for (const auto& h : w.hazards()) total += expected_voc(h, where, w.now(), m);
  return total;
}

int noisy_reading(double expected, const OlfactoryModel& m, Rng& rng) {
  double noise = m.noise_std > 0.0 ? std::normal_distribution<double>(0.0, m.noise_std)(rng) : 0.0;
  return std::max(0, static_cast<int>(std::lround(expected + noise)));
}

int sample_voc(const world::World& w, world::Vec2 where, const OlfactoryModel& m, Rng& rng) {
  return noisy_reading(expected_voc(w, where, m), m, rng);
}

double compute_t_safe(const std::vector<double>& readings, int c, int t) {
  if (c < 1 || t < 1) throw SensorError(ErrorCode::InvalidArgument, "c and t must be >= 1");
  if (readings.size() != static_cast<std::size_t>(c) * static_cast<std::size_t>(t)) {
    throw SensorError(ErrorCode::DimensionMismatch,
                      "expected " + std::to_string(c * t) + " readings, got " +
                          std::to_string(readings.size()));
  }
  for (double r : readings) {
    if (!(r >= 0.0)) throw SensorError(ErrorCode::InvalidArgument, "readings must be >= 0");
  }
  // Sorting makes the floating-point sum independent of input order.
  std::vector<double> sorted = readings;
  std::sort(sorted.begin(), sorted.end());
  double sum = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  return sum / (static_cast<double>(c) * static_cast<double>(t));
}

double compute_t_safe(const std::map<Chemical, std::vector<double>>& per_chemical) {
  if (per_chemical.empty()) throw SensorError(ErrorCode::InvalidArgument, "no chemicals");
  const std::size_t t = per_chemical.begin()->second.size();
  std::vector<double> all;
  for (const auto& [c, v] : per_chemical) {
    if (v.size() != t) {
      throw SensorError(ErrorCode::DimensionMismatch, "chemicals have different trial counts");
    }
    all.insert(all.end(), v.begin(), v.end());
  }
  return compute_t_safe(all, static_cast<int>(per_chemical.size()), static_cast<int>(t));
}

}  // namespace prevent::sensors
