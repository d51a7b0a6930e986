#include <algorithm>
#include <cmath>
#include <limits>

#include "prevent/skills/skills.hpp"

namespace prevent::skills {

std::string_view to_string(Skill s) { return s == Skill::CIN ? "cin" : "ibm"; }
std::string_view to_string(Mode m) { return m == Mode::Skilled ? "skilled" : "nse"; }

std::optional<Skill> skill_from_string(std::string_view s) {
  if (s == "cin" || s == "CIN") return Skill::CIN;
  if (s == "ibm" || s == "IBM") return Skill::IBM;
  return std::nullopt;
}

std::optional<Mode> mode_from_string(std::string_view s) {
  if (s == "skilled") return Mode::Skilled;
  if (s == "nse" || s == "NSE") return Mode::NSE;
  return std::nullopt;
}

std::optional<ModalityConfig> ModalityConfig::from_name(std::string_view name) {
  if (name == "multi" || name == "multi-modal") return multi_modal();
  ModalityConfig c{false, false, false, false};
  std::size_t start = 0;
  while (start <= name.size()) {
    auto end = name.find('+', start);
    auto part = name.substr(start, end == std::string_view::npos ? name.npos : end - start);
    if (part == "vision") {
      c.vision = true;
    } else if (part == "voc") {
      c.voc = true;
    } else if (part == "vlm") {
      c.vlm = true;
    } else {
      return std::nullopt;
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return c;
}

std::string ModalityConfig::name() const {
  if (hierarchical) return "multi";
  std::string out;
  auto add = [&](bool on, const char* n) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += n;
  };
  add(vision, "vision");
  add(voc, "voc");
  add(vlm, "vlm");
  return out;
}

PerceptionModels models_for_task(const std::string& task,
                                 const std::map<std::string, double>& parameters) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = parameters.find(key);
    return it == parameters.end() ? fallback : it->second;
  };
  PerceptionModels m;
  m.nav_vision.accuracy = get("table1.resnet18_ft.T1", m.nav_vision.accuracy);
  m.cin_classifier.accuracy = get("table1.vit_l14_ft.T1", m.cin_classifier.accuracy);
  const std::string station_task = task == "T3" ? "T3" : "T2";
  m.station_vision.accuracy = get("table1.resnet18_ft." + station_task, m.station_vision.accuracy);
  m.ibm_classifier.accuracy = get("table1.vit_l14_ft." + station_task, m.ibm_classifier.accuracy);
  return m;
}

std::string_view to_string(SampleRecord::Kind k) {
  switch (k) {
    case SampleRecord::Kind::Vision:
      return "vision";
    case SampleRecord::Kind::Voc:
      return "voc";
    case SampleRecord::Kind::Classifier:
      return "classifier";
    case SampleRecord::Kind::Vlm:
      return "vlm";
    case SampleRecord::Kind::StationVision:
      return "station_vision";
    case SampleRecord::Kind::MidVoc:
      return "mid_voc";
  }
  return "vision";
}

namespace {

// Window in which the single clear-scene error of a navigation run can fall.
constexpr double kSpuriousWindow = 130.0;

const world::Hazard* nearest(const std::vector<const world::Hazard*>& hs, world::Vec2 from) {
  const world::Hazard* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto* h : hs) {
    double d = world::distance(h->position, from);
    if (d < best_d) {
      best_d = d;
      best = h;
    }
  }
  return best;
}

}  // namespace

Perception::Perception(SkillConfig config, std::uint64_t seed, bool deterministic)
    : config_(std::move(config)), rng_(seed), deterministic_(deterministic) {
  if (deterministic_) return;
  const auto& m = config_.models;
  if (std::bernoulli_distribution(1.0 - m.nav_vision.accuracy)(rng_)) {
    spurious_nav_at_ = std::uniform_real_distribution<double>(0.0, kSpuriousWindow)(rng_);
  }
  spurious_station_ = std::bernoulli_distribution(1.0 - m.station_vision.accuracy)(rng_);
}

int Perception::nav_vision(const world::World& w) {
  const auto& m = config_.models.nav_vision;
  const bool truth = sensors::vision_ground_truth(w, m);
  int x1 = truth ? 1 : 0;
  if (!deterministic_) {
    sensors::quality_sample(m, rng_);
    if (truth) {
      x1 = std::bernoulli_distribution(m.accuracy)(rng_) ? 1 : 0;
    } else if (spurious_nav_at_ && w.now() >= *spurious_nav_at_) {
      spurious_nav_at_.reset();
      x1 = 1;
    }
  }
  log_.push_back({SampleRecord::Kind::Vision, w.now(), double(x1), {}});
  return x1;
}

int Perception::station_vision(const world::World& w, const world::Station& s) {
  const auto& m = config_.models.station_vision;
  const bool truth = !w.query(w.inspection_zone(s), true).empty();
  int x1 = truth ? 1 : 0;
  if (!deterministic_) {
    if (truth) {
      x1 = 0;
      for (int i = 0; i < config_.timing.vision_frames; ++i) {
        if (std::bernoulli_distribution(m.accuracy)(rng_)) x1 = 1;
      }
    } else if (spurious_station_) {
      spurious_station_ = false;
      x1 = 1;
    }
  }
  log_.push_back({SampleRecord::Kind::StationVision, w.now(), double(x1), {}});
  return x1;
}

int Perception::voc(const world::World& w, world::Vec2 where, SampleRecord::Kind kind) {
  const auto& m = config_.models.olfactory;
  const double expected = sensors::expected_voc(w, where, m);
  int x2 = deterministic_ ? std::max(0, static_cast<int>(std::lround(expected)))
                          : sensors::noisy_reading(expected, m, rng_);
  log_.push_back({kind, w.now(), double(x2), {}});
  return x2;
}

sensors::LabelScore Perception::classify(const world::World& w, const std::string& truth, bool ibm) {
  sensors::LabelScore out{truth, 1.0};
  if (!deterministic_) {
    const auto& m = ibm ? config_.models.ibm_classifier : config_.models.cin_classifier;
    out = sensors::sample_classifier(truth, m, *config_.labels, rng_);
  }
  log_.push_back({SampleRecord::Kind::Classifier, w.now(),
                  config_.labels->is_safe(out.label) ? 1.0 : 0.0, out.label});
  return out;
}

sensors::LabelScore Perception::vote(const world::World& w, const std::string& truth, bool ibm) {
  std::vector<sensors::LabelScore> looks;
  int safe = 0;
  for (int i = 0; i < config_.timing.classify_looks; ++i) {
    looks.push_back(classify(w, truth, ibm));
    safe += config_.labels->is_safe(looks.back().label) ? 1 : 0;
  }
  const bool majority_safe = 2 * safe > static_cast<int>(looks.size());
  for (const auto& l : looks) {
    if (config_.labels->is_safe(l.label) == majority_safe) return l;
  }
  return looks.front();
}

std::optional<sensors::LabelScore> Perception::vlm_nav(const world::World& w) {
  const auto& t = config_.timing;
  if (w.now() + 1e-9 >= next_vlm_capture_) {
    const auto& m = config_.models.nav_vision;
    std::string truth = visible_truth(w, w.ahead_region(m.range, m.half_width));
    sensors::LabelScore r{truth, 1.0};
    if (!deterministic_) {
      r = sensors::sample_classifier(truth, config_.models.cin_classifier, *config_.labels, rng_);
    }
    vlm_queue_.push_back({w.now() + t.vlm_latency, r});
    while (next_vlm_capture_ <= w.now() + 1e-9) next_vlm_capture_ += t.vlm_cycle;
  }
  if (!vlm_queue_.empty() && vlm_queue_.front().ready_at <= w.now() + 1e-9) {
    auto r = vlm_queue_.front().result;
    vlm_queue_.pop_front();
    log_.push_back({SampleRecord::Kind::Vlm, w.now(), config_.labels->is_safe(r.label) ? 1.0 : 0.0,
                    r.label});
    return r;
  }
  return std::nullopt;
}

sensors::LabelScore Perception::vlm_station(const world::World& w, const world::Station& s) {
  std::string truth = visible_truth(w, w.inspection_zone(s));
  sensors::LabelScore r{truth, 1.0};
  if (!deterministic_) {
    r = sensors::sample_classifier(truth, config_.models.ibm_classifier, *config_.labels, rng_);
  }
  log_.push_back(
      {SampleRecord::Kind::Vlm, w.now(), config_.labels->is_safe(r.label) ? 1.0 : 0.0, r.label});
  return r;
}

std::string Perception::visible_truth(const world::World& w, const world::Region& r) const {
  auto hs = w.query(r, true);
  const auto* h = nearest(hs, w.robot().position);
  return h ? h->label : "no_problem_detected";
}

std::string Perception::cin_truth(const world::World& w) const {
  auto hs = w.query(world::Region::circle(w.robot().position, config_.timing.cin_classifier_range),
                    false);
  const auto* h = nearest(hs, w.robot().position);
  return h ? h->label : "no_problem_detected";
}

std::string Perception::ibm_truth(const world::World& w, const world::Station& s) const {
  auto hs = w.query(w.inspection_zone(s), false);
  const auto* h = nearest(hs, s.target);
  return h ? h->label : "no_problem_detected";
}

// ---- Consent sources ----

std::optional<ConsentCommand> AutoConsent::poll(double now, double waiting_since) {
  if (!current_delay_ || current_since_ != waiting_since) {
    current_since_ = waiting_since;
    current_delay_ = lo_ == hi_ ? lo_ : std::uniform_real_distribution<double>(lo_, hi_)(rng_);
  }
  if (now - waiting_since + 1e-9 >= *current_delay_) return ConsentCommand::Continue;
  return std::nullopt;
}

void QueuedConsent::push(ConsentCommand c) {
  std::lock_guard lock(mu_);
  queue_.push_back(c);
}

std::optional<ConsentCommand> QueuedConsent::poll(double, double) {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  auto c = queue_.front();
  queue_.pop_front();
  return c;
}

}  // namespace prevent::skills
