#include "noetic/sim.hpp"

#include "noetic/classify/metrics.hpp"
#include "noetic/error.hpp"
#include "noetic/rng.hpp"

#include <algorithm>
#include <cmath>

namespace noetic::sim {

void SimConfig::validate() const {
  if (n_obstacles < 1) throw SpecError("sim: n_obstacles must be >= 1");
  if (!(decision_window_s > 0.0)) throw SpecError("sim: decision_window_s must be > 0");
  if (!(inter_obstacle_s > decision_window_s))
    throw SpecError("sim: inter_obstacle_s must exceed decision_window_s");
  if (!classes.empty()) {
    if (classes.size() != n_obstacles)
      throw SpecError("sim: class sequence has " + std::to_string(classes.size()) + " entries for " +
                      std::to_string(n_obstacles) + " obstacles");
    for (int c : classes)
      if (c != 0 && c != 1) throw SpecError("sim: classes must be 0 or 1");
  }
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  try {
    SimConfig c;
    c.n_obstacles = j.value("n_obstacles", c.n_obstacles);
    c.inter_obstacle_s = j.value("inter_obstacle_s", c.inter_obstacle_s);
    c.decision_window_s = j.value("decision_window_s", c.decision_window_s);
    c.classes = j.value("classes", c.classes);
    c.seed = j.value("seed", c.seed);
    c.audio_feedback = j.value("audio_feedback", c.audio_feedback);
    c.visual_feedback = j.value("visual_feedback", c.visual_feedback);
    for (auto it = j.begin(); it != j.end(); ++it) {
      static const std::vector<std::string> known{"n_obstacles", "inter_obstacle_s", "decision_window_s", "classes",
                                                  "seed", "audio_feedback", "visual_feedback"};
      if (std::find(known.begin(), known.end(), it.key()) == known.end())
        throw SpecError("sim config: unknown key '" + it.key() + "'");
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("sim config: ") + e.what());
  }
}

nlohmann::json to_json(const SimConfig& c) {
  return {{"n_obstacles", c.n_obstacles}, {"inter_obstacle_s", c.inter_obstacle_s},
          {"decision_window_s", c.decision_window_s}, {"classes", c.classes},
          {"seed", c.seed}, {"audio_feedback", c.audio_feedback}, {"visual_feedback", c.visual_feedback}};
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::pending: return "pending";
    case Outcome::avoided: return "avoided";
    case Outcome::hit: return "hit";
    case Outcome::timeout: return "timeout";
  }
  return "?";
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::announce: return "announce";
    case EventKind::action: return "action";
    case EventKind::outcome: return "outcome";
    case EventKind::feedback: return "feedback";
  }
  return "?";
}

std::vector<Marker> SimSession::markers() const {
  std::vector<Marker> out;
  for (const auto& o : obstacles) out.push_back({o.announce_t, "obstacle", o.class_id});
  return out;
}

SimSession new_session(const SimConfig& config) {
  config.validate();
  SimSession s;
  s.config = config;
  std::vector<int> seq = config.classes;
  if (seq.empty()) {
    for (std::size_t k = 0; k < config.n_obstacles; ++k) seq.push_back(static_cast<int>(k % 2));
    Rng rng(config.seed);
    shuffle(seq.begin(), seq.end(), rng);
  }
  for (std::size_t k = 0; k < config.n_obstacles; ++k)
    s.obstacles.push_back({k, seq[k], static_cast<double>(k) * config.inter_obstacle_s, {}, {}, Outcome::pending});
  return s;
}

std::vector<SimEvent> step(SimSession& s, double now, std::optional<int> decision) {
  if (now < s.clock) throw Error("sim: time went backwards (" + std::to_string(now) + " < " + std::to_string(s.clock) + ")");
  s.clock = now;
  std::vector<SimEvent> out;
  const double window = s.config.decision_window_s;

  while (s.announced < s.obstacles.size() && s.obstacles[s.announced].announce_t <= now) {
    const auto& o = s.obstacles[s.announced];
    out.push_back({o.announce_t, EventKind::announce, o.index, o.class_id, Outcome::pending, false, false});
    ++s.announced;
  }

  if (decision) {
    ObstacleRecord* open = nullptr;
    for (std::size_t k = s.closed; k < s.announced; ++k) {
      auto& o = s.obstacles[k];
      if (now >= o.announce_t && now <= o.announce_t + window) open = &o;
    }
    if (open == nullptr || open->decision) {
      ++s.ignored_decisions;
    } else {
      open->decision = *decision;
      open->decision_t = now;
      s.trace.push_back({now, *decision});
      out.push_back({now, EventKind::action, open->index, *decision, Outcome::pending, false, false});
    }
  }

  while (s.closed < s.announced && s.obstacles[s.closed].announce_t + window <= now &&
         !(decision && s.obstacles[s.closed].announce_t + window == now && !s.obstacles[s.closed].decision)) {
    auto& o = s.obstacles[s.closed];
    const double t = o.announce_t + window;
    if (!o.decision)
      o.outcome = Outcome::timeout;
    else
      o.outcome = *o.decision == o.class_id ? Outcome::avoided : Outcome::hit;
    out.push_back({t, EventKind::outcome, o.index, o.class_id, o.outcome, false, false});
    out.push_back({t, EventKind::feedback, o.index, o.class_id, o.outcome, s.config.audio_feedback,
                   s.config.visual_feedback});
    ++s.closed;
  }
  s.events.insert(s.events.end(), out.begin(), out.end());
  return out;
}

std::vector<SimEvent> finish(SimSession& s) {
  const auto& last = s.obstacles.back();
  return step(s, std::max(s.clock, last.announce_t + s.config.decision_window_s));
}

Score score(const SimSession& s) {
  Score sc;
  for (const auto& o : s.obstacles) {
    if (o.outcome == Outcome::avoided) ++sc.avoided;
    if (o.outcome == Outcome::hit) ++sc.hit;
    if (o.outcome == Outcome::timeout) ++sc.timeout;
  }
  sc.partial = !s.complete();
  const auto n = s.obstacles.size();
  sc.accuracy = static_cast<double>(sc.avoided) / static_cast<double>(n);
  sc.itr_bits = classify::itr_bits_per_selection(2, sc.accuracy);
  sc.itr_bits_per_min = sc.itr_bits * 60.0 / s.config.inter_obstacle_s;
  return sc;
}

SimSession replay(const SimConfig& config, const std::vector<Decision>& trace) {
  auto s = new_session(config);
  for (const auto& d : trace) step(s, d.t, d.class_id);
  finish(s);
  return s;
}

std::string session_log_jsonl(const SimSession& s) {
  std::string out;
  for (const auto& o : s.obstacles) {
    nlohmann::json j{{"obstacle", o.index}, {"class_id", o.class_id}, {"announce_t", o.announce_t},
                     {"outcome", to_string(o.outcome)}};
    j["decision"] = o.decision ? nlohmann::json(*o.decision) : nlohmann::json(nullptr);
    j["decision_t"] = o.decision_t ? nlohmann::json(*o.decision_t) : nlohmann::json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

nlohmann::json to_json(const Score& s) {
  return {{"avoided", s.avoided},   {"hit", s.hit},           {"timeout", s.timeout},
          {"accuracy", s.accuracy}, {"itr_bits", s.itr_bits}, {"itr_bits_per_min", s.itr_bits_per_min},
          {"partial", s.partial}};
}

}  // namespace noetic::sim
