#pragma once

#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace noetic::sim {

struct SimConfig {
  std::size_t n_obstacles = 10;
  double inter_obstacle_s = 4.0;
  double decision_window_s = 2.0;
  std::vector<int> classes;  // explicit sequence; empty: balanced seeded shuffle
  std::uint64_t seed = 0;
  bool audio_feedback = true;
  bool visual_feedback = true;

  void validate() const;
};

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& c);

enum class Outcome { pending, avoided, hit, timeout };
std::string to_string(Outcome o);

struct ObstacleRecord {
  std::size_t index = 0;
  int class_id = 0;
  double announce_t = 0.0;
  std::optional<int> decision;
  std::optional<double> decision_t;
  Outcome outcome = Outcome::pending;
};

enum class EventKind { announce, action, outcome, feedback };
std::string to_string(EventKind k);

struct SimEvent {
  double t = 0.0;
  EventKind kind = EventKind::announce;
  std::size_t obstacle = 0;
  int class_id = 0;
  Outcome outcome = Outcome::pending;
  bool audio = false;
  bool visual = false;

  bool operator==(const SimEvent&) const = default;
};

struct Decision {
  double t = 0.0;
  int class_id = 0;
};

struct SimSession {
  SimConfig config;
  double clock = 0.0;
  std::vector<ObstacleRecord> obstacles;
  std::vector<SimEvent> events;
  std::vector<Decision> trace;  // binding decisions only
  std::size_t announced = 0;
  std::size_t closed = 0;
  std::size_t ignored_decisions = 0;

  bool complete() const { return closed == obstacles.size(); }
  /// Announce markers ("obstacle", class id) in schedule order.
  std::vector<Marker> markers() const;
};

SimSession new_session(const SimConfig& config);

/// Advances the clock to now and applies an optional decision at now.
std::vector<SimEvent> step(SimSession& s, double now, std::optional<int> decision = std::nullopt);

/// Advances past the last window.
std::vector<SimEvent> finish(SimSession& s);

struct Score {
  std::size_t avoided = 0, hit = 0, timeout = 0;
  double accuracy = 0.0;
  double itr_bits = 0.0;         // per selection
  double itr_bits_per_min = 0.0;  // selections per minute = 60 / inter_obstacle_s
  bool partial = false;
};

Score score(const SimSession& s);

/// Runs a fresh session over a decision trace, then finishes it.
SimSession replay(const SimConfig& config, const std::vector<Decision>& trace);

std::string session_log_jsonl(const SimSession& s);
nlohmann::json to_json(const Score& s);

}  // namespace noetic::sim
