#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "crowdevac/errors.hpp"
#include "crowdevac/simulator.hpp"

namespace crowdevac {

/// A sweep over the (humans, robots, regime) condition matrix, each cell
/// replicated with independent seeds derived from `base_seed`.
struct ExperimentSpec {
  SimConfig base;
  std::vector<std::size_t> human_counts{50, 100, 150, 200, 250};
  std::vector<std::size_t> robot_counts{4, 6, 8, 10, 12, 14, 16};
  std::vector<ObstacleRegime> regimes{ObstacleRegime::kNone, ObstacleRegime::kStatic,
                                      ObstacleRegime::kDynamic};
  std::size_t replications = 128;
  std::uint64_t base_seed = 1;
  std::string output_dir = "out";
  std::size_t snapshot_every = 0;  // iterations between snapshots, 0 = off

  std::size_t cell_count() const { return human_counts.size() * robot_counts.size() * regimes.size(); }

  void validate() const {
    base.validate();
    if (replications < 1) throw InvalidConfig("replications must be at least 1");
    if (human_counts.empty() || robot_counts.empty() || regimes.empty()) {
      throw InvalidConfig("sweep lists must not be empty");
    }
    for (auto n : human_counts) if (n < 1) throw InvalidConfig("human counts must be positive");
    for (auto n : robot_counts) if (n < 1) throw InvalidConfig("robot counts must be positive");
  }

  bool operator==(const ExperimentSpec&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("expected a number, got '" + text + "'");
  }
  if (used != text.size()) throw std::invalid_argument("expected a number, got '" + text + "'");
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || text[0] == '-' || ec != std::errc() || ptr != end) {
    throw std::invalid_argument("expected a positive integer, got '" + text + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw std::invalid_argument("expected true/false, got '" + text + "'");
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
  return out;
}

struct Field {
  std::function<void(ExperimentSpec&, const std::string&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

template <typename Get>
Field number(Get get) {
  return {[get](ExperimentSpec& s, const std::string& v) { get(s) = parse_double(v); },
          [get](const ExperimentSpec& s) { return format_double(get(const_cast<ExperimentSpec&>(s))); }};
}

template <typename Get>
Field count(Get get) {
  return {[get](ExperimentSpec& s, const std::string& v) {
            get(s) = static_cast<std::remove_reference_t<decltype(get(s))>>(parse_unsigned(v));
          },
          [get](const ExperimentSpec& s) {
            return std::to_string(get(const_cast<ExperimentSpec&>(s)));
          }};
}

template <typename Get>
Field flag(Get get) {
  return {[get](ExperimentSpec& s, const std::string& v) { get(s) = parse_bool(v); },
          [get](const ExperimentSpec& s) {
            return std::string(get(const_cast<ExperimentSpec&>(s)) ? "true" : "false");
          }};
}

template <typename Get>
Field count_list(Get get) {
  return {[get](ExperimentSpec& s, const std::string& v) {
            auto& out = get(s);
            out.clear();
            for (const auto& item : split_list(v)) out.push_back(static_cast<std::size_t>(parse_unsigned(item)));
          },
          [get](const ExperimentSpec& s) {
            std::string out;
            for (auto n : get(const_cast<ExperimentSpec&>(s))) out += (out.empty() ? "" : ",") + std::to_string(n);
            return out;
          }};
}

inline ObstacleRegime parse_regime(const std::string& v) {
  try {
    return regime_from_string(v);
  } catch (const InvalidConfig&) {
    throw std::invalid_argument("expected none/static/dynamic, got '" + v + "'");
  }
}

// Every recognised key, in dump order. Keys mirror the parameter groups.
inline const std::vector<std::pair<std::string, Field>>& config_fields() {
  using S = ExperimentSpec;
  static const std::vector<std::pair<std::string, Field>> fields = {
      {"humans", count([](S& s) -> auto& { return s.base.humans; })},
      {"robots", count([](S& s) -> auto& { return s.base.robots; })},
      {"dt", number([](S& s) -> auto& { return s.base.dt; })},
      {"horizon", number([](S& s) -> auto& { return s.base.horizon; })},
      {"regime", {[](S& s, const std::string& v) { s.base.regime = parse_regime(v); },
                  [](const S& s) { return std::string(to_string(s.base.regime)); }}},
      {"obstacles", count([](S& s) -> auto& { return s.base.obstacle_count; })},
      {"seed", count([](S& s) -> auto& { return s.base.seed; })},
      {"evacuation_radius", number([](S& s) -> auto& { return s.base.evacuation_radius; })},
      {"stop_threshold", number([](S& s) -> auto& { return s.base.stop_threshold; })},
      {"robot_mass", number([](S& s) -> auto& { return s.base.robot_mass; })},
      {"domain.lower_x", number([](S& s) -> auto& { return s.base.domain.lower.x(); })},
      {"domain.lower_y", number([](S& s) -> auto& { return s.base.domain.lower.y(); })},
      {"domain.upper_x", number([](S& s) -> auto& { return s.base.domain.upper.x(); })},
      {"domain.upper_y", number([](S& s) -> auto& { return s.base.domain.upper.y(); })},
      {"domain.resolution", count([](S& s) -> auto& { return s.base.domain.resolution; })},
      {"target.x", number([](S& s) -> auto& { return s.base.target.safe_location.x(); })},
      {"target.y", number([](S& s) -> auto& { return s.base.target.safe_location.y(); })},
      {"target.spread", number([](S& s) -> auto& { return s.base.target.spread; })},
      {"obstacle.half_width", number([](S& s) -> auto& { return s.base.obstacle.half_extent.x(); })},
      {"obstacle.half_height", number([](S& s) -> auto& { return s.base.obstacle.half_extent.y(); })},
      {"obstacle.amplitude", number([](S& s) -> auto& { return s.base.obstacle.amplitude; })},
      {"obstacle.rate", number([](S& s) -> auto& { return s.base.obstacle.angular_rate; })},
      {"potential.repulsion_strength", number([](S& s) -> auto& { return s.base.potential.repulsion_strength; })},
      {"potential.repulsion_range", number([](S& s) -> auto& { return s.base.potential.repulsion_range; })},
      {"potential.attraction_strength", number([](S& s) -> auto& { return s.base.potential.attraction_strength; })},
      {"potential.attraction_range", number([](S& s) -> auto& { return s.base.potential.attraction_range; })},
      {"kernel.amplitude", number([](S& s) -> auto& { return s.base.kernel.amplitude; })},
      {"kernel.shape_scale", number([](S& s) -> auto& { return s.base.kernel.shape_scale; })},
      {"kernel.support_radius", number([](S& s) -> auto& { return s.base.kernel.support_radius; })},
      {"env.uniform_amplitude", number([](S& s) -> auto& { return s.base.env.uniform_amplitude; })},
      {"env.uniform_rate", number([](S& s) -> auto& { return s.base.env.uniform_rate; })},
      {"env.obstacle_coefficient", number([](S& s) -> auto& { return s.base.env.obstacle_coefficient; })},
      {"env.obstacle_radius", number([](S& s) -> auto& { return s.base.env.obstacle_radius; })},
      {"env.obstacle_min_distance", number([](S& s) -> auto& { return s.base.env.obstacle_min_distance; })},
      {"kde.bandwidth", number([](S& s) -> auto& { return s.base.kde.bandwidth; })},
      {"velocity.bandwidth", number([](S& s) -> auto& { return s.base.velocity.bandwidth; })},
      {"velocity.min_weight", number([](S& s) -> auto& { return s.base.velocity.min_weight; })},
      {"position.k_r", number([](S& s) -> auto& { return s.base.position.robot_repulsion; })},
      {"position.k_o", number([](S& s) -> auto& { return s.base.position.obstacle_repulsion; })},
      {"position.viscosity", number([](S& s) -> auto& { return s.base.position.viscosity; })},
      {"position.sensing_radius", number([](S& s) -> auto& { return s.base.position.sensing_radius; })},
      {"position.min_distance", number([](S& s) -> auto& { return s.base.position.min_distance; })},
      {"position.walls", flag([](S& s) -> auto& { return s.base.position.walls_as_obstacles; })},
      {"position.k_wall", number([](S& s) -> auto& { return s.base.position.wall_repulsion; })},
      {"control.k_rho", number([](S& s) -> auto& { return s.base.direction.density_gain; })},
      {"control.k_u", number([](S& s) -> auto& { return s.base.direction.velocity_gain; })},
      {"control.k_eta", number([](S& s) -> auto& { return s.base.direction.force_gain; })},
      {"control.eps_g", number([](S& s) -> auto& { return s.base.direction.gradient_epsilon; })},
      {"control.eps_c", number([](S& s) -> auto& { return s.base.direction.controllability_epsilon; })},
      {"control.eta_max", number([](S& s) -> auto& { return s.base.direction.max_rate; })},
      {"adaptive.lattice", count([](S& s) -> auto& { return s.base.adaptive.lattice; })},
      {"adaptive.width", number([](S& s) -> auto& { return s.base.adaptive.width; })},
      {"adaptive.gamma", number([](S& s) -> auto& { return s.base.adaptive.gain; })},
      {"adaptive.k_w", number([](S& s) -> auto& { return s.base.adaptive.leakage; })},
      {"physics.human_interaction", flag([](S& s) -> auto& { return s.base.physics.human_interaction; })},
      {"physics.environment_force", flag([](S& s) -> auto& { return s.base.physics.environment_force; })},
      {"physics.navigation_force", flag([](S& s) -> auto& { return s.base.physics.navigation_force; })},
      {"physics.robot_control", flag([](S& s) -> auto& { return s.base.physics.robot_control; })},
      {"physics.adaptation", flag([](S& s) -> auto& { return s.base.physics.adaptation; })},
      {"sweep.humans", count_list([](S& s) -> auto& { return s.human_counts; })},
      {"sweep.robots", count_list([](S& s) -> auto& { return s.robot_counts; })},
      {"sweep.regimes", {[](S& s, const std::string& v) {
                           s.regimes.clear();
                           for (const auto& item : split_list(v)) s.regimes.push_back(parse_regime(item));
                         },
                         [](const S& s) {
                           std::string out;
                           for (auto r : s.regimes) out += (out.empty() ? "" : ",") + std::string(to_string(r));
                           return out;
                         }}},
      {"sweep.replications", count([](S& s) -> auto& { return s.replications; })},
      {"sweep.base_seed", count([](S& s) -> auto& { return s.base_seed; })},
  };
  return fields;
}

inline const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : config_fields())
    if (name == key) return &field;
  return nullptr;
}

}  // namespace detail

/// Applies one `key = value` assignment. `line` is only used for messages.
inline void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value,
                          std::size_t line = 0) {
  const detail::Field* field = detail::find_field(key);
  if (!field) throw ParseError(line, key, "unknown key");
  try {
    field->set(spec, value);
  } catch (const std::invalid_argument& e) {
    throw ParseError(line, key, e.what());
  } catch (const std::out_of_range&) {
    throw ParseError(line, key, "value out of range");
  }
}

/// Splits "key=value" (as given to --set) into its trimmed parts.
inline std::pair<std::string, std::string> split_assignment(std::string_view text, std::size_t line = 0) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ParseError(line, "", "expected 'key = value'");
  std::string key = detail::trim(text.substr(0, eq));
  std::string value = detail::trim(text.substr(eq + 1));
  if (key.empty()) throw ParseError(line, "", "missing key before '='");
  if (value.empty()) throw ParseError(line, key, "missing value");
  return {std::move(key), std::move(value)};
}

/// Runs every invariant check, reporting the first violation as a parse
/// error against the key that set it (or the whole file when unclear).
inline void validate_spec(const ExperimentSpec& spec, const std::map<std::string, std::size_t>& lines) {
  try {
    spec.validate();
  } catch (const InvalidConfig& e) {
    const std::string message = e.what();
    for (const auto& [key, line] : lines) {
      const auto dot = key.rfind('.');
      const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
      if (message.find(leaf) != std::string::npos) throw ParseError(line, key, message);
    }
    throw ParseError(0, "", message);
  }
}

/// Parses the flat `key = value` format: one assignment per line, '#'
/// starts a comment, omitted keys keep their defaults, unknown keys are
/// rejected.
inline ExperimentSpec parse_experiment(std::string_view text,
                                       const std::vector<std::string>& overrides = {}) {
  ExperimentSpec spec;
  std::map<std::string, std::size_t> lines;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (detail::trim(line).empty()) continue;
    auto [key, value] = split_assignment(line, line_no);
    apply_setting(spec, key, value, line_no);
    lines[key] = line_no;
  }
  for (const auto& o : overrides) {
    auto [key, value] = split_assignment(o, 0);
    apply_setting(spec, key, value, 0);
    lines[key] = 0;
  }
  validate_spec(spec, lines);
  return spec;
}

inline SimConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {}) {
  return parse_experiment(text, overrides).base;
}

/// Every key with its effective value, in the canonical order.
inline std::string dump_config(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& [name, field] : detail::config_fields()) out += name + " = " + field.get(spec) + "\n";
  return out;
}

inline std::string dump_config(const SimConfig& config) {
  ExperimentSpec spec;
  spec.base = config;
  std::string out;
  for (const auto& [name, field] : detail::config_fields()) {
    if (name.rfind("sweep.", 0) == 0) continue;
    out += name + " = " + field.get(spec) + "\n";
  }
  return out;
}

}  // namespace crowdevac
