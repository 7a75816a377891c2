#include "ponsim/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace ponsim {

namespace {

constexpr const char* kClassKeys[kNumClasses] = {"cbr", "vbr", "be"};

// Shortest text that reads back to the same double.
YAML::Node num(double v) { return YAML::Node(fmt::format("{}", v)); }

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

std::string_view model_name(TrafficModel m) { return m == TrafficModel::poisson ? "poisson" : "self_similar"; }
std::string_view variant_name(PkVariant v) { return v == PkVariant::all_classes ? "all_classes" : "up_to_class"; }
std::string_view seeding_name(SweepSeeding s) { return s == SweepSeeding::common ? "common" : "independent"; }

YAML::Node schema_node(const RunConfig& cfg) {
  const SimConfig& s = cfg.sim;
  YAML::Node root;
  root["seed"] = s.seed;

  YAML::Node net;
  net["num_onus"] = s.num_onus;
  net["downstream_bps"] = num(s.downstream_bps);
  net["upstream_bps"] = num(s.upstream_bps);
  net["propagation_s"] = num(s.propagation_s);
  net["propagation_per_onu_s"] = YAML::Node(YAML::NodeType::Sequence);
  for (double p : s.propagation_per_onu) net["propagation_per_onu_s"].push_back(num(p));
  net["fba_bytes"] = s.fba_bytes;
  net["report_bytes"] = s.report_bytes;
  root["network"] = net;

  YAML::Node fsm;
  fsm["cycle_duration"] = num(s.fsm.cycle_duration);
  fsm["rx_listen_cycles"] = s.fsm.rx_listen_cycles;
  fsm["rx_sleep_cycles"] = s.fsm.rx_sleep_cycles;
  fsm["tx_listen_cycles"] = s.fsm.tx_listen_cycles;
  fsm["wake_overhead"] = num(s.fsm.wake_overhead);
  fsm["deadline_aware_wake"] = s.deadline_aware_wake;
  root["fsm"] = fsm;

  YAML::Node classes;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    YAML::Node c;
    c["delay_threshold_s"] = num(s.classes[i].delay_threshold_s);
    c["share"] = num(s.classes[i].share_of_load);
    classes[kClassKeys[i]] = c;
  }
  root["classes"] = classes;

  YAML::Node power;
  for (std::size_t i = 0; i < 9; ++i) power[PowerProfile::label(i)] = num(s.power.values()[i]);
  root["power"] = power;

  YAML::Node traffic;
  traffic["model"] = std::string(model_name(s.traffic.model));
  traffic["downstream_load_bps"] = num(s.traffic.downstream_load_bps);
  traffic["upstream_load_bps"] = num(s.traffic.upstream_load_bps);
  traffic["hurst"] = num(s.traffic.hurst);
  traffic["num_sources"] = s.traffic.num_sources;
  traffic["peak_rate_bps"] = num(s.traffic.peak_rate_bps);
  traffic["mean_on_s"] = num(s.traffic.mean_on_s);
  root["traffic"] = traffic;

  YAML::Node sim;
  sim["warmup_cycles"] = s.warmup_cycles;
  sim["measured_cycles"] = s.measured_cycles;
  root["simulation"] = sim;

  YAML::Node analysis;
  analysis["q_max"] = cfg.analysis.q_max;
  analysis["pk_variant"] = std::string(variant_name(s.pk_variant));
  root["analysis"] = analysis;

  YAML::Node sweep;
  sweep["axis"] = cfg.sweep.axis ? std::string(to_string(*cfg.sweep.axis)) : std::string();
  sweep["values"] = YAML::Node(YAML::NodeType::Sequence);
  for (double v : cfg.sweep.values) sweep["values"].push_back(num(v));
  sweep["seeding"] = std::string(seeding_name(cfg.sweep.seeding));
  root["sweep"] = sweep;
  return root;
}

bool has_key(const YAML::Node& map, const std::string& key) {
  for (const auto& kv : map)
    if (kv.first.as<std::string>() == key) return true;
  return false;
}

// Copies user entries onto the schema tree; every user key must already exist there.
void merge(YAML::Node target, const YAML::Node& user, const std::string& path) {
  if (!user.IsMap()) throw ConfigError(path.empty() ? "config" : path, "expected a mapping");
  for (const auto& kv : user) {
    const auto key = kv.first.as<std::string>();
    const std::string where = join(path, key);
    if (!has_key(target, key)) throw ConfigError(where, "unknown key");
    YAML::Node slot = target[key];
    if (slot.IsMap()) {
      merge(slot, kv.second, where);
    } else {
      if (kv.second.IsMap()) throw ConfigError(where, "expected a value, not a mapping");
      if (slot.IsSequence() && !kv.second.IsSequence() && !kv.second.IsNull())
        throw ConfigError(where, "expected a list");
      target[key] = kv.second.IsNull() && slot.IsSequence() ? YAML::Node(YAML::NodeType::Sequence)
                                                            : YAML::Clone(kv.second);
    }
  }
}

void apply_override(YAML::Node root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  YAML::Node node = root;
  std::string path;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> segments;
  while (std::getline(parts, part, '.')) segments.push_back(part);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    path = join(path, segments[i]);
    if (!node.IsMap() || !has_key(node, segments[i])) throw ConfigError(path, "unknown key");
    if (i + 1 == segments.size()) {
      YAML::Node slot = node[segments[i]];
      if (slot.IsMap()) throw ConfigError(path, "override must name a value, not a section");
      YAML::Node value;
      try {
        value = YAML::Load(text);
      } catch (const YAML::Exception& e) {
        throw ConfigError(path, fmt::format("cannot parse value '{}': {}", text, e.msg));
      }
      if (value.IsMap()) throw ConfigError(path, "override value must not be a mapping");
      if (slot.IsSequence() && !value.IsSequence()) throw ConfigError(path, "expected a list such as [1, 2]");
      node[segments[i]] = value.IsNull() ? YAML::Node(std::string()) : value;
    } else {
      node.reset(node[segments[i]]);
    }
  }
}

template <typename T>
T read(YAML::Node root, const std::string& path) {
  YAML::Node node = root;
  std::stringstream parts(path);
  std::string part;
  while (std::getline(parts, part, '.')) node.reset(node[part]);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    if constexpr (std::is_same_v<T, bool>) throw ConfigError(path, "expected true or false");
    else if constexpr (std::is_integral_v<T>) throw ConfigError(path, "expected an integer");
    else if constexpr (std::is_floating_point_v<T>) throw ConfigError(path, "expected a number");
    else throw ConfigError(path, "expected a string");
  }
}

std::vector<double> read_list(const YAML::Node& root, const std::string& section, const std::string& key) {
  std::vector<double> out;
  const std::string path = join(section, key);
  const YAML::Node seq = root[section][key];
  for (std::size_t i = 0; i < seq.size(); ++i) {
    try {
      out.push_back(seq[i].as<double>());
    } catch (const YAML::Exception&) {
      throw ConfigError(fmt::format("{}[{}]", path, i), "expected a number");
    }
  }
  return out;
}

RunConfig decode(const YAML::Node& root) {
  RunConfig cfg;
  SimConfig& s = cfg.sim;
  s.seed = read<std::uint64_t>(root, "seed");

  s.num_onus = read<int>(root, "network.num_onus");
  s.downstream_bps = read<double>(root, "network.downstream_bps");
  s.upstream_bps = read<double>(root, "network.upstream_bps");
  s.propagation_s = read<double>(root, "network.propagation_s");
  s.propagation_per_onu = read_list(root, "network", "propagation_per_onu_s");
  s.fba_bytes = read<std::int64_t>(root, "network.fba_bytes");
  s.report_bytes = read<std::int64_t>(root, "network.report_bytes");

  s.fsm.cycle_duration = read<double>(root, "fsm.cycle_duration");
  s.fsm.rx_listen_cycles = read<int>(root, "fsm.rx_listen_cycles");
  s.fsm.rx_sleep_cycles = read<int>(root, "fsm.rx_sleep_cycles");
  s.fsm.tx_listen_cycles = read<int>(root, "fsm.tx_listen_cycles");
  s.fsm.wake_overhead = read<double>(root, "fsm.wake_overhead");
  s.deadline_aware_wake = read<bool>(root, "fsm.deadline_aware_wake");

  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const std::string base = fmt::format("classes.{}", kClassKeys[i]);
    s.classes[i].index = static_cast<int>(i);
    s.classes[i].delay_threshold_s = read<double>(root, base + ".delay_threshold_s");
    s.classes[i].share_of_load = read<double>(root, base + ".share");
    s.traffic.byte_shares[i] = s.classes[i].share_of_load;
  }

  for (std::size_t i = 0; i < 9; ++i) {
    const auto label = PowerProfile::label(i);
    const double w = read<double>(root, "power." + label);
    const auto rx = static_cast<StateKind>(i / 3);
    const auto tx = static_cast<StateKind>(i % 3);
    s.power.set(rx, tx, w);
  }

  const auto model = read<std::string>(root, "traffic.model");
  if (model == "poisson") s.traffic.model = TrafficModel::poisson;
  else if (model == "self_similar") s.traffic.model = TrafficModel::self_similar;
  else throw ConfigError("traffic.model", fmt::format("'{}' is not one of poisson, self_similar", model));
  s.traffic.downstream_load_bps = read<double>(root, "traffic.downstream_load_bps");
  s.traffic.upstream_load_bps = read<double>(root, "traffic.upstream_load_bps");
  s.traffic.hurst = read<double>(root, "traffic.hurst");
  s.traffic.num_sources = read<int>(root, "traffic.num_sources");
  s.traffic.peak_rate_bps = read<double>(root, "traffic.peak_rate_bps");
  s.traffic.mean_on_s = read<double>(root, "traffic.mean_on_s");

  s.warmup_cycles = read<std::int64_t>(root, "simulation.warmup_cycles");
  s.measured_cycles = read<std::int64_t>(root, "simulation.measured_cycles");

  cfg.analysis.q_max = read<int>(root, "analysis.q_max");
  const auto variant = read<std::string>(root, "analysis.pk_variant");
  if (variant == "all_classes") s.pk_variant = PkVariant::all_classes;
  else if (variant == "up_to_class") s.pk_variant = PkVariant::up_to_class;
  else throw ConfigError("analysis.pk_variant", fmt::format("'{}' is not one of all_classes, up_to_class", variant));

  const auto axis = read<std::string>(root, "sweep.axis");
  if (!axis.empty()) {
    cfg.sweep.axis = parse_sweep_axis(axis);
    if (!cfg.sweep.axis)
      throw ConfigError("sweep.axis", fmt::format("'{}' is not one of ds_load, us_load, rx_listen, rx_sleep, "
                                                  "tx_listen, delay_threshold",
                                                  axis));
  }
  cfg.sweep.values = read_list(root, "sweep", "values");
  const auto seeding = read<std::string>(root, "sweep.seeding");
  if (seeding == "common") cfg.sweep.seeding = SweepSeeding::common;
  else if (seeding == "independent") cfg.sweep.seeding = SweepSeeding::independent;
  else throw ConfigError("sweep.seeding", fmt::format("'{}' is not one of common, independent", seeding));
  return cfg;
}

// Messages from SimConfig::validate start with the dotted key they concern.
std::string key_of(const std::string& message) {
  const auto space = message.find(' ');
  const std::string head = message.substr(0, space);
  return head.find('.') != std::string::npos ? head : std::string("config");
}

}  // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  // 5% of the line rate per direction, spread over 32 ONUs.
  cfg.sim.traffic.downstream_load_bps = 0.05 * cfg.sim.downstream_bps / cfg.sim.num_onus;
  cfg.sim.traffic.upstream_load_bps = 0.05 * cfg.sim.upstream_bps / cfg.sim.num_onus;
  return cfg;
}

std::string to_yaml(const RunConfig& cfg) {
  YAML::Emitter out;
  out << schema_node(cfg);
  return std::string(out.c_str()) + "\n";
}

void validate_config(const RunConfig& cfg) {
  const SimConfig& s = cfg.sim;
  double share_sum = 0.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const std::string base = fmt::format("classes.{}", kClassKeys[i]);
    if (!(s.classes[i].delay_threshold_s > 0.0)) throw ConfigError(base + ".delay_threshold_s", "must be positive");
    if (!(s.classes[i].share_of_load >= 0.0 && s.classes[i].share_of_load <= 1.0))
      throw ConfigError(base + ".share", "must lie in [0, 1]");
    if (i > 0 && s.classes[i].delay_threshold_s < s.classes[i - 1].delay_threshold_s)
      throw ConfigError(base + ".delay_threshold_s",
                        fmt::format("must be >= classes.{}.delay_threshold_s", kClassKeys[i - 1]));
    share_sum += s.classes[i].share_of_load;
  }
  if (std::abs(share_sum - 1.0) > 1e-12)
    throw ConfigError("classes", fmt::format("shares sum to {:.12g}, expected 1", share_sum));
  if (cfg.analysis.q_max < 1) throw ConfigError("analysis.q_max", "must be >= 1");
  if (cfg.sweep.axis && cfg.sweep.values.empty()) throw ConfigError("sweep.values", "must not be empty");
  try {
    s.validate();
    if (cfg.sweep.axis)
      for (double v : cfg.sweep.values) apply_axis(s, *cfg.sweep.axis, v);
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.rfind("sweep value", 0) == 0) throw ConfigError("sweep.values", what);
    throw ConfigError(key_of(what), what);
  }
}

RunConfig parse_config(std::string_view yaml_text, std::span<const std::string> overrides) {
  YAML::Node root = schema_node(default_run_config());
  YAML::Node user;
  try {
    user = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", fmt::format("YAML syntax error at line {}: {}", e.mark.line + 1, e.msg));
  }
  if (user.IsDefined() && !user.IsNull()) merge(root, user, "");
  for (const auto& o : overrides) apply_override(root, o);
  RunConfig cfg = decode(root);
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", fmt::format("cannot read '{}'", path.string()));
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

}  // namespace ponsim
