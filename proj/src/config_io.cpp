#include "lunex/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lunex::model {

using json = nlohmann::ordered_json;

int ScenarioConfig::find_node(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

int ScenarioConfig::find_commodity(const std::string& id) const {
  for (std::size_t i = 0; i < commodities.size(); ++i)
    if (commodities[i].id == id) return static_cast<int>(i);
  return -1;
}

int ScenarioConfig::find_player(const std::string& id) const {
  for (std::size_t i = 0; i < players.size(); ++i)
    if (players[i].id == id) return static_cast<int>(i);
  return -1;
}

const Player* ScenarioConfig::coordinator() const {
  for (const Player& p : players)
    if (p.role == PlayerRole::Coordinator) return &p;
  return nullptr;
}

std::vector<int> ScenarioConfig::commercial_players() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < players.size(); ++i)
    if (players[i].role == PlayerRole::Commercial) out.push_back(static_cast<int>(i));
  return out;
}

WindowSet ScenarioConfig::windows_for(const std::string& player_id, const NetworkArc& arc) const {
  WindowSet w = time_grid.mission_windows;
  for (const WindowOverride& ov : time_grid.overrides) {
    if (ov.player && *ov.player != player_id) continue;
    if (ov.from && *ov.from != arc.from) continue;
    if (ov.to && *ov.to != arc.to) continue;
    w = ov.windows;
  }
  return w;
}

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& field,
                       const std::string& msg) {
  throw ConfigError(origin + ": " + field + ": " + msg);
}

double parse_amount(const json& v, const std::string& origin, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") fail(origin, field, "open demands (-inf) violate the sign convention");
    fail(origin, field, "expected a number or \"inf\", got \"" + s + "\"");
  }
  fail(origin, field, "expected a number or \"inf\"");
}

NodeKind parse_node_kind(const std::string& s, const std::string& origin) {
  if (s == "body-surface") return NodeKind::BodySurface;
  if (s == "orbit") return NodeKind::Orbit;
  if (s == "lagrange-point") return NodeKind::LagrangePoint;
  fail(origin, "nodes.kind", "unknown node kind \"" + s + "\"");
}

ArcKind parse_arc_kind(const std::string& s, const std::string& origin) {
  if (s == "transport") return ArcKind::Transport;
  if (s == "holdover") return ArcKind::Holdover;
  if (s == "launch") return ArcKind::Launch;
  fail(origin, "arcs.kind", "unknown arc kind \"" + s + "\"");
}

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::BodySurface: return "body-surface";
    case NodeKind::Orbit: return "orbit";
    case NodeKind::LagrangePoint: return "lagrange-point";
  }
  return "orbit";
}

const char* arc_kind_name(ArcKind k) {
  switch (k) {
    case ArcKind::Transport: return "transport";
    case ArcKind::Holdover: return "holdover";
    case ArcKind::Launch: return "launch";
  }
  return "transport";
}

void default_network(ScenarioConfig& cfg) {
  cfg.nodes = {{"Earth", NodeKind::BodySurface},
               {"LEO", NodeKind::Orbit},
               {"EML1", NodeKind::LagrangePoint},
               {"Moon", NodeKind::BodySurface}};
  cfg.arcs = {{"Earth", "LEO", ArcKind::Launch, 0.0, 0, true},
              {"LEO", "EML1", ArcKind::Transport, 3.77, 5, false},
              {"EML1", "LEO", ArcKind::Transport, 3.77, 5, false},
              {"EML1", "Moon", ArcKind::Transport, 2.52, 3, false},
              {"Moon", "EML1", ArcKind::Transport, 2.52, 3, false}};
  cfg.assumed_defaults.push_back(
      "network: 4-node cislunar chain; LEO<->EML1 dV 3.77 km/s tof 5 d, EML1<->Moon dV 2.52 "
      "km/s tof 3 d, Earth->LEO priced per kg");
}

void default_commodities(ScenarioConfig& cfg) {
  cfg.commodities = {{commodity::kInfrastructure, CommodityDomain::Continuous},
                     {commodity::kH2, CommodityDomain::Continuous},
                     {commodity::kO2, CommodityDomain::Continuous},
                     {commodity::kWater, CommodityDomain::Continuous},
                     {commodity::kPlant, CommodityDomain::Continuous},
                     {commodity::kSpares, CommodityDomain::Continuous},
                     {commodity::kSpacecraft, CommodityDomain::Discrete}};
}

int round_to_grid(int t, int step) {
  const int down = t / step * step;
  const int up = down + step;
  return (t - down <= up - t) ? down : up;
}

// Generates the fixed supply/demand rows of the scenario: fleets, plants,
// maintenance, and open supplies at the deployment origin. Deployment itself
// depends on alpha and is injected by the formulation layer.
void expand_demands(ScenarioConfig& cfg, const std::string& origin) {
  const TimeGrid& tg = cfg.time_grid;
  auto push = [&](const std::string& player, const std::string& com, const std::string& node,
                  int t, double amount) {
    cfg.expanded_demands.push_back(DemandEntry{player, com, node, t, amount});
  };
  auto each_layer = [&](auto&& fn) {
    for (int t = 0; t <= tg.horizon_days; t += tg.step_days) fn(t);
  };

  for (const Player& p : cfg.players) {
    // fleet: spacecraft units appear at the deployment origin at each window start
    if (p.fleet_per_mission > 0) {
      for (const auto& [a, b] : tg.mission_windows.intervals) {
        (void)b;
        push(p.id, commodity::kSpacecraft, cfg.deployment_origin, a,
             static_cast<double>(p.fleet_per_mission));
      }
    }
    // pre-deployed ISRU plant and its annual maintenance resupply demand
    if (p.isru_plant_mass_kg > 0.0) {
      push(p.id, commodity::kPlant, p.isru_node, 0, p.isru_plant_mass_kg);
      const double spares_per_year = p.isru_plant_mass_kg * cfg.maintenance_rate;
      if (spares_per_year > 0.0) {
        for (int year = 1; year * 365 <= cfg.time_grid.horizon_days + cfg.time_grid.step_days / 2;
             ++year) {
          const int t = std::min(tg.horizon_days, round_to_grid(year * 365, tg.step_days));
          push(p.id, commodity::kSpares, p.isru_node, t, -spares_per_year);
        }
      }
      each_layer([&](int t) { push(p.id, commodity::kSpares, cfg.deployment_origin, t, kInf); });
    }
    // propellant is purchasable at the origin at all times
    each_layer([&](int t) { push(p.id, commodity::kH2, cfg.deployment_origin, t, kInf); });
    each_layer([&](int t) { push(p.id, commodity::kO2, cfg.deployment_origin, t, kInf); });
    if (cfg.options.allow_plant_purchase && p.role == PlayerRole::Commercial) {
      each_layer([&](int t) { push(p.id, commodity::kPlant, cfg.deployment_origin, t, kInf); });
    }
    // player-declared entries
    for (DemandEntry e : p.own_demands) {
      e.player = p.id;
      const int rounded = round_to_grid(e.time_days, tg.step_days);
      if (rounded != e.time_days) {
        cfg.assumed_defaults.push_back("demand time " + std::to_string(e.time_days) +
                                       " rounded to grid point " + std::to_string(rounded));
        e.time_days = rounded;
      }
      if (cfg.find_node(e.node) < 0) fail(origin, "players.demands.node", "unknown node id \"" + e.node + "\"");
      if (cfg.find_commodity(e.commodity) < 0)
        fail(origin, "players.demands.commodity", "unknown commodity id \"" + e.commodity + "\"");
      cfg.expanded_demands.push_back(std::move(e));
    }
  }
}

ScenarioConfig load_from_json(const json& j, const std::string& origin) {
  ScenarioConfig cfg;
  if (j.contains("schema_version")) {
    cfg.schema_version = j.at("schema_version").get<int>();
    if (cfg.schema_version != 1)
      fail(origin, "schema_version", "unsupported version " + std::to_string(cfg.schema_version));
  } else {
    cfg.assumed_defaults.push_back("schema_version: 1");
  }
  cfg.name = j.value("name", std::string("unnamed"));

  // time grid
  if (j.contains("time")) {
    const json& t = j.at("time");
    cfg.time_grid.step_days = t.value("step_days", 30);
    cfg.time_grid.horizon_days = t.value("horizon_days", 720);
    if (t.contains("mission_windows")) {
      for (const json& w : t.at("mission_windows"))
        cfg.time_grid.mission_windows.intervals.emplace_back(w.at(0).get<int>(),
                                                             w.at(1).get<int>());
    }
    if (t.contains("window_overrides")) {
      for (const json& o : t.at("window_overrides")) {
        WindowOverride ov;
        if (o.contains("player")) ov.player = o.at("player").get<std::string>();
        if (o.contains("from")) ov.from = o.at("from").get<std::string>();
        if (o.contains("to")) ov.to = o.at("to").get<std::string>();
        for (const json& w : o.at("windows"))
          ov.windows.intervals.emplace_back(w.at(0).get<int>(), w.at(1).get<int>());
        cfg.time_grid.overrides.push_back(std::move(ov));
      }
    }
  } else {
    cfg.assumed_defaults.push_back("time: step 30 d, horizon 720 d");
  }
  if (cfg.time_grid.step_days <= 0)
    fail(origin, "time.step_days", "must be positive");
  if (cfg.time_grid.mission_windows.empty()) {
    // one deployment window per year, ends rounded onto the grid
    const int step = cfg.time_grid.step_days;
    int start = 0;
    for (int year = 1; (year - 1) * 365 < cfg.time_grid.horizon_days; ++year) {
      const int end = std::min(cfg.time_grid.horizon_days, 365 * year / step * step);
      if (end <= start && year > 1) break;
      cfg.time_grid.mission_windows.intervals.emplace_back(start, end);
      start = end + step;
    }
    cfg.assumed_defaults.push_back("mission windows: one per year, grid-aligned");
  }

  // network
  if (j.contains("nodes") || j.contains("arcs")) {
    if (!j.contains("nodes") || !j.contains("arcs"))
      fail(origin, "nodes/arcs", "nodes and arcs must be given together");
    for (const json& n : j.at("nodes"))
      cfg.nodes.push_back(
          {n.at("id").get<std::string>(), parse_node_kind(n.value("kind", "orbit"), origin)});
    for (const json& a : j.at("arcs")) {
      NetworkArc arc;
      arc.from = a.at("from").get<std::string>();
      arc.to = a.at("to").get<std::string>();
      arc.kind = parse_arc_kind(a.value("kind", "transport"), origin);
      arc.delta_v_kms = a.value("delta_v_kms", 0.0);
      arc.tof_days = a.value("tof_days", arc.kind == ArcKind::Holdover ? cfg.time_grid.step_days : 0);
      arc.launch_priced = a.value("launch_priced", arc.kind == ArcKind::Launch);
      cfg.arcs.push_back(std::move(arc));
    }
  } else {
    default_network(cfg);
  }

  if (j.contains("commodities")) {
    for (const json& c : j.at("commodities")) {
      const std::string dom = c.value("domain", "continuous");
      if (dom != "continuous" && dom != "discrete")
        fail(origin, "commodities.domain", "must be continuous or discrete");
      cfg.commodities.push_back({c.at("id").get<std::string>(),
                                 dom == "discrete" ? CommodityDomain::Discrete
                                                   : CommodityDomain::Continuous});
    }
  } else {
    default_commodities(cfg);
  }

  if (j.contains("cost_model")) {
    const json& c = j.at("cost_model");
    cfg.cost_model.launch_cost_per_kg = c.value("launch_cost_per_kg", 3500.0);
    cfg.cost_model.spacecraft_unit_cost = c.value("spacecraft_unit_cost", 148e6);
    cfg.cost_model.flight_ops_cost = c.value("flight_ops_cost", 1e6);
    cfg.cost_model.h2_price_per_kg = c.value("h2_price_per_kg", 5.94);
    cfg.cost_model.o2_price_per_kg = c.value("o2_price_per_kg", 0.09);
  } else {
    cfg.assumed_defaults.push_back(
        "cost model: $3,500/kg launch, $148M/spacecraft, $1M/flight, H2 $5.94/kg, O2 $0.09/kg");
  }

  if (j.contains("spacecraft")) {
    const json& s = j.at("spacecraft");
    cfg.spacecraft.dry_mass_kg = s.value("dry_mass_kg", 6000.0);
    cfg.spacecraft.propellant_capacity_kg = s.value("propellant_capacity_kg", 54000.0);
    if (s.contains("payload_capacity_kg") && !s.at("payload_capacity_kg").is_null())
      cfg.spacecraft.payload_capacity_kg = s.at("payload_capacity_kg").get<double>();
    cfg.spacecraft.isp_s = s.value("isp_s", 420.0);
    cfg.spacecraft.unit_cost = s.value("unit_cost", cfg.cost_model.spacecraft_unit_cost);
    cfg.spacecraft.ox_fuel_ratio = s.value("ox_fuel_ratio", 5.5);
  } else {
    cfg.spacecraft.unit_cost = cfg.cost_model.spacecraft_unit_cost;
    cfg.assumed_defaults.push_back(
        "spacecraft: 6,000 kg dry, 54,000 kg propellant, Isp 420 s, O2:H2 5.5, unbounded payload");
  }
  if (!std::isfinite(cfg.spacecraft.payload_capacity_kg))
    cfg.assumed_defaults.push_back("payload capacity: unbounded (propellant physics only)");

  if (!j.contains("players") || j.at("players").empty())
    fail(origin, "players", "at least one player is required");
  for (const json& p : j.at("players")) {
    Player pl;
    pl.id = p.at("id").get<std::string>();
    const std::string role = p.value("role", "commercial");
    if (role == "coordinator") pl.role = PlayerRole::Coordinator;
    else if (role == "commercial") pl.role = PlayerRole::Commercial;
    else fail(origin, "players.role", "unknown role \"" + role + "\"");
    pl.fleet_per_mission = p.value("fleet_per_mission", 2);
    pl.isru_plant_mass_kg = p.value("isru_plant_mass_kg", 0.0);
    pl.isru_node = p.value("isru_node", pl.isru_plant_mass_kg > 0.0 ? "Moon" : "");
    if (p.contains("demands")) {
      for (const json& d : p.at("demands")) {
        DemandEntry e;
        e.player = pl.id;
        e.commodity = d.at("commodity").get<std::string>();
        e.node = d.at("node").get<std::string>();
        e.amount = parse_amount(d.at("amount"), origin, "players.demands.amount");
        if (std::isnan(e.amount))
          fail(origin, "players.demands.amount", "amount must not be NaN");
        if (d.at("time_days").is_string() && d.at("time_days").get<std::string>() == "all") {
          for (int t = 0; t <= cfg.time_grid.horizon_days; t += cfg.time_grid.step_days) {
            e.time_days = t;
            pl.own_demands.push_back(e);
          }
        } else {
          e.time_days = d.at("time_days").get<int>();
          pl.own_demands.push_back(e);
        }
      }
    }
    cfg.players.push_back(std::move(pl));
  }

  if (j.contains("deployment")) {
    const json& d = j.at("deployment");
    cfg.deployment_total_kg = d.value("total_mass_kg", 30000.0);
    cfg.deployment_origin = d.value("origin", std::string("Earth"));
    cfg.deployment_destination = d.value("destination", std::string("Moon"));
  } else {
    cfg.assumed_defaults.push_back("deployment: 30,000 kg per window, Earth -> Moon");
  }

  if (j.contains("isru")) {
    const json& i = j.at("isru");
    cfg.isru_productivity = i.value("productivity_kg_water_per_yr_per_kg_plant", 5.0);
    cfg.maintenance_rate = i.value("maintenance_rate_per_yr", 0.05);
  } else {
    cfg.assumed_defaults.push_back("isru: 5 kg water/yr/kg plant, 5% plant mass/yr maintenance");
  }

  if (j.contains("options")) {
    const json& o = j.at("options");
    const std::string acc = o.value("fleet_accounting", "per-launch");
    if (acc == "per-launch") cfg.options.fleet_accounting = FleetAccounting::PerLaunch;
    else if (acc == "fleet") cfg.options.fleet_accounting = FleetAccounting::Fleet;
    else fail(origin, "options.fleet_accounting", "must be per-launch or fleet");
    cfg.options.allow_plant_purchase = o.value("allow_plant_purchase", false);
    cfg.options.retain_excess_o2 = o.value("retain_excess_o2", false);
  } else {
    cfg.assumed_defaults.push_back(
        "options: per-launch fleet accounting, no plant purchase, excess O2 discarded");
  }
  cfg.assumed_defaults.push_back(
      std::string("fleet accounting: ") +
      (cfg.options.fleet_accounting == FleetAccounting::Fleet
           ? "fleet bought at peak per-window launch count"
           : "every launched unit bought"));

  // resolve deployment endpoints before expansion
  if (cfg.find_node(cfg.deployment_origin) < 0)
    fail(origin, "deployment.origin", "unknown node id \"" + cfg.deployment_origin + "\"");
  if (cfg.find_node(cfg.deployment_destination) < 0)
    fail(origin, "deployment.destination",
         "unknown node id \"" + cfg.deployment_destination + "\"");
  for (const Player& p : cfg.players) {
    if (p.isru_plant_mass_kg > 0.0 && cfg.find_node(p.isru_node) < 0)
      fail(origin, "players.isru_node", "unknown node id \"" + p.isru_node + "\"");
  }

  expand_demands(cfg, origin);
  return cfg;
}

}  // namespace

ScenarioConfig load_scenario_from_string(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin + ": parse error at byte " + std::to_string(e.byte) + ": " +
                      e.what());
  }
  try {
    return load_from_json(j, origin);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario_from_string(ss.str(), path);
}

std::vector<Diagnostic> validate_scenario(const ScenarioConfig& cfg) {
  std::vector<Diagnostic> out;
  auto diag = [&](const std::string& entity, const std::string& msg) {
    out.push_back({entity, msg});
  };

  // nodes
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.nodes.size(); ++k)
      if (cfg.nodes[i].id == cfg.nodes[k].id)
        diag("node " + cfg.nodes[i].id, "node ids must be unique within a scenario");

  // arcs
  for (const NetworkArc& a : cfg.arcs) {
    const std::string ent = "arc " + a.from + "->" + a.to;
    if (cfg.find_node(a.from) < 0) diag(ent, "unknown from-node \"" + a.from + "\"");
    if (cfg.find_node(a.to) < 0) diag(ent, "unknown to-node \"" + a.to + "\"");
    if (a.delta_v_kms < 0) diag(ent, "delta_v must be nonnegative");
    if (a.tof_days < 0) diag(ent, "time of flight must be nonnegative");
    if (a.kind == ArcKind::Holdover) {
      if (a.from != a.to) diag(ent, "holdover arcs must connect a node to itself");
      if (a.delta_v_kms != 0.0) diag(ent, "holdover arcs have zero delta_v");
      if (a.tof_days != cfg.time_grid.step_days)
        diag(ent, "holdover arcs span exactly one time step");
    } else if (a.from == a.to) {
      diag(ent, "transport arcs must connect distinct nodes");
    }
  }

  // commodities
  for (std::size_t i = 0; i < cfg.commodities.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.commodities.size(); ++k)
      if (cfg.commodities[i].id == cfg.commodities[k].id)
        diag("commodity " + cfg.commodities[i].id, "commodity ids must be unique");
  {
    const int sc = cfg.find_commodity(commodity::kSpacecraft);
    if (sc >= 0 && cfg.commodities[static_cast<std::size_t>(sc)].domain != CommodityDomain::Discrete)
      diag("commodity spacecraft-unit", "spacecraft-unit must be discrete");
  }

  // spacecraft
  if (cfg.spacecraft.dry_mass_kg <= 0) diag("spacecraft", "dry mass must be positive");
  if (cfg.spacecraft.propellant_capacity_kg <= 0)
    diag("spacecraft", "propellant capacity must be positive");
  if (cfg.spacecraft.payload_capacity_kg <= 0)
    diag("spacecraft", "payload capacity must be positive or unbounded");
  if (cfg.spacecraft.isp_s <= 0) diag("spacecraft", "Isp must be positive");
  if (cfg.spacecraft.ox_fuel_ratio <= 0) diag("spacecraft", "O2:H2 ratio must be positive");

  // players
  int coordinators = 0;
  for (const Player& p : cfg.players) {
    if (p.role == PlayerRole::Coordinator) ++coordinators;
    if (p.fleet_per_mission < 0) diag("player " + p.id, "fleet size must be nonnegative");
    if (p.isru_plant_mass_kg < 0) diag("player " + p.id, "plant mass must be nonnegative");
  }
  if (coordinators != 1)
    diag("players", "exactly one coordinator is required, found " + std::to_string(coordinators));
  for (std::size_t i = 0; i < cfg.players.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.players.size(); ++k)
      if (cfg.players[i].id == cfg.players[k].id)
        diag("player " + cfg.players[i].id, "player ids must be unique");

  // cost model
  const CostModel& cm = cfg.cost_model;
  if (cm.launch_cost_per_kg < 0 || cm.spacecraft_unit_cost < 0 || cm.flight_ops_cost < 0 ||
      cm.h2_price_per_kg < 0 || cm.o2_price_per_kg < 0)
    diag("cost_model", "all cost coefficients must be nonnegative");

  // time grid
  const TimeGrid& tg = cfg.time_grid;
  if (tg.step_days <= 0) diag("time", "step must be positive");
  else if (tg.horizon_days % tg.step_days != 0)
    diag("time", "horizon must be divisible by the step");
  for (const auto& [a, b] : tg.mission_windows.intervals) {
    if (a > b) diag("time", "window start must not exceed its end");
    if (a < 0 || b > tg.horizon_days) diag("time", "window outside the horizon");
  }

  // demands
  for (const DemandEntry& e : cfg.expanded_demands) {
    const std::string ent = "demand " + e.player + "/" + e.commodity + "@" + e.node;
    if (cfg.find_player(e.player) < 0) diag(ent, "unknown player id \"" + e.player + "\"");
    if (cfg.find_commodity(e.commodity) < 0)
      diag(ent, "unknown commodity id \"" + e.commodity + "\"");
    if (cfg.find_node(e.node) < 0) diag(ent, "unknown node id \"" + e.node + "\"");
    if (e.time_days < 0 || e.time_days > tg.horizon_days) diag(ent, "time outside the horizon");
    else if (tg.step_days > 0 && e.time_days % tg.step_days != 0)
      diag(ent, "time does not land on a grid point");
    if (std::isnan(e.amount) || e.amount == -kInf)
      diag(ent, "amount violates the sign convention (negative demand, positive supply)");
  }

  // scenario scalars
  if (cfg.deployment_total_kg <= 0) diag("deployment", "total deployment mass D must be positive");
  if (cfg.isru_productivity < 0) diag("isru", "productivity must be nonnegative");
  if (cfg.maintenance_rate < 0 || cfg.maintenance_rate > 1)
    diag("isru", "maintenance rate must lie in [0, 1]");

  return out;
}

namespace {

json amount_to_json(double a) {
  if (a == kInf) return json("inf");
  return json(a);
}

}  // namespace

std::string serialize_scenario(const ScenarioConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["name"] = cfg.name;
  json time;
  time["step_days"] = cfg.time_grid.step_days;
  time["horizon_days"] = cfg.time_grid.horizon_days;
  json windows = json::array();
  for (const auto& [a, b] : cfg.time_grid.mission_windows.intervals)
    windows.push_back(json::array({a, b}));
  time["mission_windows"] = windows;
  if (!cfg.time_grid.overrides.empty()) {
    json ovs = json::array();
    for (const WindowOverride& ov : cfg.time_grid.overrides) {
      json o;
      if (ov.player) o["player"] = *ov.player;
      if (ov.from) o["from"] = *ov.from;
      if (ov.to) o["to"] = *ov.to;
      json ws = json::array();
      for (const auto& [a, b] : ov.windows.intervals) ws.push_back(json::array({a, b}));
      o["windows"] = ws;
      ovs.push_back(std::move(o));
    }
    time["window_overrides"] = ovs;
  }
  j["time"] = time;

  json nodes = json::array();
  for (const NetworkNode& n : cfg.nodes)
    nodes.push_back({{"id", n.id}, {"kind", node_kind_name(n.kind)}});
  j["nodes"] = nodes;
  json arcs = json::array();
  for (const NetworkArc& a : cfg.arcs)
    arcs.push_back({{"from", a.from},
                    {"to", a.to},
                    {"kind", arc_kind_name(a.kind)},
                    {"delta_v_kms", a.delta_v_kms},
                    {"tof_days", a.tof_days},
                    {"launch_priced", a.launch_priced}});
  j["arcs"] = arcs;
  json coms = json::array();
  for (const Commodity& c : cfg.commodities)
    coms.push_back(
        {{"id", c.id},
         {"domain", c.domain == CommodityDomain::Discrete ? "discrete" : "continuous"}});
  j["commodities"] = coms;

  j["cost_model"] = {{"launch_cost_per_kg", cfg.cost_model.launch_cost_per_kg},
                     {"spacecraft_unit_cost", cfg.cost_model.spacecraft_unit_cost},
                     {"flight_ops_cost", cfg.cost_model.flight_ops_cost},
                     {"h2_price_per_kg", cfg.cost_model.h2_price_per_kg},
                     {"o2_price_per_kg", cfg.cost_model.o2_price_per_kg}};
  json sc;
  sc["dry_mass_kg"] = cfg.spacecraft.dry_mass_kg;
  sc["propellant_capacity_kg"] = cfg.spacecraft.propellant_capacity_kg;
  if (std::isfinite(cfg.spacecraft.payload_capacity_kg))
    sc["payload_capacity_kg"] = cfg.spacecraft.payload_capacity_kg;
  else
    sc["payload_capacity_kg"] = nullptr;
  sc["isp_s"] = cfg.spacecraft.isp_s;
  sc["unit_cost"] = cfg.spacecraft.unit_cost;
  sc["ox_fuel_ratio"] = cfg.spacecraft.ox_fuel_ratio;
  j["spacecraft"] = sc;

  json players = json::array();
  for (const Player& p : cfg.players) {
    json pj;
    pj["id"] = p.id;
    pj["role"] = p.role == PlayerRole::Coordinator ? "coordinator" : "commercial";
    pj["fleet_per_mission"] = p.fleet_per_mission;
    pj["isru_plant_mass_kg"] = p.isru_plant_mass_kg;
    if (!p.isru_node.empty()) pj["isru_node"] = p.isru_node;
    if (!p.own_demands.empty()) {
      json ds = json::array();
      for (const DemandEntry& e : p.own_demands)
        ds.push_back({{"commodity", e.commodity},
                      {"node", e.node},
                      {"time_days", e.time_days},
                      {"amount", amount_to_json(e.amount)}});
      pj["demands"] = ds;
    }
    players.push_back(std::move(pj));
  }
  j["players"] = players;

  j["deployment"] = {{"total_mass_kg", cfg.deployment_total_kg},
                     {"origin", cfg.deployment_origin},
                     {"destination", cfg.deployment_destination}};
  j["isru"] = {{"productivity_kg_water_per_yr_per_kg_plant", cfg.isru_productivity},
               {"maintenance_rate_per_yr", cfg.maintenance_rate}};
  j["options"] = {{"fleet_accounting", cfg.options.fleet_accounting == FleetAccounting::Fleet
                                           ? "fleet"
                                           : "per-launch"},
                  {"allow_plant_purchase", cfg.options.allow_plant_purchase},
                  {"retain_excess_o2", cfg.options.retain_excess_o2}};
  return j.dump(2) + "\n";
}

namespace {

bool demand_equal(const DemandEntry& a, const DemandEntry& b) {
  return a.player == b.player && a.commodity == b.commodity && a.node == b.node &&
         a.time_days == b.time_days && a.amount == b.amount;
}

}  // namespace

bool scenario_equal(const ScenarioConfig& a, const ScenarioConfig& b) {
  if (a.schema_version != b.schema_version || a.name != b.name) return false;
  if (a.nodes.size() != b.nodes.size() || a.arcs.size() != b.arcs.size() ||
      a.commodities.size() != b.commodities.size() || a.players.size() != b.players.size())
    return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i)
    if (a.nodes[i].id != b.nodes[i].id || a.nodes[i].kind != b.nodes[i].kind) return false;
  for (std::size_t i = 0; i < a.arcs.size(); ++i) {
    const NetworkArc &x = a.arcs[i], &y = b.arcs[i];
    if (x.from != y.from || x.to != y.to || x.kind != y.kind || x.delta_v_kms != y.delta_v_kms ||
        x.tof_days != y.tof_days || x.launch_priced != y.launch_priced)
      return false;
  }
  for (std::size_t i = 0; i < a.commodities.size(); ++i)
    if (a.commodities[i].id != b.commodities[i].id ||
        a.commodities[i].domain != b.commodities[i].domain)
      return false;
  const SpacecraftSpec &sa = a.spacecraft, &sb = b.spacecraft;
  if (sa.dry_mass_kg != sb.dry_mass_kg ||
      sa.propellant_capacity_kg != sb.propellant_capacity_kg ||
      !(sa.payload_capacity_kg == sb.payload_capacity_kg) || sa.isp_s != sb.isp_s ||
      sa.unit_cost != sb.unit_cost || sa.ox_fuel_ratio != sb.ox_fuel_ratio)
    return false;
  for (std::size_t i = 0; i < a.players.size(); ++i) {
    const Player &x = a.players[i], &y = b.players[i];
    if (x.id != y.id || x.role != y.role || x.fleet_per_mission != y.fleet_per_mission ||
        x.isru_plant_mass_kg != y.isru_plant_mass_kg || x.isru_node != y.isru_node)
      return false;
    if (x.own_demands.size() != y.own_demands.size()) return false;
    for (std::size_t k = 0; k < x.own_demands.size(); ++k)
      if (!demand_equal(x.own_demands[k], y.own_demands[k])) return false;
  }
  const CostModel &ca = a.cost_model, &cb = b.cost_model;
  if (ca.launch_cost_per_kg != cb.launch_cost_per_kg ||
      ca.spacecraft_unit_cost != cb.spacecraft_unit_cost ||
      ca.flight_ops_cost != cb.flight_ops_cost || ca.h2_price_per_kg != cb.h2_price_per_kg ||
      ca.o2_price_per_kg != cb.o2_price_per_kg)
    return false;
  if (a.time_grid.step_days != b.time_grid.step_days ||
      a.time_grid.horizon_days != b.time_grid.horizon_days ||
      a.time_grid.mission_windows.intervals != b.time_grid.mission_windows.intervals)
    return false;
  if (a.time_grid.overrides.size() != b.time_grid.overrides.size()) return false;
  for (std::size_t i = 0; i < a.time_grid.overrides.size(); ++i) {
    const WindowOverride &x = a.time_grid.overrides[i], &y = b.time_grid.overrides[i];
    if (x.player != y.player || x.from != y.from || x.to != y.to ||
        x.windows.intervals != y.windows.intervals)
      return false;
  }
  if (a.deployment_total_kg != b.deployment_total_kg ||
      a.deployment_origin != b.deployment_origin ||
      a.deployment_destination != b.deployment_destination ||
      a.isru_productivity != b.isru_productivity || a.maintenance_rate != b.maintenance_rate)
    return false;
  if (a.options.fleet_accounting != b.options.fleet_accounting ||
      a.options.allow_plant_purchase != b.options.allow_plant_purchase ||
      a.options.retain_excess_o2 != b.options.retain_excess_o2)
    return false;
  if (a.expanded_demands.size() != b.expanded_demands.size()) return false;
  for (std::size_t i = 0; i < a.expanded_demands.size(); ++i)
    if (!demand_equal(a.expanded_demands[i], b.expanded_demands[i])) return false;
  return true;
}

std::uint64_t scenario_hash(const ScenarioConfig& cfg) {
  const std::string s = serialize_scenario(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace lunex::model
