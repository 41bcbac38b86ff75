#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lunex::model {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class NodeKind { BodySurface, Orbit, LagrangePoint };

struct NetworkNode {
  std::string id;
  NodeKind kind = NodeKind::Orbit;
};

enum class ArcKind { Transport, Holdover, Launch };

struct NetworkArc {
  std::string from;
  std::string to;
  ArcKind kind = ArcKind::Transport;
  double delta_v_kms = 0.0;
  int tof_days = 0;
  bool launch_priced = false;  // costed per kg instead of by the rocket equation
};

enum class CommodityDomain { Continuous, Discrete };

struct Commodity {
  std::string id;
  CommodityDomain domain = CommodityDomain::Continuous;
};

// Commodity ids used by the bundled scenarios and the demand expansion.
namespace commodity {
inline constexpr const char* kInfrastructure = "infrastructure-payload";
inline constexpr const char* kH2 = "propellant-H2";
inline constexpr const char* kO2 = "propellant-O2";
inline constexpr const char* kWater = "water";
inline constexpr const char* kPlant = "ISRU-plant";
inline constexpr const char* kSpares = "maintenance-spares";
inline constexpr const char* kSpacecraft = "spacecraft-unit";
}  // namespace commodity

struct SpacecraftSpec {
  double dry_mass_kg = 6000.0;
  double propellant_capacity_kg = 54000.0;
  double payload_capacity_kg = kInf;  // unbounded unless the config says otherwise
  double isp_s = 420.0;
  double unit_cost = 148e6;           // defaults from CostModel.spacecraft_unit_cost
  double ox_fuel_ratio = 5.5;         // O2:H2 by mass
};

enum class PlayerRole { Coordinator, Commercial };

/// One supply (positive) or demand (negative) of a commodity at a node and
/// time. +inf marks an open supply.
struct DemandEntry {
  std::string player;
  std::string commodity;
  std::string node;
  int time_days = 0;
  double amount = 0.0;
};

struct Player {
  std::string id;
  PlayerRole role = PlayerRole::Commercial;
  int fleet_per_mission = 2;
  double isru_plant_mass_kg = 0.0;
  std::string isru_node;  // required when a plant is deployed
  std::vector<DemandEntry> own_demands;
};

struct CostModel {
  double launch_cost_per_kg = 3500.0;
  double spacecraft_unit_cost = 148e6;
  double flight_ops_cost = 1e6;
  double h2_price_per_kg = 5.94;
  double o2_price_per_kg = 0.09;
};

/// Closed day intervals during which flights may depart.
struct WindowSet {
  std::vector<std::pair<int, int>> intervals;

  bool contains(int t) const {
    for (const auto& [a, b] : intervals)
      if (t >= a && t <= b) return true;
    return false;
  }
  bool empty() const { return intervals.empty(); }
};

/// Narrows the global windows for a specific player and/or arc (W_zij).
struct WindowOverride {
  std::optional<std::string> player;  // unset: applies to every player
  std::optional<std::string> from;    // unset: applies to every arc
  std::optional<std::string> to;
  WindowSet windows;
};

struct TimeGrid {
  int step_days = 30;
  int horizon_days = 720;
  WindowSet mission_windows;  // defaults to one window per deployment year
  std::vector<WindowOverride> overrides;

  int num_layers() const { return horizon_days / step_days + 1; }
};

enum class FleetAccounting {
  PerLaunch,  // every launched spacecraft unit is bought
  Fleet,      // the fleet is bought once at its peak per-window launch count
};

struct ScenarioOptions {
  FleetAccounting fleet_accounting = FleetAccounting::PerLaunch;
  bool allow_plant_purchase = false;
  bool retain_excess_o2 = false;
};

struct ScenarioConfig {
  int schema_version = 1;
  std::string name;

  std::vector<NetworkNode> nodes;
  std::vector<NetworkArc> arcs;
  std::vector<Commodity> commodities;
  SpacecraftSpec spacecraft;
  std::vector<Player> players;
  CostModel cost_model;
  TimeGrid time_grid;

  double deployment_total_kg = 30000.0;  // D, per mission window
  std::string deployment_origin = "Earth";
  std::string deployment_destination = "Moon";
  double isru_productivity = 5.0;   // kg water per year per kg plant
  double maintenance_rate = 0.05;   // fraction of plant mass per year
  ScenarioOptions options;

  /// Fixed (alpha-independent) supplies and demands: player-declared entries
  /// plus the fleet, plant, maintenance and open-supply rows generated at
  /// load time. Deployment demands are injected separately per alpha.
  std::vector<DemandEntry> expanded_demands;

  /// Human-readable notes about every default the loader filled in; recorded
  /// in run manifests.
  std::vector<std::string> assumed_defaults;

  int find_node(const std::string& id) const;
  int find_commodity(const std::string& id) const;
  int find_player(const std::string& id) const;
  const Player* coordinator() const;
  std::vector<int> commercial_players() const;  // indices into players

  /// Departure windows for player z on the given arc after overrides.
  WindowSet windows_for(const std::string& player_id, const NetworkArc& arc) const;
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct Diagnostic {
  std::string entity;
  std::string message;
};

/// Parses and expands a scenario file. Throws ConfigError with a field locus
/// on parse errors, unresolved references and sign-convention violations.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig load_scenario_from_string(const std::string& text, const std::string& origin);

/// Checks every structural invariant; an empty result means the scenario is
/// well formed.
std::vector<Diagnostic> validate_scenario(const ScenarioConfig& cfg);

/// Serializes to the documented config format; load_scenario_from_string on
/// the result reproduces the config field-by-field.
std::string serialize_scenario(const ScenarioConfig& cfg);

bool scenario_equal(const ScenarioConfig& a, const ScenarioConfig& b);

/// FNV-1a hash of the canonical serialized form; used by run manifests.
std::uint64_t scenario_hash(const ScenarioConfig& cfg);

}  // namespace lunex::model
