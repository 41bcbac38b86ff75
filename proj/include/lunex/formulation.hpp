#pragma once

#include "lunex/milp.hpp"
#include "lunex/model.hpp"
#include "lunex/time_grid.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

namespace lunex::logistics {

// Internal problem units: tonnes for mass, $M for money. Config units (kg, $)
// are converted at the boundary so that constraint coefficients stay within a
// few orders of magnitude of one.
inline constexpr double kKgPerTonne = 1000.0;
inline constexpr double kDollarsPerMillion = 1e6;

enum class ObjectiveMode { MinTotalCost, MaxWelfare };

enum class CostComponent { Launch = 0, Acquisition = 1, FlightOps = 2, Propellant = 3 };
inline constexpr int kNumCostComponents = 4;

struct FlowVariableKey {
  int player = -1;     // index into cfg.players
  int vehicle = 0;     // single spacecraft class
  int edge = -1;       // index into TimeExpandedNetwork::edges
  int commodity = -1;  // index into cfg.commodities
};

struct AssembleSpec {
  std::vector<int> players;   // player indices to include; empty means all
  std::vector<double> alpha;  // per commercial player of cfg (order of commercial_players())
  bool alpha_as_variables = false;
  ObjectiveMode mode = ObjectiveMode::MinTotalCost;
  double budget_cap_musd = milp::kInf;  // Eq-17-style cap, only in MaxWelfare mode
};

/// The assembled MILP plus the metadata needed to interpret its solution.
struct AssembledMilp {
  milp::Problem problem;
  model::TimeExpandedNetwork net;
  std::vector<FlowVariableKey> vars;  // flow variables only, index-aligned with problem
  std::vector<std::array<double, kNumCostComponents>> var_cost;  // $M per unit, per component
  std::vector<int> alpha_vars;   // variable index per commercial player; empty if fixed
  std::vector<int> fleet_vars;   // per included player under fleet accounting, else empty
  std::vector<int> included;     // player indices in inclusion order
  AssembleSpec spec;
  const model::ScenarioConfig* cfg = nullptr;

  int var_of(int player, int edge, int commodity) const;

 private:
  friend AssembledMilp assemble_milp(const model::ScenarioConfig&, const AssembleSpec&);
  std::map<std::tuple<int, int, int>, int> index_;
};

/// Builds the time-expanded multi-commodity flow MILP: mass balance with
/// commodity transformation on inflows, concurrency rows tying mass to
/// integer spacecraft counts, window gating, and per-mode objective/budget.
AssembledMilp assemble_milp(const model::ScenarioConfig& cfg, const AssembleSpec& spec);

struct CostBreakdown {
  double launch = 0.0;
  double acquisition = 0.0;
  double flight_ops = 0.0;
  double propellant = 0.0;
  double total() const { return launch + acquisition + flight_ops + propellant; }
};

struct CostAttribution {
  std::vector<std::pair<std::string, CostBreakdown>> per_player;
  double total = 0.0;  // equals the objective cost term
};

/// Splits an optimal solution's cost by player and component.
CostAttribution attribute_costs(const AssembledMilp& a, const milp::Solution& s);

struct MissionCost {
  bool feasible = false;
  double cost_musd = 0.0;  // incremental cost J; +inf when the assignment is impossible
  milp::SolveStats stats;
};

/// Evaluates mission costs against one scenario, caching standalone costs,
/// per-(player, share) solves and warm-start bases. Thread-safe.
class CostEvaluator {
 public:
  explicit CostEvaluator(const model::ScenarioConfig& cfg,
                         milp::SolverOptions opts = default_solver_options());

  /// Incremental cost for the players in S to complete their alpha-assigned
  /// deployment shares: total cost minus their zero-assignment cost.
  MissionCost mission_cost(const std::vector<int>& player_set,
                           const std::vector<double>& alpha);

  /// J for one player at its own share (coordinator share is 1 - sum alpha).
  MissionCost player_cost(int player_index, double share);

  /// Baseline Q: the coordinator alone carrying the full deployment.
  MissionCost baseline();

  /// Absolute cost of a player's own missions under zero assignment; +inf
  /// when those missions are themselves impossible.
  double standalone_cost(int player_index) { return standalone(player_index); }

  const model::ScenarioConfig& config() const { return *cfg_; }
  milp::SolveStats total_stats() const;
  void set_cache_enabled(bool on) { cache_enabled_ = on; }

  static milp::SolverOptions default_solver_options();

 private:
  MissionCost solve_subset(const std::vector<int>& players, const std::vector<double>& alpha);
  double standalone(int player_index);

  const model::ScenarioConfig* cfg_;
  milp::SolverOptions opts_;
  bool cache_enabled_ = true;
  mutable std::mutex mu_;
  std::map<int, double> standalone_cache_;
  std::map<std::pair<int, double>, MissionCost> share_cache_;
  std::map<int, milp::Basis> warm_;  // per player, most recent optimal basis
  milp::SolveStats stats_;
};

/// One nonzero commodity movement of a solved problem.
struct FlowRecord {
  std::string player;
  std::string vehicle;
  std::string from;
  std::string to;
  int t = 0;
  std::string commodity;
  double amount_kg = 0.0;  // kg, or unit count for discrete commodities
};

std::vector<FlowRecord> extract_flows(const AssembledMilp& a, const milp::Solution& s);
void write_flows_csv(const std::vector<FlowRecord>& flows, std::ostream& os);

struct PhysicsAudit {
  bool ok = true;
  double max_burn_rel_err = 0.0;        // rocket-equation consistency over transport edges
  double max_balance_violation = 0.0;   // re-checked mass balance, config units
  double max_integrality_err = 0.0;     // spacecraft counts vs whole numbers
  std::vector<std::string> notes;
};

/// Independent re-check of an optimal solution: rocket-equation decrements,
/// node mass balance with transformations, spacecraft integrality and fleet
/// caps. Does not consult the solver's own residuals.
PhysicsAudit audit_solution(const AssembledMilp& a, const milp::Solution& s);

}  // namespace lunex::logistics
