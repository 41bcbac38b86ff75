#pragma once

#include "lunex/formulation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace lunex::game {

/// Relative tolerance for feasibility and tie detection on utilities.
inline constexpr double kUtilityTol = 1e-9;

enum class CurveSource { MilpEvaluated, UserSupplied };

/// Piecewise-linear incremental mission cost J(alpha) for one player.
/// Samples are strictly increasing in alpha; J may be +inf where the
/// assignment is impossible. Interpolation against an infinite endpoint, or
/// outside the sampled range, yields +inf.
struct CostCurve {
  std::string player;
  CurveSource source = CurveSource::UserSupplied;
  std::vector<std::pair<double, double>> samples;  // (alpha, J in $M)

  double value(double alpha) const;
  void validate(bool commercial) const;  // throws std::invalid_argument
};

CostCurve read_curve_csv(std::istream& is, const std::string& player);
void write_curve_csv(const CostCurve& c, std::ostream& os);

/// Cost curves for a bargaining instance: the coordinator's J_o as a function
/// of its own residual share, one curve per commercial player, and Q.
struct CurveSet {
  double q_musd = 0.0;
  CostCurve coordinator;
  std::vector<CostCurve> players;
  std::vector<std::string> player_ids;

  std::size_t num_players() const { return players.size(); }
  double j_o(double own_share) const { return coordinator.value(own_share); }
  double j_p(std::size_t k, double alpha_k) const { return players[k].value(alpha_k); }
};

struct UtilityPoint {
  std::vector<double> alpha;
  std::vector<double> theta;
  double u_o = 0.0;
  std::vector<double> u_p;
  std::vector<double> r;  // disagreement utilities: coordinator first, then players
  double welfare = 0.0;
  double nash_product = 0.0;
  bool feasible = false;  // every surplus nonnegative and finite
};

struct IncentiveDesign {
  int scenario = 0;
  bool feasible = false;
  std::string message;  // set when no mutually beneficial design exists
  UtilityPoint best;
  std::vector<UtilityPoint> ties;  // co-optimal designs, lexicographic by alpha
};

// ---- utility algebra ----------------------------------------------------

double utility_coordinator(double q, double j_o_value, const std::vector<double>& alpha,
                           const std::vector<double>& theta);
double utility_player(double q, double j_p_value, double alpha_k, double theta_k);

/// Total welfare U(alpha) = Q - J_o(1 - sum alpha) - sum J_p_k(alpha_k);
/// infinite costs propagate to -inf.
double welfare(const CurveSet& curves, const std::vector<double>& alpha);

/// Membership in the feasible domain: the aggregate incentive cap and the
/// per-player floor (vacuous for alpha_k = 0).
bool omega_contains(const CurveSet& curves, const std::vector<double>& alpha,
                    const std::vector<double>& theta);

/// Equal-utility (equal-surplus, for nonzero r) incentive vector. Players
/// with alpha_k = 0 are excluded from the bargaining set and get theta_k = 0.
std::vector<double> theta_star(const CurveSet& curves, const std::vector<double>& alpha,
                               const std::vector<double>& r = {});

/// Product of surpluses over every player, coordinator included. Zero
/// factors are legal (boundary); negative factors flag infeasibility on the
/// evaluated point, not here.
double nash_product(const UtilityPoint& p);

double maximin_value(const UtilityPoint& p);

/// Utilities, welfare, Nash product and feasibility at one (alpha, theta).
UtilityPoint evaluate_point(const CurveSet& curves, const std::vector<double>& alpha,
                            const std::vector<double>& theta,
                            const std::vector<double>& r = {});

// ---- scenario solvers ----------------------------------------------------

/// Alpha values 0, h, 2h, ..., 1 with exact endpoints.
std::vector<double> grid_values(double resolution);

/// Scenario 1 over cost curves: welfare-maximizing alpha on a simplex grid,
/// theta from the equal-utility formula; ties reported.
IncentiveDesign solve_scenario1(const CurveSet& curves, double resolution = 0.01,
                                const std::vector<double>& r = {});

/// Scenario 2: alpha fixed, theta from the equal-utility formula.
IncentiveDesign solve_scenario2(const CurveSet& curves, const std::vector<double>& alpha,
                                const std::vector<double>& r = {});

/// Scenario 3: theta fixed, exhaustive simplex-grid search maximizing the
/// Nash product of the resulting utilities.
IncentiveDesign solve_scenario3(const CurveSet& curves, const std::vector<double>& theta,
                                double resolution = 0.01, const std::vector<double>& r = {});

// ---- curves from the logistics model --------------------------------------

/// Evaluates mission_cost on each grid point for one player (by player index
/// into cfg.players). Infeasible points carry +inf; solver-limited points are
/// dropped as unevaluated.
CostCurve cost_curve_from_milp(logistics::CostEvaluator& ev, int player_index,
                               const std::vector<double>& grid);

/// Q plus curves for the coordinator and every commercial player. Workers
/// default to machine parallelism, one player per thread; results do not
/// depend on the worker count.
CurveSet build_curves(logistics::CostEvaluator& ev, const std::vector<double>& grid);
CurveSet build_curves(logistics::CostEvaluator& ev, const std::vector<double>& grid,
                      int workers);

/// Scenario 1 through the joint MILP with alpha embedded as continuous
/// variables (the numerical route); curves are still used to recover theta.
IncentiveDesign solve_scenario1_joint(logistics::CostEvaluator& ev);

}  // namespace lunex::game
