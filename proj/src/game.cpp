#include "lunex/game.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>
#include <stdexcept>

namespace lunex::game {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAlphaTol = 1e-12;
}  // namespace

double CostCurve::value(double alpha) const {
  if (samples.empty()) return kInf;
  const double lo = samples.front().first, hi = samples.back().first;
  if (alpha < lo - 1e-9 || alpha > hi + 1e-9) return kInf;
  alpha = std::min(std::max(alpha, lo), hi);
  // binary search for the bracketing segment
  std::size_t a = 0, b = samples.size() - 1;
  while (b - a > 1) {
    const std::size_t mid = (a + b) / 2;
    if (samples[mid].first <= alpha) a = mid;
    else b = mid;
  }
  if (std::abs(alpha - samples[a].first) < 1e-12) return samples[a].second;
  if (std::abs(alpha - samples[b].first) < 1e-12) return samples[b].second;
  const double ja = samples[a].second, jb = samples[b].second;
  if (!std::isfinite(ja) || !std::isfinite(jb)) return kInf;
  const double t = (alpha - samples[a].first) / (samples[b].first - samples[a].first);
  return ja + t * (jb - ja);
}

void CostCurve::validate(bool commercial) const {
  if (samples.empty()) throw std::invalid_argument("curve " + player + ": no samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& [a, j] = samples[i];
    if (a < -1e-12 || a > 1.0 + 1e-12)
      throw std::invalid_argument("curve " + player + ": alpha outside [0, 1]");
    if (i > 0 && a <= samples[i - 1].first)
      throw std::invalid_argument("curve " + player + ": alpha must be strictly increasing");
    if (std::isnan(j) || (std::isfinite(j) && j < -1e-9))
      throw std::invalid_argument("curve " + player + ": costs must be nonnegative or +inf");
  }
  if (commercial && samples.front().first < 1e-12 &&
      std::abs(samples.front().second) > 1e-6)
    throw std::invalid_argument("curve " + player + ": commercial players have J(0) = 0");
}

CostCurve read_curve_csv(std::istream& is, const std::string& player) {
  CostCurve c;
  c.player = player;
  c.source = CurveSource::UserSupplied;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.find("alpha") != std::string::npos) continue;  // header row
    }
    std::istringstream ls(line);
    std::string alpha_s, cost_s, feas_s;
    if (!std::getline(ls, alpha_s, ',') || !std::getline(ls, cost_s, ','))
      throw std::invalid_argument("curve csv: malformed line: " + line);
    std::getline(ls, feas_s, ',');
    const double alpha = std::stod(alpha_s);
    bool feasible = true;
    if (!feas_s.empty()) feasible = feas_s == "1" || feas_s == "true";
    double cost = kInf;
    if (feasible) cost = cost_s == "inf" ? kInf : std::stod(cost_s);
    c.samples.emplace_back(alpha, cost);
  }
  std::sort(c.samples.begin(), c.samples.end());
  return c;
}

void write_curve_csv(const CostCurve& c, std::ostream& os) {
  os << "alpha,cost,feasible\n";
  char buf[64];
  for (const auto& [a, j] : c.samples) {
    std::snprintf(buf, sizeof buf, "%.9g", a);
    os << buf << ',';
    if (std::isfinite(j)) {
      std::snprintf(buf, sizeof buf, "%.9g", j);
      os << buf << ",1\n";
    } else {
      os << "inf,0\n";
    }
  }
}

double utility_coordinator(double q, double j_o_value, const std::vector<double>& alpha,
                           const std::vector<double>& theta) {
  double incentives = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) incentives += alpha[k] * theta[k] * q;
  return q - j_o_value - incentives;
}

double utility_player(double q, double j_p_value, double alpha_k, double theta_k) {
  return alpha_k * theta_k * q - j_p_value;
}

namespace {

double alpha_sum(const std::vector<double>& alpha) {
  double s = 0.0;
  for (double a : alpha) s += a;
  return s;
}

}  // namespace

double welfare(const CurveSet& curves, const std::vector<double>& alpha) {
  const double jo = curves.j_o(1.0 - alpha_sum(alpha));
  if (!std::isfinite(jo)) return -kInf;
  double u = curves.q_musd - jo;
  for (std::size_t k = 0; k < curves.num_players(); ++k) {
    const double jp = curves.j_p(k, k < alpha.size() ? alpha[k] : 0.0);
    if (!std::isfinite(jp)) return -kInf;
    u -= jp;
  }
  return u;
}

bool omega_contains(const CurveSet& curves, const std::vector<double>& alpha,
                    const std::vector<double>& theta) {
  const double q = curves.q_musd;
  const double jo = curves.j_o(1.0 - alpha_sum(alpha));
  if (!std::isfinite(jo) || q <= 0.0) return false;
  double lhs = 0.0;
  for (std::size_t k = 0; k < curves.num_players(); ++k)
    lhs += (k < alpha.size() ? alpha[k] : 0.0) * (k < theta.size() ? theta[k] : 0.0);
  const double tol = kUtilityTol * std::max(1.0, q);
  if (lhs > (q - jo) / q + tol / q) return false;
  for (std::size_t k = 0; k < curves.num_players(); ++k) {
    const double ak = k < alpha.size() ? alpha[k] : 0.0;
    if (ak <= kAlphaTol) continue;  // the floor is vacuous for nonparticipants
    const double jp = curves.j_p(k, ak);
    if (!std::isfinite(jp)) return false;
    const double tk = k < theta.size() ? theta[k] : 0.0;
    if (tk < jp / (ak * q) - tol / (ak * q)) return false;
  }
  return true;
}

std::vector<double> theta_star(const CurveSet& curves, const std::vector<double>& alpha,
                               const std::vector<double>& r) {
  const double q = curves.q_musd;
  const std::size_t K = curves.num_players();
  std::vector<double> theta(K, 0.0);
  const double jo = curves.j_o(1.0 - alpha_sum(alpha));
  if (!std::isfinite(jo) || q <= 0.0) return theta;

  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < K; ++k)
    if (k < alpha.size() && alpha[k] > kAlphaTol) active.push_back(k);
  const double n = static_cast<double>(active.size()) + 1.0;

  double sum_jp = 0.0, sum_r = r.empty() ? 0.0 : r[0];
  for (std::size_t k : active) {
    const double jp = curves.j_p(k, alpha[k]);
    if (!std::isfinite(jp)) return theta;
    sum_jp += jp;
    if (k + 1 < r.size()) sum_r += r[k + 1];
  }
  const double total = curves.q_musd - jo - sum_jp;  // welfare restricted to active players
  const double surplus_share = (total - sum_r) / n;
  for (std::size_t k : active) {
    const double jp = curves.j_p(k, alpha[k]);
    const double rk = k + 1 < r.size() ? r[k + 1] : 0.0;
    theta[k] = (jp + rk + surplus_share) / (alpha[k] * q);
  }
  return theta;
}

double nash_product(const UtilityPoint& p) {
  double prod = p.u_o - (p.r.empty() ? 0.0 : p.r[0]);
  for (std::size_t k = 0; k < p.u_p.size(); ++k)
    prod *= p.u_p[k] - (k + 1 < p.r.size() ? p.r[k + 1] : 0.0);
  return prod;
}

double maximin_value(const UtilityPoint& p) {
  double m = p.u_o;
  for (double u : p.u_p) m = std::min(m, u);
  return m;
}

UtilityPoint evaluate_point(const CurveSet& curves, const std::vector<double>& alpha,
                            const std::vector<double>& theta, const std::vector<double>& r) {
  UtilityPoint p;
  p.alpha = alpha;
  p.alpha.resize(curves.num_players(), 0.0);
  p.theta = theta;
  p.theta.resize(curves.num_players(), 0.0);
  p.r = r;
  p.r.resize(curves.num_players() + 1, 0.0);

  const double q = curves.q_musd;
  const double jo = curves.j_o(1.0 - alpha_sum(p.alpha));
  p.feasible = std::isfinite(jo);
  p.u_o = std::isfinite(jo) ? utility_coordinator(q, jo, p.alpha, p.theta) : -kInf;
  p.u_p.resize(curves.num_players(), 0.0);
  for (std::size_t k = 0; k < curves.num_players(); ++k) {
    const double jp = curves.j_p(k, p.alpha[k]);
    if (!std::isfinite(jp)) {
      p.u_p[k] = -kInf;
      p.feasible = false;
      continue;
    }
    p.u_p[k] = utility_player(q, jp, p.alpha[k], p.theta[k]);
  }
  p.welfare = welfare(curves, p.alpha);
  p.nash_product = nash_product(p);
  const double tol = kUtilityTol * std::max(1.0, std::abs(q));
  if (p.u_o < p.r[0] - tol) p.feasible = false;
  for (std::size_t k = 0; k < p.u_p.size(); ++k)
    if (p.u_p[k] < p.r[k + 1] - tol) p.feasible = false;
  return p;
}

std::vector<double> grid_values(double resolution) {
  if (resolution <= 0.0 || resolution > 1.0)
    throw std::invalid_argument("grid resolution must lie in (0, 1]");
  std::vector<double> out;
  const int n = static_cast<int>(std::round(1.0 / resolution));
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i) out.push_back(static_cast<double>(i) * resolution);
  out.push_back(1.0);
  return out;
}

namespace {

// Enumerates alpha vectors on the simplex grid (componentwise multiples of the
// resolution with sum <= 1) in lexicographic order.
void enumerate_simplex(std::size_t K, const std::vector<double>& values, double budget_tol,
                       std::vector<double>& current,
                       const std::function<void(const std::vector<double>&)>& fn) {
  if (current.size() == K) {
    fn(current);
    return;
  }
  double used = 0.0;
  for (double a : current) used += a;
  for (double v : values) {
    if (used + v > 1.0 + budget_tol) break;
    current.push_back(v);
    enumerate_simplex(K, values, budget_tol, current, fn);
    current.pop_back();
  }
}

bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] < b[i] - 1e-15) return true;
    if (a[i] > b[i] + 1e-15) return false;
  }
  return false;
}

}  // namespace

IncentiveDesign solve_scenario1(const CurveSet& curves, double resolution,
                                const std::vector<double>& r) {
  IncentiveDesign d;
  d.scenario = 1;
  const std::size_t K = curves.num_players();
  const std::vector<double> values = grid_values(resolution);
  double best_u = -kInf;
  std::vector<std::vector<double>> winners;
  std::vector<double> current;
  const double tie_tol = kUtilityTol * std::max(1.0, std::abs(curves.q_musd));
  enumerate_simplex(K, values, resolution * 1e-9, current, [&](const std::vector<double>& a) {
    const double u = welfare(curves, a);
    if (!std::isfinite(u)) return;
    if (u > best_u + tie_tol) {
      best_u = u;
      winners.clear();
      winners.push_back(a);
    } else if (u >= best_u - tie_tol) {
      winners.push_back(a);
    }
  });
  double r_total = 0.0;
  for (double v : r) r_total += v;
  if (winners.empty() || best_u < r_total - tie_tol) {
    d.feasible = false;
    d.message = "no mutually beneficial design: welfare is negative at every alpha";
    return d;
  }
  std::sort(winners.begin(), winners.end(), lex_less);
  for (const auto& a : winners) {
    const std::vector<double> th = theta_star(curves, a, r);
    d.ties.push_back(evaluate_point(curves, a, th, r));
  }
  d.best = d.ties.front();
  d.feasible = d.best.feasible;
  if (!d.feasible) d.message = "equal-utility design fell outside the feasible domain";
  return d;
}

IncentiveDesign solve_scenario2(const CurveSet& curves, const std::vector<double>& alpha,
                                const std::vector<double>& r) {
  IncentiveDesign d;
  d.scenario = 2;
  const double u = welfare(curves, alpha);
  double r_total = 0.0;
  for (double v : r) r_total += v;
  const double tol = kUtilityTol * std::max(1.0, std::abs(curves.q_musd));
  if (!std::isfinite(u)) {
    d.feasible = false;
    d.message = "assigned allocation is not transportable (infinite mission cost)";
    return d;
  }
  if (u < r_total - tol) {
    d.feasible = false;
    d.message = "no mutually beneficial design at the given alpha: welfare below disagreement";
    return d;
  }
  const std::vector<double> th = theta_star(curves, alpha, r);
  d.best = evaluate_point(curves, alpha, th, r);
  d.ties.push_back(d.best);
  d.feasible = d.best.feasible;
  if (!d.feasible) d.message = "equal-utility design fell outside the feasible domain";
  return d;
}

IncentiveDesign solve_scenario3(const CurveSet& curves, const std::vector<double>& theta,
                                double resolution, const std::vector<double>& r) {
  IncentiveDesign d;
  d.scenario = 3;
  const std::size_t K = curves.num_players();
  const std::vector<double> values = grid_values(resolution);
  double best = -kInf;
  std::vector<UtilityPoint> winners;
  std::vector<double> current;
  const double tie_tol = kUtilityTol * std::max(1.0, std::abs(curves.q_musd));
  enumerate_simplex(K, values, resolution * 1e-9, current, [&](const std::vector<double>& a) {
    UtilityPoint p = evaluate_point(curves, a, theta, r);
    if (!p.feasible) return;
    if (p.nash_product > best + tie_tol) {
      best = p.nash_product;
      winners.clear();
      winners.push_back(std::move(p));
    } else if (p.nash_product >= best - tie_tol) {
      winners.push_back(std::move(p));
    }
  });
  if (winners.empty()) {
    d.feasible = false;
    d.message = "no mutually beneficial design under the given incentive budget";
    return d;
  }
  std::sort(winners.begin(), winners.end(),
            [](const UtilityPoint& x, const UtilityPoint& y) { return lex_less(x.alpha, y.alpha); });
  d.ties = std::move(winners);
  d.best = d.ties.front();
  d.feasible = true;
  return d;
}

CostCurve cost_curve_from_milp(logistics::CostEvaluator& ev, int player_index,
                               const std::vector<double>& grid) {
  CostCurve c;
  c.player = ev.config().players[static_cast<std::size_t>(player_index)].id;
  c.source = CurveSource::MilpEvaluated;
  for (double a : grid) {
    const logistics::MissionCost mc = ev.player_cost(player_index, a);
    if (!mc.feasible && std::isnan(mc.cost_musd)) continue;  // solver limit: unevaluated
    c.samples.emplace_back(a, mc.feasible ? mc.cost_musd : kInf);
  }
  return c;
}

CurveSet build_curves(logistics::CostEvaluator& ev, const std::vector<double>& grid) {
  return build_curves(ev, grid, 0);
}

CurveSet build_curves(logistics::CostEvaluator& ev, const std::vector<double>& grid,
                      int workers) {
  CurveSet set;
  const model::ScenarioConfig& cfg = ev.config();
  const model::Player* coord = cfg.coordinator();
  if (coord == nullptr) throw std::invalid_argument("scenario has no coordinator");
  const logistics::MissionCost q = ev.baseline();
  if (!q.feasible)
    throw std::runtime_error("baseline mission is infeasible: Q is undefined");
  set.q_musd = q.cost_musd;

  // one worker per player: warm-start chains stay deterministic because each
  // player's grid is walked in order on a single thread
  std::vector<int> order;
  order.push_back(cfg.find_player(coord->id));
  for (int k : cfg.commercial_players()) order.push_back(k);
  std::vector<CostCurve> curves(order.size());
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(order.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < order.size();
           i += static_cast<std::size_t>(workers))
        curves[i] = cost_curve_from_milp(ev, order[i], grid);
    });
  }
  for (auto& t : pool) t.join();

  set.coordinator = std::move(curves[0]);
  for (std::size_t i = 1; i < order.size(); ++i) {
    set.players.push_back(std::move(curves[i]));
    set.player_ids.push_back(cfg.players[static_cast<std::size_t>(order[i])].id);
  }
  return set;
}

IncentiveDesign solve_scenario1_joint(logistics::CostEvaluator& ev) {
  IncentiveDesign d;
  d.scenario = 1;
  const model::ScenarioConfig& cfg = ev.config();
  const logistics::MissionCost q = ev.baseline();
  if (!q.feasible) {
    d.feasible = false;
    d.message = "baseline mission is infeasible: Q is undefined";
    return d;
  }
  const std::vector<int> commercial = cfg.commercial_players();

  // total utility >= 0 caps the absolute cost at Q plus every player's
  // own-mission (zero-assignment) cost
  double standalone_total = 0.0;
  for (std::size_t z = 0; z < cfg.players.size(); ++z)
    standalone_total += ev.standalone_cost(static_cast<int>(z));
  if (!std::isfinite(standalone_total)) {
    d.feasible = false;
    d.message = "a player's own missions are infeasible";
    return d;
  }

  logistics::AssembleSpec spec;
  spec.alpha_as_variables = true;
  spec.mode = logistics::ObjectiveMode::MaxWelfare;
  spec.budget_cap_musd = q.cost_musd + standalone_total;
  logistics::AssembledMilp a = logistics::assemble_milp(cfg, spec);

  milp::Solution s =
      milp::solve_milp(a.problem, logistics::CostEvaluator::default_solver_options());
  if (s.status != milp::Status::Optimal) {
    d.feasible = false;
    d.message = s.status == milp::Status::Infeasible
                    ? "no mutually beneficial design: the budget cap admits no plan"
                    : "solver limit reached on the joint problem";
    return d;
  }
  std::vector<double> alpha(commercial.size(), 0.0);
  for (std::size_t k = 0; k < a.alpha_vars.size() && k < alpha.size(); ++k)
    alpha[k] = s.values[static_cast<std::size_t>(a.alpha_vars[k])];

  // per-player incremental costs from the cost attribution of the joint plan
  const logistics::CostAttribution attr = logistics::attribute_costs(a, s);
  double coord_cost = 0.0;
  std::vector<double> player_costs(commercial.size(), 0.0);
  for (const auto& [id, br] : attr.per_player) {
    const int z = cfg.find_player(id);
    const double incremental = std::max(0.0, br.total() - ev.standalone_cost(z));
    if (cfg.players[static_cast<std::size_t>(z)].role == model::PlayerRole::Coordinator)
      coord_cost = incremental;
    else
      for (std::size_t k = 0; k < commercial.size(); ++k)
        if (commercial[k] == z) player_costs[k] = incremental;
  }
  const double share = 1.0 - alpha_sum(alpha);  // same summation order as evaluate_point

  CurveSet curves;
  curves.q_musd = q.cost_musd;
  curves.coordinator.player = cfg.coordinator()->id;
  curves.coordinator.source = CurveSource::MilpEvaluated;
  curves.coordinator.samples.emplace_back(share, coord_cost);
  for (std::size_t k = 0; k < commercial.size(); ++k) {
    CostCurve c;
    c.player = cfg.players[static_cast<std::size_t>(commercial[k])].id;
    c.source = CurveSource::MilpEvaluated;
    c.samples.emplace_back(alpha[k], player_costs[k]);
    curves.player_ids.push_back(c.player);
    curves.players.push_back(std::move(c));
  }
  const std::vector<double> th = theta_star(curves, alpha);
  d.best = evaluate_point(curves, alpha, th);
  d.ties.push_back(d.best);
  d.feasible = d.best.feasible && d.best.welfare >= -kUtilityTol;
  if (!d.feasible) d.message = "no mutually beneficial design";
  return d;
}

}  // namespace lunex::game
