#include "lunex/formulation.hpp"

#include "lunex/physics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>

namespace lunex::logistics {

using model::ArcKind;
using model::CommodityDomain;
using model::DemandEntry;
using model::ExpandedEdge;
using model::FleetAccounting;
using model::Player;
using model::ScenarioConfig;

namespace {

struct Coms {
  int infra = -1, h2 = -1, o2 = -1, water = -1, plant = -1, spares = -1, sc = -1;
};

Coms resolve_commodities(const ScenarioConfig& cfg) {
  Coms c;
  c.infra = cfg.find_commodity(model::commodity::kInfrastructure);
  c.h2 = cfg.find_commodity(model::commodity::kH2);
  c.o2 = cfg.find_commodity(model::commodity::kO2);
  c.water = cfg.find_commodity(model::commodity::kWater);
  c.plant = cfg.find_commodity(model::commodity::kPlant);
  c.spares = cfg.find_commodity(model::commodity::kSpares);
  c.sc = cfg.find_commodity(model::commodity::kSpacecraft);
  return c;
}

bool is_mass_commodity(const ScenarioConfig& cfg, int c) {
  return cfg.commodities[static_cast<std::size_t>(c)].domain == CommodityDomain::Continuous;
}

// Sparse arc transformation: out[c] = sum_c' G[c][c'] in[c'].
struct Transform {
  // pairs (c_out, c_in, coef) deviating from identity; identity entries are
  // implied for commodities not listed in `zeroed`.
  std::vector<std::tuple<int, int, double>> extra;
  std::vector<int> zeroed;  // commodities whose identity term is dropped

  double coef(int c_out, int c_in) const {
    double g = (c_out == c_in) ? 1.0 : 0.0;
    for (int z : zeroed)
      if (z == c_out && c_out == c_in) g = 0.0;
    for (const auto& [o, i, v] : extra)
      if (o == c_out && i == c_in) g += v;
    return g;
  }
};

struct BuildContext {
  const ScenarioConfig* cfg = nullptr;
  Coms coms;
  std::vector<int> retire_boundaries;  // window starts after the first
  std::set<int> production_nodes;
  double dry_t = 0.0;
  double burn_frac_cache[2] = {0, 0};
};

// Transformation applied to flows arriving over `edge` for any player.
Transform edge_transform(const BuildContext& ctx, const ExpandedEdge& edge) {
  const ScenarioConfig& cfg = *ctx.cfg;
  Transform g;
  if (edge.holdover) {
    bool crosses = false;
    for (int s : ctx.retire_boundaries)
      if (edge.depart < s && s <= edge.arrive) crosses = true;
    if (crosses && ctx.coms.sc >= 0) g.zeroed.push_back(ctx.coms.sc);
    if (ctx.production_nodes.count(edge.from) != 0 && ctx.coms.plant >= 0) {
      const double steps_per_year = 365.0 / cfg.time_grid.step_days;
      const double water_per_plant = cfg.isru_productivity / steps_per_year;
      const double o2_share =
          cfg.options.retain_excess_o2
              ? 8.0 / 9.0
              : std::min(8.0, cfg.spacecraft.ox_fuel_ratio) / 9.0;
      if (ctx.coms.h2 >= 0)
        g.extra.emplace_back(ctx.coms.h2, ctx.coms.plant, water_per_plant / 9.0);
      if (ctx.coms.o2 >= 0)
        g.extra.emplace_back(ctx.coms.o2, ctx.coms.plant, water_per_plant * o2_share);
    }
    return g;
  }
  const model::NetworkArc& arc = cfg.arcs[static_cast<std::size_t>(edge.arc)];
  if (arc.launch_priced || arc.delta_v_kms <= 0.0) return g;  // identity
  const double f = burn_fraction(arc.delta_v_kms, cfg.spacecraft.isp_s);
  const double r = cfg.spacecraft.ox_fuel_ratio;
  const double fh = f / (1.0 + r);
  const double fo = f * r / (1.0 + r);
  for (std::size_t c = 0; c < cfg.commodities.size(); ++c) {
    const int ci = static_cast<int>(c);
    double mass_coef = 0.0;
    if (ci == ctx.coms.sc)
      mass_coef = ctx.dry_t;
    else if (is_mass_commodity(cfg, ci))
      mass_coef = 1.0;
    else
      continue;
    if (ctx.coms.h2 >= 0) g.extra.emplace_back(ctx.coms.h2, ci, -fh * mass_coef);
    if (ctx.coms.o2 >= 0) g.extra.emplace_back(ctx.coms.o2, ci, -fo * mass_coef);
  }
  return g;
}

}  // namespace

int AssembledMilp::var_of(int player, int edge, int commodity) const {
  auto it = index_.find({player, edge, commodity});
  return it == index_.end() ? -1 : it->second;
}

AssembledMilp assemble_milp(const ScenarioConfig& cfg, const AssembleSpec& spec) {
  AssembledMilp out;
  out.cfg = &cfg;
  out.spec = spec;
  out.net = model::expand_time_grid(cfg);
  const model::TimeExpandedNetwork& net = out.net;

  BuildContext ctx;
  ctx.cfg = &cfg;
  ctx.coms = resolve_commodities(cfg);
  ctx.dry_t = cfg.spacecraft.dry_mass_kg / kKgPerTonne;
  for (std::size_t w = 1; w < cfg.time_grid.mission_windows.intervals.size(); ++w)
    ctx.retire_boundaries.push_back(cfg.time_grid.mission_windows.intervals[w].first);
  for (const Player& p : cfg.players)
    if (!p.isru_node.empty()) {
      const int n = cfg.find_node(p.isru_node);
      if (n >= 0) ctx.production_nodes.insert(n);
    }

  // included players, in config order
  if (spec.players.empty()) {
    for (std::size_t i = 0; i < cfg.players.size(); ++i) out.included.push_back(static_cast<int>(i));
  } else {
    out.included = spec.players;
    std::sort(out.included.begin(), out.included.end());
  }

  const std::vector<int> commercial = cfg.commercial_players();
  std::vector<double> alpha(commercial.size(), 0.0);
  for (std::size_t k = 0; k < spec.alpha.size() && k < alpha.size(); ++k) alpha[k] = spec.alpha[k];
  const double alpha_sum = [&] {
    double s = 0.0;
    for (double a : alpha) s += a;
    return s;
  }();

  const int num_coms = static_cast<int>(cfg.commodities.size());
  const int num_nodes = static_cast<int>(cfg.nodes.size());
  const int num_edges = static_cast<int>(net.edges.size());

  // ---- static reachability per (player, commodity): nodes where a commodity
  // can be nonzero, seeded by supplies and deployment, closed over open arcs
  // and on-site production. Variables outside this set are pruned.
  const int origin = cfg.find_node(cfg.deployment_origin);
  const int destination = cfg.find_node(cfg.deployment_destination);
  std::vector<std::vector<char>> avail(cfg.players.size() * static_cast<std::size_t>(num_coms));
  for (auto& v : avail) v.assign(static_cast<std::size_t>(num_nodes), 0);
  auto avail_of = [&](int z, int c) -> std::vector<char>& {
    return avail[static_cast<std::size_t>(z) * static_cast<std::size_t>(num_coms) +
                 static_cast<std::size_t>(c)];
  };
  for (const DemandEntry& e : cfg.expanded_demands) {
    if (e.amount <= 0.0) continue;
    const int z = cfg.find_player(e.player);
    const int c = cfg.find_commodity(e.commodity);
    const int n = cfg.find_node(e.node);
    if (z >= 0 && c >= 0 && n >= 0) avail_of(z, c)[static_cast<std::size_t>(n)] = 1;
  }
  if (ctx.coms.infra >= 0 && origin >= 0)
    for (std::size_t z = 0; z < cfg.players.size(); ++z)
      avail_of(static_cast<int>(z), ctx.coms.infra)[static_cast<std::size_t>(origin)] = 1;

  // per-(player, arc) departure openness
  std::vector<std::vector<char>> arc_open(cfg.players.size());
  for (std::size_t z = 0; z < cfg.players.size(); ++z) {
    arc_open[z].assign(cfg.arcs.size(), 0);
    for (std::size_t a = 0; a < cfg.arcs.size(); ++a) {
      const model::WindowSet w = cfg.windows_for(cfg.players[z].id, cfg.arcs[a]);
      arc_open[z][a] = cfg.arcs[a].kind == ArcKind::Holdover || !w.empty() ? 1 : 0;
    }
  }
  for (std::size_t z = 0; z < cfg.players.size(); ++z) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t a = 0; a < cfg.arcs.size(); ++a) {
        if (!arc_open[z][a]) continue;
        const model::NetworkArc& arc = cfg.arcs[a];
        const int from = cfg.find_node(arc.from), to = cfg.find_node(arc.to);
        if (from < 0 || to < 0) continue;
        for (int c = 0; c < num_coms; ++c) {
          auto& av = avail_of(static_cast<int>(z), c);
          if (av[static_cast<std::size_t>(from)] && !av[static_cast<std::size_t>(to)]) {
            av[static_cast<std::size_t>(to)] = 1;
            changed = true;
          }
        }
      }
      // plant production creates propellant on site
      if (ctx.coms.plant >= 0) {
        for (int n : ctx.production_nodes) {
          if (!avail_of(static_cast<int>(z), ctx.coms.plant)[static_cast<std::size_t>(n)]) continue;
          for (int c : {ctx.coms.h2, ctx.coms.o2}) {
            if (c < 0) continue;
            auto& av = avail_of(static_cast<int>(z), c);
            if (!av[static_cast<std::size_t>(n)]) {
              av[static_cast<std::size_t>(n)] = 1;
              changed = true;
            }
          }
        }
      }
    }
  }

  // ---- variables
  milp::Problem& p = out.problem;
  const double fh2 = cfg.cost_model.h2_price_per_kg * kKgPerTonne / kDollarsPerMillion;
  const double fo2 = cfg.cost_model.o2_price_per_kg * kKgPerTonne / kDollarsPerMillion;
  const double launch_per_t = cfg.cost_model.launch_cost_per_kg * kKgPerTonne / kDollarsPerMillion;
  const double unit_cost_m = cfg.spacecraft.unit_cost / kDollarsPerMillion;
  const double ops_m = cfg.cost_model.flight_ops_cost / kDollarsPerMillion;

  milp::LinearExpr objective;
  auto add_cost = [&](int var, CostComponent comp, double musd) {
    if (musd == 0.0) return;
    out.var_cost[static_cast<std::size_t>(var)][static_cast<int>(comp)] += musd;
    objective.push_back({var, musd});
  };

  // Integer totals of spacecraft movements per (player, arc, window). These
  // mirror sums of the flow columns, so they change no solution set, but they
  // give most-fractional branching an aggregate handle: fixing a per-edge
  // count just shifts the fraction to a sibling edge, fixing the total does
  // not. Declared first so equal branching scores resolve toward them.
  struct AggKey {
    int z, arc, window, var;
  };
  std::vector<AggKey> agg_vars;
  if (ctx.coms.sc >= 0) {
    for (int z : out.included) {
      for (std::size_t arc = 0; arc < cfg.arcs.size(); ++arc) {
        if (cfg.arcs[arc].kind == ArcKind::Holdover) continue;
        for (std::size_t w = 0; w < cfg.time_grid.mission_windows.intervals.size(); ++w) {
          char name[64];
          std::snprintf(name, sizeof name, "legs_z%d_a%d_w%d", z, static_cast<int>(arc),
                        static_cast<int>(w));
          const int v = p.add_variable(name, milp::VarDomain::Integer);
          out.vars.push_back({z, 0, -1, -1});
          out.var_cost.push_back({});
          agg_vars.push_back({z, static_cast<int>(arc), static_cast<int>(w), v});
        }
      }
    }
  }

  for (int z : out.included) {
    const Player& pl = cfg.players[static_cast<std::size_t>(z)];
    for (int e = 0; e < num_edges; ++e) {
      const ExpandedEdge& edge = net.edges[static_cast<std::size_t>(e)];
      bool open = true;
      if (!edge.holdover) {
        const model::NetworkArc& arc = cfg.arcs[static_cast<std::size_t>(edge.arc)];
        open = cfg.windows_for(pl.id, arc).contains(edge.depart);
      }
      if (!open) continue;
      for (int c = 0; c < num_coms; ++c) {
        if (!avail_of(z, c)[static_cast<std::size_t>(edge.from)]) continue;
        // Discrete commodities are integer on transport and launch edges;
        // parked stock on holdovers follows from integral movements, so those
        // columns stay continuous and out of the branching set.
        const bool discrete =
            cfg.commodities[static_cast<std::size_t>(c)].domain == CommodityDomain::Discrete &&
            !edge.holdover;
        double ub = milp::kInf;
        if (c == ctx.coms.sc && !edge.holdover)
          ub = static_cast<double>(pl.fleet_per_mission);
        char name[64];
        std::snprintf(name, sizeof name, "x_z%d_e%d_c%d", z, e, c);
        const int v = p.add_variable(name,
                                     discrete ? milp::VarDomain::Integer
                                              : milp::VarDomain::Continuous,
                                     ub);
        out.vars.push_back({z, 0, e, c});
        out.var_cost.push_back({});
        out.index_[{z, e, c}] = v;
        // costs
        if (!edge.holdover) {
          const model::NetworkArc& arc = cfg.arcs[static_cast<std::size_t>(edge.arc)];
          if (arc.launch_priced) {
            if (c == ctx.coms.sc) {
              add_cost(v, CostComponent::Launch, launch_per_t * ctx.dry_t);
              if (cfg.options.fleet_accounting == FleetAccounting::PerLaunch)
                add_cost(v, CostComponent::Acquisition, unit_cost_m);
            } else if (is_mass_commodity(cfg, c)) {
              add_cost(v, CostComponent::Launch, launch_per_t);
              if (c == ctx.coms.h2) add_cost(v, CostComponent::Propellant, fh2);
              if (c == ctx.coms.o2) add_cost(v, CostComponent::Propellant, fo2);
            }
          } else if (c == ctx.coms.sc) {
            add_cost(v, CostComponent::FlightOps, ops_m);
          }
          // movements one step apart are otherwise interchangeable; a sub-cent
          // early-departure preference keeps the search from exploring
          // time-shifted copies of the same plan
          if (c == ctx.coms.sc)
            add_cost(v, CostComponent::FlightOps,
                     1e-5 * static_cast<double>(edge.depart / cfg.time_grid.step_days + 1));
        }
      }
    }
  }

  // fleet-accounting unit counters
  if (cfg.options.fleet_accounting == FleetAccounting::Fleet && ctx.coms.sc >= 0) {
    for (int z : out.included) {
      const Player& pl = cfg.players[static_cast<std::size_t>(z)];
      char name[48];
      std::snprintf(name, sizeof name, "fleet_z%d", z);
      const int v = p.add_variable(name, milp::VarDomain::Integer,
                                   static_cast<double>(pl.fleet_per_mission));
      out.fleet_vars.push_back(v);
      out.vars.push_back({z, 0, -1, -1});
      out.var_cost.push_back({});
      add_cost(v, CostComponent::Acquisition, unit_cost_m);
    }
  }

  // alpha decision variables
  std::vector<int> alpha_pos(commercial.size(), -1);
  if (spec.alpha_as_variables) {
    for (std::size_t k = 0; k < commercial.size(); ++k) {
      char name[48];
      std::snprintf(name, sizeof name, "alpha_%s",
                    cfg.players[static_cast<std::size_t>(commercial[k])].id.c_str());
      alpha_pos[k] = p.add_variable(name, milp::VarDomain::Continuous, 1.0);
      out.alpha_vars.push_back(alpha_pos[k]);
      out.vars.push_back({-1, 0, -1, -1});
      out.var_cost.push_back({});
    }
    milp::LinearExpr sum;
    for (int v : out.alpha_vars) sum.push_back({v, 1.0});
    p.add_constraint("alpha_simplex", sum, milp::Relation::Le, 1.0);
  }

  // ---- fixed demand lookup (tonnes / counts); +inf marks a dropped row
  const int horizon = cfg.time_grid.horizon_days;
  const int step = cfg.time_grid.step_days;
  const int num_layers = horizon / step + 1;
  auto cell = [&](int z, int c, int n, int t) {
    return ((static_cast<std::size_t>(z) * static_cast<std::size_t>(num_coms) +
             static_cast<std::size_t>(c)) *
                static_cast<std::size_t>(num_nodes) +
            static_cast<std::size_t>(n)) *
               static_cast<std::size_t>(num_layers) +
           static_cast<std::size_t>(t / step);
  };
  std::vector<double> demand(cfg.players.size() * static_cast<std::size_t>(num_coms) *
                                 static_cast<std::size_t>(num_nodes) *
                                 static_cast<std::size_t>(num_layers),
                             0.0);
  for (const DemandEntry& e : cfg.expanded_demands) {
    const int z = cfg.find_player(e.player);
    const int c = cfg.find_commodity(e.commodity);
    const int n = cfg.find_node(e.node);
    if (z < 0 || c < 0 || n < 0) continue;
    if (e.time_days < 0 || e.time_days > horizon || e.time_days % step != 0) continue;
    double amt = e.amount;
    if (std::isfinite(amt) && is_mass_commodity(cfg, c)) amt /= kKgPerTonne;
    double& d = demand[cell(z, c, n, e.time_days)];
    d = (d == milp::kInf || amt == milp::kInf) ? milp::kInf : d + amt;
  }

  // deployment shares (fixed-alpha mode folds them into the rhs)
  const double d_tonnes = cfg.deployment_total_kg / kKgPerTonne;
  struct DeployCell {
    int z, n, t;
    double coef_per_alpha_k;  // for commercial player k itself
    bool coordinator;
    bool supply;
  };
  std::vector<DeployCell> deploy_cells;
  if (ctx.coms.infra >= 0 && origin >= 0 && destination >= 0) {
    for (const auto& [wa, wb] : cfg.time_grid.mission_windows.intervals) {
      for (int z : out.included) {
        const Player& pl = cfg.players[static_cast<std::size_t>(z)];
        const bool coord = pl.role == model::PlayerRole::Coordinator;
        double share = 0.0;
        if (coord) {
          share = 1.0 - alpha_sum;
        } else {
          for (std::size_t k = 0; k < commercial.size(); ++k)
            if (commercial[k] == z) share = alpha[k];
        }
        if (!spec.alpha_as_variables) {
          demand[cell(z, ctx.coms.infra, origin, wa)] += share * d_tonnes;
          demand[cell(z, ctx.coms.infra, destination, wb)] -= share * d_tonnes;
        } else {
          deploy_cells.push_back({z, origin, wa, d_tonnes, coord, true});
          deploy_cells.push_back({z, destination, wb, d_tonnes, coord, false});
          // base rhs for the coordinator carries the full demand
          if (coord) {
            demand[cell(z, ctx.coms.infra, origin, wa)] += d_tonnes;
            demand[cell(z, ctx.coms.infra, destination, wb)] -= d_tonnes;
          }
        }
      }
    }
  }

  // ---- mass balance rows: outflow - transformed inflow <= demand
  std::vector<std::vector<int>> out_edges(static_cast<std::size_t>(num_nodes) *
                                          static_cast<std::size_t>(num_layers));
  std::vector<std::vector<int>> in_edges(out_edges.size());
  auto nt = [&](int n, int t) {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(num_layers) +
           static_cast<std::size_t>(t / step);
  };
  for (int e = 0; e < num_edges; ++e) {
    const ExpandedEdge& edge = net.edges[static_cast<std::size_t>(e)];
    out_edges[nt(edge.from, edge.depart)].push_back(e);
    if (edge.arrive <= horizon) in_edges[nt(edge.to, edge.arrive)].push_back(e);
  }
  std::vector<Transform> transforms;
  transforms.reserve(static_cast<std::size_t>(num_edges));
  for (int e = 0; e < num_edges; ++e)
    transforms.push_back(edge_transform(ctx, net.edges[static_cast<std::size_t>(e)]));

  for (int z : out.included) {
    for (int c = 0; c < num_coms; ++c) {
      for (int n = 0; n < num_nodes; ++n) {
        for (int t = 0; t <= horizon; t += step) {
          const double rhs = demand[cell(z, c, n, t)];
          if (rhs == milp::kInf) continue;  // open supply: no balance row
          milp::LinearExpr row;
          for (int e : out_edges[nt(n, t)]) {
            const int v = out.var_of(z, e, c);
            if (v >= 0) row.push_back({v, 1.0});
          }
          for (int e : in_edges[nt(n, t)]) {
            const Transform& g = transforms[static_cast<std::size_t>(e)];
            for (int cin = 0; cin < num_coms; ++cin) {
              const double gc = g.coef(c, cin);
              if (gc == 0.0) continue;
              const int v = out.var_of(z, e, cin);
              if (v >= 0) row.push_back({v, -gc});
            }
          }
          // alpha terms on deployment rows
          if (spec.alpha_as_variables && c == ctx.coms.infra) {
            for (const DeployCell& dc : deploy_cells) {
              if (dc.z != z || dc.n != n || dc.t != t) continue;
              for (std::size_t k = 0; k < alpha_pos.size(); ++k) {
                if (dc.coordinator) {
                  row.push_back({alpha_pos[k], dc.supply ? dc.coef_per_alpha_k
                                                         : -dc.coef_per_alpha_k});
                } else if (commercial[k] == z) {
                  row.push_back({alpha_pos[k], dc.supply ? -dc.coef_per_alpha_k
                                                         : dc.coef_per_alpha_k});
                }
              }
            }
          }
          if (row.empty() && rhs >= 0.0) continue;
          char name[64];
          std::snprintf(name, sizeof name, "bal_z%d_c%d_n%d_t%d", z, c, n, t);
          p.add_constraint(name, std::move(row), milp::Relation::Le, rhs);
        }
      }
    }
  }

  // ---- concurrency rows per (player, transport edge)
  const double cap_t = cfg.spacecraft.propellant_capacity_kg / kKgPerTonne;
  const double paycap_t = cfg.spacecraft.payload_capacity_kg / kKgPerTonne;
  for (int z : out.included) {
    for (int e = 0; e < num_edges; ++e) {
      const ExpandedEdge& edge = net.edges[static_cast<std::size_t>(e)];
      if (edge.holdover) continue;
      const model::NetworkArc& arc = cfg.arcs[static_cast<std::size_t>(edge.arc)];
      if (arc.launch_priced) continue;  // rockets, not the spacecraft's tanks
      const int vsc = ctx.coms.sc >= 0 ? out.var_of(z, e, ctx.coms.sc) : -1;
      const int vh2 = ctx.coms.h2 >= 0 ? out.var_of(z, e, ctx.coms.h2) : -1;
      const int vo2 = ctx.coms.o2 >= 0 ? out.var_of(z, e, ctx.coms.o2) : -1;
      char name[64];
      // propellant tanks
      {
        milp::LinearExpr row;
        if (vh2 >= 0) row.push_back({vh2, 1.0});
        if (vo2 >= 0) row.push_back({vo2, 1.0});
        if (!row.empty()) {
          if (vsc >= 0) row.push_back({vsc, -cap_t});
          std::snprintf(name, sizeof name, "cap_z%d_e%d", z, e);
          p.add_constraint(name, std::move(row), milp::Relation::Le, 0.0);
        }
      }
      // payload bay
      if (std::isfinite(paycap_t)) {
        milp::LinearExpr row;
        for (int c = 0; c < num_coms; ++c) {
          if (c == ctx.coms.sc || c == ctx.coms.h2 || c == ctx.coms.o2) continue;
          if (!is_mass_commodity(cfg, c)) continue;
          const int v = out.var_of(z, e, c);
          if (v >= 0) row.push_back({v, 1.0});
        }
        if (!row.empty()) {
          if (vsc >= 0) row.push_back({vsc, -paycap_t});
          std::snprintf(name, sizeof name, "pay_z%d_e%d", z, e);
          p.add_constraint(name, std::move(row), milp::Relation::Le, 0.0);
        }
      }
      // the burn must be carried on board, split at the engine mixture ratio
      if (arc.delta_v_kms > 0.0) {
        const double f = burn_fraction(arc.delta_v_kms, cfg.spacecraft.isp_s);
        const double r = cfg.spacecraft.ox_fuel_ratio;
        const double fh = f / (1.0 + r);
        const double fo = f * r / (1.0 + r);
        for (int side = 0; side < 2; ++side) {
          const double share = side == 0 ? fh : fo;
          const int vown = side == 0 ? vh2 : vo2;
          milp::LinearExpr row;
          for (int c = 0; c < num_coms; ++c) {
            const int v = out.var_of(z, e, c);
            if (v < 0) continue;
            double mass_coef;
            if (c == ctx.coms.sc)
              mass_coef = ctx.dry_t;
            else if (is_mass_commodity(cfg, c))
              mass_coef = 1.0;
            else
              continue;
            double coef = share * mass_coef;
            if (v == vown) coef -= 1.0;
            if (coef != 0.0) row.push_back({v, coef});
          }
          if (!row.empty()) {
            std::snprintf(name, sizeof name, "burn%s_z%d_e%d", side == 0 ? "H2" : "O2", z, e);
            p.add_constraint(name, std::move(row), milp::Relation::Le, 0.0);
          }
        }
      }
    }
  }

  // aggregate leg counters mirror the per-edge spacecraft sums
  for (const auto& agg : agg_vars) {
    milp::LinearExpr row;
    for (int e = 0; e < num_edges; ++e) {
      const ExpandedEdge& edge = net.edges[static_cast<std::size_t>(e)];
      if (edge.holdover || edge.arc != agg.arc) continue;
      const auto& [wa, wb] = cfg.time_grid.mission_windows.intervals[static_cast<std::size_t>(agg.window)];
      if (edge.depart < wa || edge.depart > wb) continue;
      const int v = out.var_of(agg.z, e, ctx.coms.sc);
      if (v >= 0) row.push_back({v, 1.0});
    }
    if (row.empty()) continue;
    row.push_back({agg.var, -1.0});
    char name[64];
    std::snprintf(name, sizeof name, "aggdef_z%d_a%d_w%d", agg.z, agg.arc, agg.window);
    p.add_constraint(name, std::move(row), milp::Relation::Eq, 0.0);
  }

  // fleet purchase covers the peak per-window launch count
  if (!out.fleet_vars.empty() && ctx.coms.sc >= 0) {
    for (std::size_t zi = 0; zi < out.included.size(); ++zi) {
      const int z = out.included[zi];
      for (std::size_t w = 0; w < cfg.time_grid.mission_windows.intervals.size(); ++w) {
        const auto& [wa, wb] = cfg.time_grid.mission_windows.intervals[w];
        milp::LinearExpr row;
        for (int e = 0; e < num_edges; ++e) {
          const ExpandedEdge& edge = net.edges[static_cast<std::size_t>(e)];
          if (edge.holdover) continue;
          const model::NetworkArc& arc = cfg.arcs[static_cast<std::size_t>(edge.arc)];
          if (!arc.launch_priced) continue;
          if (edge.depart < wa || edge.depart > wb) continue;
          const int v = out.var_of(z, e, ctx.coms.sc);
          if (v >= 0) row.push_back({v, 1.0});
        }
        if (row.empty()) continue;
        row.push_back({out.fleet_vars[zi], -1.0});
        char name[64];
        std::snprintf(name, sizeof name, "fleet_z%d_w%d", z, static_cast<int>(w));
        p.add_constraint(name, std::move(row), milp::Relation::Le, 0.0);
      }
    }
  }

  // Eq.-17-style budget cap in welfare mode
  if (spec.mode == ObjectiveMode::MaxWelfare && std::isfinite(spec.budget_cap_musd)) {
    milp::LinearExpr row;
    for (const milp::Term& t : objective) row.push_back(t);
    p.add_constraint("budget_cap", std::move(row), milp::Relation::Le, spec.budget_cap_musd);
  }

  p.set_objective(milp::Sense::Minimize, objective);
  return out;
}

CostAttribution attribute_costs(const AssembledMilp& a, const milp::Solution& s) {
  CostAttribution out;
  const ScenarioConfig& cfg = *a.cfg;
  std::map<int, CostBreakdown> acc;
  for (std::size_t v = 0; v < a.vars.size() && v < s.values.size(); ++v) {
    int z = a.vars[v].player;
    if (z < 0) continue;  // alpha variables carry no cost
    const auto& comp = a.var_cost[v];
    const double x = s.values[v];
    CostBreakdown& b = acc[z];
    b.launch += comp[static_cast<int>(CostComponent::Launch)] * x;
    b.acquisition += comp[static_cast<int>(CostComponent::Acquisition)] * x;
    b.flight_ops += comp[static_cast<int>(CostComponent::FlightOps)] * x;
    b.propellant += comp[static_cast<int>(CostComponent::Propellant)] * x;
  }
  for (const auto& [z, b] : acc) {
    out.per_player.emplace_back(cfg.players[static_cast<std::size_t>(z)].id, b);
    out.total += b.total();
  }
  return out;
}

std::vector<FlowRecord> extract_flows(const AssembledMilp& a, const milp::Solution& s) {
  std::vector<FlowRecord> flows;
  const ScenarioConfig& cfg = *a.cfg;
  for (std::size_t v = 0; v < a.vars.size() && v < s.values.size(); ++v) {
    const FlowVariableKey& k = a.vars[v];
    if (k.edge < 0 || k.commodity < 0) continue;
    const double x = s.values[v];
    if (std::abs(x) <= 1e-9) continue;
    const ExpandedEdge& e = a.net.edges[static_cast<std::size_t>(k.edge)];
    const bool mass = is_mass_commodity(cfg, k.commodity);
    flows.push_back({cfg.players[static_cast<std::size_t>(k.player)].id, "default",
                     cfg.nodes[static_cast<std::size_t>(e.from)].id,
                     cfg.nodes[static_cast<std::size_t>(e.to)].id, e.depart,
                     cfg.commodities[static_cast<std::size_t>(k.commodity)].id,
                     mass ? x * kKgPerTonne : x});
  }
  return flows;
}

void write_flows_csv(const std::vector<FlowRecord>& flows, std::ostream& os) {
  os << "player,vehicle,from,to,t,commodity,amount\n";
  char buf[64];
  for (const FlowRecord& f : flows) {
    std::snprintf(buf, sizeof buf, "%.9g", f.amount_kg);
    os << f.player << ',' << f.vehicle << ',' << f.from << ',' << f.to << ',' << f.t << ','
       << f.commodity << ',' << buf << "\n";
  }
}

PhysicsAudit audit_solution(const AssembledMilp& a, const milp::Solution& s) {
  PhysicsAudit audit;
  const ScenarioConfig& cfg = *a.cfg;
  const Coms coms = resolve_commodities(cfg);
  const double dry_t = cfg.spacecraft.dry_mass_kg / kKgPerTonne;

  // rocket-equation consistency per transport edge
  for (int z : a.included) {
    for (std::size_t e = 0; e < a.net.edges.size(); ++e) {
      const ExpandedEdge& edge = a.net.edges[e];
      if (edge.holdover) continue;
      const model::NetworkArc& arc = cfg.arcs[static_cast<std::size_t>(edge.arc)];
      if (arc.launch_priced || arc.delta_v_kms <= 0.0) continue;
      double wet_t = 0.0, prop_in_t = 0.0;
      for (std::size_t c = 0; c < cfg.commodities.size(); ++c) {
        const int v = a.var_of(z, static_cast<int>(e), static_cast<int>(c));
        if (v < 0) continue;
        const double x = s.values[static_cast<std::size_t>(v)];
        if (static_cast<int>(c) == coms.sc)
          wet_t += dry_t * x;
        else if (is_mass_commodity(cfg, static_cast<int>(c)))
          wet_t += x;
        if (static_cast<int>(c) == coms.h2 || static_cast<int>(c) == coms.o2) prop_in_t += x;
      }
      if (wet_t <= 1e-9) continue;
      const double expected =
          propellant_burn(wet_t * kKgPerTonne, arc.delta_v_kms, cfg.spacecraft.isp_s);
      // recompute the delivered propellant through the transformation
      const double f = burn_fraction(arc.delta_v_kms, cfg.spacecraft.isp_s);
      const double delivered_t = prop_in_t - f * wet_t;
      const double actual = (prop_in_t - delivered_t) * kKgPerTonne;
      const double rel = std::abs(actual - expected) / std::max(1.0, expected);
      audit.max_burn_rel_err = std::max(audit.max_burn_rel_err, rel);
      if (delivered_t < -1e-6) {
        audit.ok = false;
        audit.notes.push_back("negative delivered propellant on edge " +
                              std::to_string(e));
      }
    }
  }

  // spacecraft integrality and fleet caps on movement edges
  for (std::size_t v = 0; v < a.vars.size() && v < s.values.size(); ++v) {
    const FlowVariableKey& k = a.vars[v];
    if (k.commodity != coms.sc || k.edge < 0) continue;
    const ExpandedEdge& edge = a.net.edges[static_cast<std::size_t>(k.edge)];
    if (edge.holdover) continue;
    const double x = s.values[v];
    audit.max_integrality_err =
        std::max(audit.max_integrality_err, std::abs(x - std::round(x)));
    const int fleet = cfg.players[static_cast<std::size_t>(k.player)].fleet_per_mission;
    if (x > fleet + 1e-6) {
      audit.ok = false;
      audit.notes.push_back("fleet cap exceeded on edge " + std::to_string(k.edge));
    }
  }
  if (audit.max_integrality_err > 1e-6) audit.ok = false;
  if (audit.max_burn_rel_err > 1e-6) audit.ok = false;

  // independent mass-balance recheck, outside the solver
  const int step = cfg.time_grid.step_days;
  const int horizon = cfg.time_grid.horizon_days;
  const std::vector<int> commercial = cfg.commercial_players();
  std::vector<double> alpha(commercial.size(), 0.0);
  for (std::size_t k = 0; k < a.spec.alpha.size() && k < alpha.size(); ++k)
    alpha[k] = a.spec.alpha[k];
  if (!a.alpha_vars.empty()) {
    for (std::size_t k = 0; k < a.alpha_vars.size() && k < alpha.size(); ++k)
      alpha[k] = s.values[static_cast<std::size_t>(a.alpha_vars[k])];
  }
  double alpha_sum = 0.0;
  for (double v : alpha) alpha_sum += v;
  const int origin = cfg.find_node(cfg.deployment_origin);
  const int destination = cfg.find_node(cfg.deployment_destination);
  const double d_tonnes = cfg.deployment_total_kg / kKgPerTonne;

  BuildContext ctx;
  ctx.cfg = &cfg;
  ctx.coms = coms;
  ctx.dry_t = dry_t;
  for (std::size_t w = 1; w < cfg.time_grid.mission_windows.intervals.size(); ++w)
    ctx.retire_boundaries.push_back(cfg.time_grid.mission_windows.intervals[w].first);
  for (const Player& pp : cfg.players)
    if (!pp.isru_node.empty()) {
      const int n = cfg.find_node(pp.isru_node);
      if (n >= 0) ctx.production_nodes.insert(n);
    }

  const int num_coms = static_cast<int>(cfg.commodities.size());
  const int num_nodes = static_cast<int>(cfg.nodes.size());
  const int num_layers = horizon / step + 1;
  auto cell = [&](int z, int c, int n, int t) {
    return ((static_cast<std::size_t>(z) * static_cast<std::size_t>(num_coms) +
             static_cast<std::size_t>(c)) *
                static_cast<std::size_t>(num_nodes) +
            static_cast<std::size_t>(n)) *
               static_cast<std::size_t>(num_layers) +
           static_cast<std::size_t>(t / step);
  };
  std::vector<double> demand(cfg.players.size() * static_cast<std::size_t>(num_coms) *
                                 static_cast<std::size_t>(num_nodes) *
                                 static_cast<std::size_t>(num_layers),
                             0.0);
  for (const DemandEntry& de : cfg.expanded_demands) {
    const int z = cfg.find_player(de.player);
    const int c = cfg.find_commodity(de.commodity);
    const int n = cfg.find_node(de.node);
    if (z < 0 || c < 0 || n < 0 || de.time_days < 0 || de.time_days > horizon ||
        de.time_days % step != 0)
      continue;
    double& d = demand[cell(z, c, n, de.time_days)];
    if (de.amount == model::kInf)
      d = milp::kInf;
    else if (d != milp::kInf)
      d += is_mass_commodity(cfg, c) ? de.amount / kKgPerTonne : de.amount;
  }
  std::vector<Transform> transforms;
  transforms.reserve(a.net.edges.size());
  for (const ExpandedEdge& edge : a.net.edges) transforms.push_back(edge_transform(ctx, edge));
  std::vector<std::vector<int>> out_edges(static_cast<std::size_t>(num_nodes) *
                                          static_cast<std::size_t>(num_layers));
  std::vector<std::vector<int>> in_edges(out_edges.size());
  auto nt = [&](int n, int t) {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(num_layers) +
           static_cast<std::size_t>(t / step);
  };
  for (std::size_t e = 0; e < a.net.edges.size(); ++e) {
    const ExpandedEdge& edge = a.net.edges[e];
    out_edges[nt(edge.from, edge.depart)].push_back(static_cast<int>(e));
    if (edge.arrive <= horizon) in_edges[nt(edge.to, edge.arrive)].push_back(static_cast<int>(e));
  }

  for (int z : a.included) {
    const Player& pl = cfg.players[static_cast<std::size_t>(z)];
    const bool coord = pl.role == model::PlayerRole::Coordinator;
    double share = coord ? 1.0 - alpha_sum : 0.0;
    if (!coord)
      for (std::size_t k = 0; k < commercial.size(); ++k)
        if (commercial[k] == z) share = alpha[k];
    for (int c = 0; c < num_coms; ++c) {
      for (int n = 0; n < num_nodes; ++n) {
        for (int t = 0; t <= horizon; t += step) {
          double d = demand[cell(z, c, n, t)];
          if (d == milp::kInf) continue;
          if (coms.infra == c) {
            for (const auto& [wa, wb] : cfg.time_grid.mission_windows.intervals) {
              if (n == origin && t == wa) d += share * d_tonnes;
              if (n == destination && t == wb) d -= share * d_tonnes;
            }
          }
          double lhs = 0.0;
          bool touched = false;
          for (int e : out_edges[nt(n, t)]) {
            const int v = a.var_of(z, e, c);
            if (v >= 0) {
              lhs += s.values[static_cast<std::size_t>(v)];
              touched = true;
            }
          }
          for (int e : in_edges[nt(n, t)]) {
            const Transform& g = transforms[static_cast<std::size_t>(e)];
            for (int cin = 0; cin < num_coms; ++cin) {
              const double gc = g.coef(c, cin);
              if (gc == 0.0) continue;
              const int v = a.var_of(z, e, cin);
              if (v >= 0) {
                lhs -= gc * s.values[static_cast<std::size_t>(v)];
                touched = true;
              }
            }
          }
          if (!touched && d >= 0.0) continue;
          audit.max_balance_violation =
              std::max(audit.max_balance_violation, (lhs - d) * kKgPerTonne);
        }
      }
    }
  }
  if (audit.max_balance_violation > 1e-3) audit.ok = false;  // 1 gram in config units
  return audit;
}

milp::SolverOptions CostEvaluator::default_solver_options() {
  milp::SolverOptions o;
  o.feasibility_tol = 1e-7;
  o.integrality_tol = 1e-6;
  // 5e-3 relative on costs of order $1e3M is a few $M, well below every
  // tolerance that consumes these values; tests compare J values against
  // gap-aware tolerances
  o.relative_gap = 5e-3;
  o.node_limit = 200000;
  return o;
}

CostEvaluator::CostEvaluator(const ScenarioConfig& cfg, milp::SolverOptions opts)
    : cfg_(&cfg), opts_(opts) {}

milp::SolveStats CostEvaluator::total_stats() const {
  std::lock_guard<std::mutex> lk(mu_);
  return stats_;
}

MissionCost CostEvaluator::solve_subset(const std::vector<int>& players,
                                        const std::vector<double>& alpha) {
  AssembleSpec spec;
  spec.players = players;
  spec.alpha = alpha;
  spec.mode = ObjectiveMode::MinTotalCost;
  AssembledMilp a = assemble_milp(*cfg_, spec);

  milp::Basis warm;
  const int key = players.size() == 1 ? players.front() : -1;
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = warm_.find(key);
    if (it != warm_.end()) warm = it->second;
  }
  milp::Basis basis_out;
  milp::Solution s = milp::solve_milp(a.problem, opts_, warm.empty() ? nullptr : &warm,
                                      &basis_out);
  MissionCost mc;
  mc.stats = s.stats;
  {
    std::lock_guard<std::mutex> lk(mu_);
    stats_.lp_iterations += s.stats.lp_iterations;
    stats_.nodes += s.stats.nodes;
    if (s.status == milp::Status::Optimal) warm_[key] = basis_out;
  }
  if (s.status == milp::Status::Optimal) {
    mc.feasible = true;
    mc.cost_musd = s.objective;
  } else if (s.status == milp::Status::Infeasible) {
    mc.feasible = false;
    mc.cost_musd = milp::kInf;
  } else {
    mc.feasible = false;
    mc.cost_musd = std::numeric_limits<double>::quiet_NaN();  // solver limit: unevaluated
  }
  return mc;
}

double CostEvaluator::standalone(int player_index) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = standalone_cache_.find(player_index);
    if (it != standalone_cache_.end()) return it->second;
  }
  const std::vector<int> commercial = cfg_->commercial_players();
  std::vector<double> alpha(commercial.size(), 0.0);
  const Player& pl = cfg_->players[static_cast<std::size_t>(player_index)];
  if (pl.role == model::PlayerRole::Coordinator) {
    // zero assignment for the coordinator means a full commercial takeover
    if (!alpha.empty()) alpha[0] = 1.0;
    else {
      std::lock_guard<std::mutex> lk(mu_);
      standalone_cache_[player_index] = 0.0;
      return 0.0;
    }
  }
  MissionCost mc = solve_subset({player_index}, alpha);
  const double v = mc.feasible ? mc.cost_musd : milp::kInf;
  std::lock_guard<std::mutex> lk(mu_);
  standalone_cache_[player_index] = v;
  return v;
}

MissionCost CostEvaluator::player_cost(int player_index, double share) {
  if (share < -1e-12 || share > 1.0 + 1e-12)
    throw std::invalid_argument("share must lie in [0, 1]");
  share = std::min(1.0, std::max(0.0, share));
  if (share == 0.0) {
    MissionCost zero;
    zero.feasible = true;
    zero.cost_musd = 0.0;  // incremental-cost convention
    return zero;
  }
  if (cache_enabled_) {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = share_cache_.find({player_index, share});
    if (it != share_cache_.end()) return it->second;
  }
  const std::vector<int> commercial = cfg_->commercial_players();
  std::vector<double> alpha(commercial.size(), 0.0);
  const Player& pl = cfg_->players[static_cast<std::size_t>(player_index)];
  if (pl.role == model::PlayerRole::Coordinator) {
    if (!alpha.empty()) alpha[0] = 1.0 - share;
    else if (share != 1.0)
      throw std::invalid_argument("coordinator share must be 1 without commercial players");
  } else {
    for (std::size_t k = 0; k < commercial.size(); ++k)
      if (commercial[k] == player_index) alpha[k] = share;
  }
  MissionCost mc = solve_subset({player_index}, alpha);
  if (mc.feasible) {
    const double base = standalone(player_index);
    if (!std::isfinite(base)) {
      mc.feasible = false;
      mc.cost_musd = milp::kInf;
    } else {
      mc.cost_musd -= base;
      if (mc.cost_musd < 0.0 && mc.cost_musd > -1e-6) mc.cost_musd = 0.0;
    }
  }
  if (cache_enabled_) {
    std::lock_guard<std::mutex> lk(mu_);
    share_cache_.emplace(std::make_pair(player_index, share), mc);
  }
  return mc;
}

MissionCost CostEvaluator::mission_cost(const std::vector<int>& player_set,
                                        const std::vector<double>& alpha) {
  double asum = 0.0;
  for (double a : alpha) {
    if (a < -1e-12 || a > 1.0 + 1e-12)
      throw std::invalid_argument("alpha components must lie in [0, 1]");
    asum += a;
  }
  if (asum > 1.0 + 1e-9) throw std::invalid_argument("alpha must lie in the simplex");

  if (player_set.size() == 1) {
    const int z = player_set.front();
    const Player& pl = cfg_->players[static_cast<std::size_t>(z)];
    double share = 0.0;
    if (pl.role == model::PlayerRole::Coordinator) {
      share = 1.0 - asum;
    } else {
      const std::vector<int> commercial = cfg_->commercial_players();
      for (std::size_t k = 0; k < commercial.size() && k < alpha.size(); ++k)
        if (commercial[k] == z) share = alpha[k];
    }
    return player_cost(z, share);
  }

  MissionCost mc = solve_subset(player_set, alpha);
  if (mc.feasible) {
    double base = 0.0;
    for (int z : player_set) base += standalone(z);
    if (!std::isfinite(base)) {
      mc.feasible = false;
      mc.cost_musd = milp::kInf;
    } else {
      mc.cost_musd -= base;
    }
  }
  return mc;
}

MissionCost CostEvaluator::baseline() {
  const model::Player* coord = cfg_->coordinator();
  if (coord == nullptr) throw std::invalid_argument("scenario has no coordinator");
  return player_cost(cfg_->find_player(coord->id), 1.0);
}

}  // namespace lunex::logistics
