#include "lunex/time_grid.hpp"

namespace lunex::model {

int arc_steps(const NetworkArc& arc, int step_days) {
  if (arc.kind == ArcKind::Holdover) return 1;
  if (arc.tof_days <= 0) return 0;
  return (arc.tof_days + step_days - 1) / step_days;
}

TimeExpandedNetwork expand_time_grid(const ScenarioConfig& cfg) {
  TimeExpandedNetwork net;
  const int step = cfg.time_grid.step_days;
  const int horizon = cfg.time_grid.horizon_days;
  for (int t = 0; t <= horizon; t += step) net.layers.push_back(t);

  for (std::size_t a = 0; a < cfg.arcs.size(); ++a) {
    const NetworkArc& arc = cfg.arcs[a];
    if (arc.kind == ArcKind::Holdover) continue;  // emitted uniformly below
    const int from = cfg.find_node(arc.from);
    const int to = cfg.find_node(arc.to);
    if (from < 0 || to < 0) continue;
    const int dt = arc_steps(arc, step) * step;
    for (int t = 0; t + dt <= horizon; t += step) {
      bool open = false;
      for (const Player& p : cfg.players) {
        if (cfg.windows_for(p.id, arc).contains(t)) {
          open = true;
          break;
        }
      }
      if (!open) continue;
      net.edges.push_back({static_cast<int>(a), from, to, t, t + dt, false});
    }
  }
  for (std::size_t n = 0; n < cfg.nodes.size(); ++n) {
    int declared = -1;
    for (std::size_t a = 0; a < cfg.arcs.size(); ++a) {
      const NetworkArc& arc = cfg.arcs[a];
      if (arc.kind == ArcKind::Holdover && arc.from == cfg.nodes[n].id) declared = static_cast<int>(a);
    }
    for (int t = 0; t + step <= horizon; t += step)
      net.edges.push_back({declared, static_cast<int>(n), static_cast<int>(n), t, t + step, true});
  }
  return net;
}

}  // namespace lunex::model
