#pragma once

#include "lunex/model.hpp"

namespace lunex::model {

struct ExpandedEdge {
  int arc = -1;   // index into ScenarioConfig::arcs; -1 for generated holdovers
  int from = -1;  // node index
  int to = -1;
  int depart = 0;  // day
  int arrive = 0;  // day
  bool holdover = false;
};

struct TimeExpandedNetwork {
  std::vector<int> layers;  // day value per layer, 0..horizon
  std::vector<ExpandedEdge> edges;

  int layer_of(int day) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i] == day) return static_cast<int>(i);
    return -1;
  }
};

/// Whole time steps an arc spans: tof rounded up so mass never arrives before
/// it left. Holdovers span exactly one step.
int arc_steps(const NetworkArc& arc, int step_days);

/// Cross product of nodes and time layers plus one edge per (arc, departure)
/// with an open window for at least one player; holdover edges connect every
/// node to itself one step later. No edge head exceeds the horizon.
TimeExpandedNetwork expand_time_grid(const ScenarioConfig& cfg);

}  // namespace lunex::model
