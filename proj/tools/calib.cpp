// scratch calibration harness (not installed)
#include "lunex/formulation.hpp"
#include <chrono>
#include <cstdio>
#include <cstdlib>

using namespace lunex;

int main(int argc, char** argv) {
  const char* path = argc > 1 ? argv[1] : "fixtures/lunar_nominal.json";
  model::ScenarioConfig cfg = model::load_scenario(path);
  logistics::AssembleSpec spec;
  spec.players = {1};
  spec.alpha = {argc > 2 ? std::atof(argv[2]) : 0.0};
  auto a = logistics::assemble_milp(cfg, spec);
  std::printf("player1 problem at alpha=%.2f: %d vars, %d rows\n", spec.alpha[0],
              a.problem.num_variables(), a.problem.num_constraints());
  auto t0 = std::chrono::steady_clock::now();
  auto lp = milp::solve_lp(a.problem);
  auto t1 = std::chrono::steady_clock::now();
  std::printf("LP: %s obj=%.3f (%.2fs, %lld iters)\n", milp::to_string(lp.status), lp.objective,
              std::chrono::duration<double>(t1 - t0).count(),
              (long long)lp.stats.lp_iterations);
  milp::SolverOptions mo = logistics::CostEvaluator::default_solver_options();
  mo.node_limit = 3000;
  t0 = std::chrono::steady_clock::now();
  auto s = milp::solve_milp(a.problem, mo);
  t1 = std::chrono::steady_clock::now();
  std::printf("MILP: %s obj=%.3f gap=%.2e (%.2fs, %lld iters, %lld nodes)\n",
              milp::to_string(s.status), s.objective, s.gap,
              std::chrono::duration<double>(t1 - t0).count(),
              (long long)s.stats.lp_iterations, (long long)s.stats.nodes);
  return 0;
}
