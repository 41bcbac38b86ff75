#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace lunex::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarDomain { Continuous, Integer };
enum class Sense { Minimize, Maximize };
enum class Relation { Le, Eq, Ge };
enum class Status { Optimal, Infeasible, Unbounded, LimitReached };

const char* to_string(Status s);

struct Term {
  int var = -1;
  double coef = 0.0;
};
using LinearExpr = std::vector<Term>;

/// A decision variable. All variables are nonnegative; `upper` may be +inf.
struct Variable {
  std::string name;
  VarDomain domain = VarDomain::Continuous;
  double upper = kInf;
};

struct Constraint {
  std::string name;
  LinearExpr terms;
  Relation rel = Relation::Le;
  double rhs = 0.0;
};

/// Immutable once handed to a solver; building is append-only.
class Problem {
 public:
  int add_variable(std::string name, VarDomain domain, double upper = kInf);
  int add_constraint(std::string name, LinearExpr terms, Relation rel, double rhs);
  void set_objective(Sense sense, LinearExpr expr);

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  Sense sense() const { return sense_; }
  const LinearExpr& objective() const { return obj_; }

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }

  double eval_objective(const std::vector<double>& x) const;

  /// Throws std::invalid_argument on out-of-range variable references or
  /// non-finite coefficients.
  void validate() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  LinearExpr obj_;
  Sense sense_ = Sense::Minimize;
};

struct SolverOptions {
  double feasibility_tol = 1e-7;
  double integrality_tol = 1e-6;
  double relative_gap = 1e-6;
  std::int64_t node_limit = 200000;
  double time_limit_s = kInf;  // disabled by default: keeps searches deterministic
};

struct SolveStats {
  std::int64_t lp_iterations = 0;
  std::int64_t nodes = 0;
};

struct Solution {
  Status status = Status::Infeasible;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values;  // one entry per variable when an incumbent exists
  double gap = 0.0;            // relative optimality gap achieved
  SolveStats stats;
};

/// Opaque warm-start snapshot (basis of the final LP of a previous solve on a
/// problem with identical shape). Safe to pass across solves that change only
/// objective/rhs/bounds.
struct Basis {
  std::vector<std::int32_t> basic;
  std::vector<std::uint8_t> at_upper;
  bool empty() const { return basic.empty(); }
};

/// Solves the LP relaxation (integrality dropped) with bounded revised simplex.
Solution solve_lp(const Problem& p, const SolverOptions& opts = {});

/// Branch and bound over solve_lp: most-fractional branching, best-bound
/// node selection, dual-simplex warm starts down the tree.
Solution solve_milp(const Problem& p, const SolverOptions& opts = {});
Solution solve_milp(const Problem& p, const SolverOptions& opts, const Basis* warm,
                    Basis* basis_out);

/// True iff `s` satisfies every row within feasibility_tol, integralities
/// within integrality_tol, and the recomputed objective matches within 1e-9
/// relative.
bool check_solution(const Problem& p, const Solution& s, const SolverOptions& opts = {});

/// Same problem with every variable made continuous.
Problem relax(const Problem& p);

/// Objective of the LP relaxation: an upper bound for maximization problems,
/// a lower bound for minimization.
double dual_bound(const Problem& p, const SolverOptions& opts = {});

/// Writes the problem in CPLEX LP text format.
void write_lp(const Problem& p, std::ostream& os);
std::string to_lp_string(const Problem& p);

}  // namespace lunex::milp
