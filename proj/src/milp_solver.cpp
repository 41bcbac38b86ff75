#include "lunex/milp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace lunex::milp {

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::LimitReached: return "limit-reached";
  }
  return "unknown";
}

int Problem::add_variable(std::string name, VarDomain domain, double upper) {
  vars_.push_back(Variable{std::move(name), domain, upper});
  return static_cast<int>(vars_.size()) - 1;
}

int Problem::add_constraint(std::string name, LinearExpr terms, Relation rel, double rhs) {
  rows_.push_back(Constraint{std::move(name), std::move(terms), rel, rhs});
  return static_cast<int>(rows_.size()) - 1;
}

void Problem::set_objective(Sense sense, LinearExpr expr) {
  sense_ = sense;
  obj_ = std::move(expr);
}

double Problem::eval_objective(const std::vector<double>& x) const {
  double v = 0.0;
  for (const Term& t : obj_) v += t.coef * x.at(static_cast<std::size_t>(t.var));
  return v;
}

void Problem::validate() const {
  const int n = num_variables();
  auto check_expr = [&](const LinearExpr& e, const std::string& where) {
    for (const Term& t : e) {
      if (t.var < 0 || t.var >= n)
        throw std::invalid_argument("undeclared variable index " + std::to_string(t.var) +
                                    " in " + where);
      if (!std::isfinite(t.coef))
        throw std::invalid_argument("non-finite coefficient in " + where);
    }
  };
  check_expr(obj_, "objective");
  for (const Constraint& c : rows_) {
    check_expr(c.terms, "constraint " + c.name);
    if (!std::isfinite(c.rhs))
      throw std::invalid_argument("non-finite rhs in constraint " + c.name);
  }
  for (const Variable& v : vars_) {
    if (std::isnan(v.upper) || v.upper < 0.0)
      throw std::invalid_argument("invalid upper bound on variable " + v.name);
  }
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kRatioTol = 1e-10;
constexpr double kDualTol = 1e-9;
constexpr double kPrimalTol = 1e-8;
constexpr int kRefactorEvery = 256;
constexpr int kStallLimit = 800;

struct SparseCol {
  std::vector<int> rows;
  std::vector<double> vals;
};

enum class LpResult { Optimal, Infeasible, Unbounded, IterLimit };

// Bounded revised simplex over the column space
//   [0, n)        structural variables
//   [n, n+m)      row slacks (<=: [0,inf), ==: [0,0], >=: (-inf,0])
//   [n+m, n+2m)   phase-1 artificials
// with a dense explicit basis inverse, refactorized periodically.
class Simplex {
 public:
  int m = 0;
  int n = 0;
  std::vector<SparseCol> acols;  // structural columns
  std::vector<double> rhs;
  std::vector<int> rel;  // -1 <=, 0 ==, +1 >=
  std::vector<double> cost;
  std::vector<double> lo, hi;  // structural bounds (mutated by branch and bound)

  std::int64_t iterations = 0;

  void load(const Problem& p, bool negate_objective) {
    m = p.num_constraints();
    n = p.num_variables();
    acols.assign(static_cast<std::size_t>(n), {});
    rhs.resize(static_cast<std::size_t>(m));
    rel.resize(static_cast<std::size_t>(m));
    cost.assign(static_cast<std::size_t>(n), 0.0);
    lo.assign(static_cast<std::size_t>(n), 0.0);
    hi.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) hi[static_cast<std::size_t>(j)] = p.variables()[static_cast<std::size_t>(j)].upper;
    for (const Term& t : p.objective())
      cost[static_cast<std::size_t>(t.var)] += negate_objective ? -t.coef : t.coef;
    for (int i = 0; i < m; ++i) {
      const Constraint& c = p.constraints()[static_cast<std::size_t>(i)];
      rhs[static_cast<std::size_t>(i)] = c.rhs;
      rel[static_cast<std::size_t>(i)] =
          c.rel == Relation::Le ? -1 : (c.rel == Relation::Eq ? 0 : 1);
      for (const Term& t : c.terms) {
        acols[static_cast<std::size_t>(t.var)].rows.push_back(i);
        acols[static_cast<std::size_t>(t.var)].vals.push_back(t.coef);
      }
    }
    // merge duplicate variable references within a row
    for (auto& col : acols) {
      std::vector<std::pair<int, double>> entries;
      entries.reserve(col.rows.size());
      for (std::size_t k = 0; k < col.rows.size(); ++k)
        entries.emplace_back(col.rows[k], col.vals[k]);
      std::sort(entries.begin(), entries.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      col.rows.clear();
      col.vals.clear();
      for (const auto& [r, v] : entries) {
        if (!col.rows.empty() && col.rows.back() == r)
          col.vals.back() += v;
        else {
          col.rows.push_back(r);
          col.vals.push_back(v);
        }
      }
    }
    art_sign_.assign(static_cast<std::size_t>(m), 1.0);
    scratch_.resize(m);
  }

  int num_cols() const { return n + 2 * m; }
  bool is_structural(int j) const { return j < n; }
  bool is_slack(int j) const { return j >= n && j < n + m; }
  bool is_artificial(int j) const { return j >= n + m; }

  double col_lo(int j) const {
    if (j < n) return lo[static_cast<std::size_t>(j)];
    if (j < n + m) {
      const int r = rel[static_cast<std::size_t>(j - n)];
      return r == 1 ? -kInf : 0.0;
    }
    return 0.0;
  }
  double col_hi(int j) const {
    if (j < n) return hi[static_cast<std::size_t>(j)];
    if (j < n + m) {
      const int r = rel[static_cast<std::size_t>(j - n)];
      return r == -1 ? kInf : 0.0;
    }
    return art_open_ ? kInf : 0.0;
  }
  double col_cost(int j) const {
    if (phase1_) return is_artificial(j) ? 1.0 : 0.0;
    return j < n ? cost[static_cast<std::size_t>(j)] : 0.0;
  }

  // y . a_j for a sparse column
  double dot_col(const Eigen::VectorXd& y, int j) const {
    if (j < n) {
      const SparseCol& c = acols[static_cast<std::size_t>(j)];
      double s = 0.0;
      for (std::size_t k = 0; k < c.rows.size(); ++k) s += c.vals[k] * y(c.rows[k]);
      return s;
    }
    if (j < n + m) return y(j - n);
    return art_sign_[static_cast<std::size_t>(j - n - m)] * y(j - n - m);
  }

  void gather_col(int j, Eigen::VectorXd& out) const {
    out.setZero(m);
    if (j < n) {
      const SparseCol& c = acols[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < c.rows.size(); ++k) out(c.rows[k]) = c.vals[k];
    } else if (j < n + m) {
      out(j - n) = 1.0;
    } else {
      out(j - n - m) = art_sign_[static_cast<std::size_t>(j - n - m)];
    }
  }

  // w = Binv * a_j exploiting column sparsity
  void ftran_col(int j, Eigen::VectorXd& w) const {
    if (j < n) {
      const SparseCol& c = acols[static_cast<std::size_t>(j)];
      w.setZero(m);
      for (std::size_t k = 0; k < c.rows.size(); ++k)
        w.noalias() += c.vals[k] * Binv.col(c.rows[k]);
    } else if (j < n + m) {
      w = Binv.col(j - n);
    } else {
      w = art_sign_[static_cast<std::size_t>(j - n - m)] * Binv.col(j - n - m);
    }
  }

  // ---- state ----
  std::vector<int> basis;           // column basic in each row
  std::vector<std::uint8_t> in_basis;
  std::vector<std::uint8_t> at_upper;  // nonbasic bound side
  Eigen::MatrixXd Binv;
  Eigen::VectorXd xB;

  double nonbasic_value(int j) const {
    const double l = col_lo(j), u = col_hi(j);
    if (at_upper[static_cast<std::size_t>(j)]) return std::isfinite(u) ? u : 0.0;
    return std::isfinite(l) ? l : 0.0;
  }

  void snapshot(Basis& out) const {
    out.basic.assign(basis.begin(), basis.end());
    out.at_upper.assign(at_upper.begin(), at_upper.end());
  }

  bool restore(const Basis& snap) {
    if (static_cast<int>(snap.basic.size()) != m ||
        snap.at_upper.size() != static_cast<std::size_t>(num_cols()))
      return false;
    basis.assign(snap.basic.begin(), snap.basic.end());
    at_upper.assign(snap.at_upper.begin(), snap.at_upper.end());
    in_basis.assign(static_cast<std::size_t>(num_cols()), 0);
    for (int j : basis) {
      if (j < 0 || j >= num_cols()) return false;
      in_basis[static_cast<std::size_t>(j)] = 1;
    }
    sanitize_statuses();
    return refactor();
  }

  // A nonbasic variable must sit on a finite bound; bound relaxations between
  // solves can leave a stale at_upper flag pointing at +inf.
  void sanitize_statuses() {
    const int N = num_cols();
    for (int j = 0; j < N; ++j) {
      if (in_basis[static_cast<std::size_t>(j)]) continue;
      if (at_upper[static_cast<std::size_t>(j)] && !std::isfinite(col_hi(j)))
        at_upper[static_cast<std::size_t>(j)] = 0;
      else if (!at_upper[static_cast<std::size_t>(j)] && !std::isfinite(col_lo(j)))
        at_upper[static_cast<std::size_t>(j)] = 1;
    }
  }

  bool refactor() {
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd col(m);
    for (int i = 0; i < m; ++i) {
      gather_col(basis[static_cast<std::size_t>(i)], col);
      B.col(i) = col;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Binv = lu.inverse();
    if (!Binv.allFinite()) return false;
    updates_since_refactor_ = 0;
    compute_xB();
    return xB.allFinite();
  }

  void compute_xB() {
    Eigen::VectorXd badj(m);
    for (int i = 0; i < m; ++i) badj(i) = rhs[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      if (in_basis[static_cast<std::size_t>(j)]) continue;
      const double v = nonbasic_value(j);
      if (v == 0.0) continue;
      const SparseCol& c = acols[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < c.rows.size(); ++k) badj(c.rows[k]) -= c.vals[k] * v;
    }
    // slacks and artificials have nonbasic value 0 in every configuration
    xB = Binv * badj;
  }

  // Sets up the all-artificial basis for phase 1.
  void start_phase1() {
    phase1_ = true;
    art_open_ = true;
    const int N = num_cols();
    at_upper.assign(static_cast<std::size_t>(N), 0);
    in_basis.assign(static_cast<std::size_t>(N), 0);
    for (int j = 0; j < N - 2 * m; ++j) {
      if (!std::isfinite(col_lo(j))) at_upper[static_cast<std::size_t>(j)] = 1;
    }
    for (int i = 0; i < m; ++i) {
      const int sj = n + i;  // slack starts nonbasic at 0; for >= rows that is its upper bound
      if (rel[static_cast<std::size_t>(i)] == 1) at_upper[static_cast<std::size_t>(sj)] = 1;
    }
    Eigen::VectorXd resid(m);
    for (int i = 0; i < m; ++i) resid(i) = rhs[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      const double v = nonbasic_value(j);
      if (v == 0.0) continue;
      const SparseCol& c = acols[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < c.rows.size(); ++k) resid(c.rows[k]) -= c.vals[k] * v;
    }
    art_sign_.resize(static_cast<std::size_t>(m));
    basis.resize(static_cast<std::size_t>(m));
    Binv.setZero(m, m);
    xB.resize(m);
    for (int i = 0; i < m; ++i) {
      art_sign_[static_cast<std::size_t>(i)] = resid(i) >= 0.0 ? 1.0 : -1.0;
      basis[static_cast<std::size_t>(i)] = n + m + i;
      in_basis[static_cast<std::size_t>(n + m + i)] = 1;
      Binv(i, i) = art_sign_[static_cast<std::size_t>(i)];
      xB(i) = std::abs(resid(i));
    }
    updates_since_refactor_ = 0;
  }

  double phase1_objective() const {
    double s = 0.0;
    for (int i = 0; i < m; ++i)
      if (is_artificial(basis[static_cast<std::size_t>(i)])) s += xB(i);
    return s;
  }

  // Pivots remaining artificials out of the basis after a successful phase 1;
  // rows with no eligible pivot are redundant and keep a locked artificial.
  void expel_artificials() {
    for (int r = 0; r < m; ++r) {
      if (!is_artificial(basis[static_cast<std::size_t>(r)])) continue;
      int best = -1;
      double best_mag = kPivotTol;
      for (int j = 0; j < n + m; ++j) {
        if (in_basis[static_cast<std::size_t>(j)]) continue;
        if (col_lo(j) == col_hi(j)) continue;
        gather_col(j, scratch_);
        const double a = Binv.row(r).dot(scratch_);
        if (std::abs(a) > best_mag) {
          best_mag = std::abs(a);
          best = j;
          if (best_mag > 0.1) break;
        }
      }
      if (best >= 0) pivot_in_place(r, best);
    }
    art_open_ = false;
  }

  void end_phase1() { phase1_ = false; }

  LpResult primal(std::int64_t max_iters) {
    Eigen::VectorXd y(m), w(m);
    int stall = 0;
    bool bland = false;
    for (std::int64_t it = 0; it < max_iters; ++it, ++iterations) {
      if (updates_since_refactor_ >= kRefactorEvery) {
        if (!refactor()) return LpResult::IterLimit;
      }
      // BTRAN
      Eigen::VectorXd cB(m);
      for (int i = 0; i < m; ++i) cB(i) = col_cost(basis[static_cast<std::size_t>(i)]);
      y.noalias() = Binv.transpose() * cB;
      // pricing
      int q = -1, dir = 0;
      double best = bland ? 0.0 : kDualTol;
      const int N = num_cols();
      for (int j = 0; j < N; ++j) {
        if (in_basis[static_cast<std::size_t>(j)]) continue;
        if (!phase1_ && is_artificial(j)) continue;
        const double l = col_lo(j), u = col_hi(j);
        if (l == u) continue;
        const double d = col_cost(j) - dot_col(y, j);
        if (!at_upper[static_cast<std::size_t>(j)] && d < -std::max(best, kDualTol)) {
          if (bland) { q = j; dir = 1; break; }
          best = -d; q = j; dir = 1;
        } else if (at_upper[static_cast<std::size_t>(j)] && d > std::max(best, kDualTol)) {
          if (bland) { q = j; dir = -1; break; }
          best = d; q = j; dir = -1;
        }
      }
      if (q < 0) return LpResult::Optimal;

      ftran_col(q, w);

      // ratio test: entering moves from its bound by t >= 0 in direction dir
      double t_best = kInf;
      int r_best = -1;  // -1: limited by entering's own opposite bound
      const double own_range = col_hi(q) - col_lo(q);
      if (std::isfinite(own_range)) t_best = own_range;
      for (int i = 0; i < m; ++i) {
        const double delta = -dir * w(i);  // change in xB(i) per unit t
        if (delta < -kRatioTol) {
          const double l = col_lo(basis[static_cast<std::size_t>(i)]);
          if (!std::isfinite(l)) continue;
          const double t = (xB(i) - l) / (-delta);
          if (t < t_best - kRatioTol ||
              (t < t_best + kRatioTol && better_leaving(r_best, i, w))) {
            t_best = std::max(t, 0.0);
            r_best = i;
          }
        } else if (delta > kRatioTol) {
          const double u = col_hi(basis[static_cast<std::size_t>(i)]);
          if (!std::isfinite(u)) continue;
          const double t = (u - xB(i)) / delta;
          if (t < t_best - kRatioTol ||
              (t < t_best + kRatioTol && better_leaving(r_best, i, w))) {
            t_best = std::max(t, 0.0);
            r_best = i;
          }
        }
      }
      if (!std::isfinite(t_best)) {
        return phase1_ ? LpResult::IterLimit : LpResult::Unbounded;
      }
      if (t_best <= kRatioTol) {
        if (++stall > kStallLimit) bland = true;
      } else {
        stall = 0;
      }
      if (r_best < 0) {
        // bound flip, no basis change
        for (int i = 0; i < m; ++i) xB(i) += -dir * w(i) * t_best;
        at_upper[static_cast<std::size_t>(q)] ^= 1;
        continue;
      }
      // update basic values and pivot
      for (int i = 0; i < m; ++i) xB(i) += -dir * w(i) * t_best;
      const double enter_val =
          dir > 0 ? nonbasic_value(q) + t_best : nonbasic_value(q) - t_best;
      const int leaving = basis[static_cast<std::size_t>(r_best)];
      const double delta_r = -dir * w(r_best);
      at_upper[static_cast<std::size_t>(leaving)] = delta_r > 0 ? 1 : 0;
      apply_eta(r_best, w);
      in_basis[static_cast<std::size_t>(leaving)] = 0;
      in_basis[static_cast<std::size_t>(q)] = 1;
      basis[static_cast<std::size_t>(r_best)] = q;
      xB(r_best) = enter_val;
    }
    return LpResult::IterLimit;
  }

  // Dual simplex from a dual-feasible basis; used to re-solve after bound
  // changes during branch and bound.
  LpResult dual(std::int64_t max_iters) {
    Eigen::VectorXd y(m), w(m);
    for (std::int64_t it = 0; it < max_iters; ++it, ++iterations) {
      if (updates_since_refactor_ >= kRefactorEvery) {
        if (!refactor()) return LpResult::IterLimit;
      }
      int r = -1;
      bool below = false;
      double worst = kPrimalTol;
      for (int i = 0; i < m; ++i) {
        const int bj = basis[static_cast<std::size_t>(i)];
        const double l = col_lo(bj), u = col_hi(bj);
        if (xB(i) < l - worst) { worst = l - xB(i); r = i; below = true; }
        else if (xB(i) > u + worst) { worst = xB(i) - u; r = i; below = false; }
      }
      if (r < 0) return LpResult::Optimal;

      Eigen::VectorXd cB(m);
      for (int i = 0; i < m; ++i) cB(i) = col_cost(basis[static_cast<std::size_t>(i)]);
      y.noalias() = Binv.transpose() * cB;
      const Eigen::RowVectorXd rho = Binv.row(r);

      int q = -1, dirq = 0;
      double best_ratio = kInf;
      double best_mag = 0.0;
      const int N = num_cols();
      for (int j = 0; j < N; ++j) {
        if (in_basis[static_cast<std::size_t>(j)]) continue;
        if (!phase1_ && is_artificial(j)) continue;
        const double l = col_lo(j), u = col_hi(j);
        if (l == u) continue;
        double alpha = 0.0;
        if (j < n) {
          const SparseCol& c = acols[static_cast<std::size_t>(j)];
          for (std::size_t k = 0; k < c.rows.size(); ++k) alpha += c.vals[k] * rho(c.rows[k]);
        } else if (j < n + m) {
          alpha = rho(j - n);
        } else {
          alpha = art_sign_[static_cast<std::size_t>(j - n - m)] * rho(j - n - m);
        }
        if (std::abs(alpha) <= kPivotTol) continue;
        int dir;
        if (below) {
          if (!at_upper[static_cast<std::size_t>(j)] && alpha < 0) dir = 1;
          else if (at_upper[static_cast<std::size_t>(j)] && alpha > 0) dir = -1;
          else continue;
        } else {
          if (!at_upper[static_cast<std::size_t>(j)] && alpha > 0) dir = 1;
          else if (at_upper[static_cast<std::size_t>(j)] && alpha < 0) dir = -1;
          else continue;
        }
        const double d = col_cost(j) - dot_col(y, j);
        const double ratio = std::abs(d) / std::abs(alpha);
        if (ratio < best_ratio - kRatioTol ||
            (ratio < best_ratio + kRatioTol && std::abs(alpha) > best_mag)) {
          best_ratio = ratio;
          best_mag = std::abs(alpha);
          q = j;
          dirq = dir;
        }
      }
      if (q < 0) return LpResult::Infeasible;

      ftran_col(q, w);
      const double wr = w(r);
      if (std::abs(wr) <= kPivotTol) {
        if (updates_since_refactor_ > 0) {
          if (!refactor()) return LpResult::IterLimit;
          continue;
        }
        return LpResult::IterLimit;
      }
      const double bound = below ? col_lo(basis[static_cast<std::size_t>(r)])
                                 : col_hi(basis[static_cast<std::size_t>(r)]);
      const double t = (xB(r) - bound) / (dirq * wr);
      for (int i = 0; i < m; ++i) xB(i) -= dirq * w(i) * t;
      const double enter_val = nonbasic_value(q) + dirq * t;
      const int leaving = basis[static_cast<std::size_t>(r)];
      at_upper[static_cast<std::size_t>(leaving)] = below ? 0 : 1;
      apply_eta(r, w);
      in_basis[static_cast<std::size_t>(leaving)] = 0;
      in_basis[static_cast<std::size_t>(q)] = 1;
      basis[static_cast<std::size_t>(r)] = q;
      xB(r) = enter_val;
    }
    return LpResult::IterLimit;
  }

  // Full cold solve: phase 1 then phase 2.
  LpResult solve_cold(std::int64_t max_iters) {
    for (int j = 0; j < n; ++j) {
      if (lo[static_cast<std::size_t>(j)] > hi[static_cast<std::size_t>(j)] + 1e-12)
        return LpResult::Infeasible;
    }
    start_phase1();
    LpResult r1 = primal(max_iters);
    if (r1 == LpResult::IterLimit) return r1;
    if (phase1_objective() > 1e-7) {
      end_phase1();
      return LpResult::Infeasible;
    }
    expel_artificials();
    end_phase1();
    return primal(max_iters);
  }

  // Re-solve after bound changes, reusing the current basis. The dual-simplex
  // infeasibility verdict is only trustworthy from a dual-feasible start, so
  // stale bound statuses are repaired by bound flips first; when a flip would
  // land on an infinite bound the solve falls back to a cold start.
  LpResult resolve(std::int64_t max_iters) {
    for (int j = 0; j < n; ++j) {
      if (lo[static_cast<std::size_t>(j)] > hi[static_cast<std::size_t>(j)] + 1e-12)
        return LpResult::Infeasible;
    }
    sanitize_statuses();
    Eigen::VectorXd cB(m), y(m);
    for (int i = 0; i < m; ++i) cB(i) = col_cost(basis[static_cast<std::size_t>(i)]);
    y.noalias() = Binv.transpose() * cB;
    const int N = num_cols();
    for (int j = 0; j < N; ++j) {
      if (in_basis[static_cast<std::size_t>(j)]) continue;
      if (is_artificial(j)) continue;
      const double l = col_lo(j), u = col_hi(j);
      if (l == u) continue;
      const double d = col_cost(j) - dot_col(y, j);
      if (!at_upper[static_cast<std::size_t>(j)] && d < -kDualTol) {
        if (!std::isfinite(u)) return solve_cold(max_iters);
        at_upper[static_cast<std::size_t>(j)] = 1;
      } else if (at_upper[static_cast<std::size_t>(j)] && d > kDualTol) {
        if (!std::isfinite(l)) return solve_cold(max_iters);
        at_upper[static_cast<std::size_t>(j)] = 0;
      }
    }
    compute_xB();
    if (!xB.allFinite()) {
      if (!refactor()) return solve_cold(max_iters);
    }
    LpResult r = dual(max_iters);
    if (r == LpResult::Infeasible) return r;
    if (r == LpResult::IterLimit) return solve_cold(max_iters);
    // confirm optimality / clean up residual dual error
    return primal(max_iters);
  }

  double objective_value() const {
    double v = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!in_basis[static_cast<std::size_t>(j)])
        v += cost[static_cast<std::size_t>(j)] * nonbasic_value(j);
    }
    for (int i = 0; i < m; ++i) {
      const int bj = basis[static_cast<std::size_t>(i)];
      if (bj < n) v += cost[static_cast<std::size_t>(bj)] * xB(i);
    }
    return v;
  }

  // Fixes nonbasic structural variables whose reduced cost proves they cannot
  // move off their bound in any solution better than the cutoff. Valid
  // globally because incumbents only improve. Applies to `rlo`/`rhi`.
  int reduced_cost_fix(double slack, std::vector<double>& rlo, std::vector<double>& rhi) {
    if (!(slack >= 0.0) || !std::isfinite(slack)) return 0;
    Eigen::VectorXd cB(m), y(m);
    for (int i = 0; i < m; ++i) cB(i) = col_cost(basis[static_cast<std::size_t>(i)]);
    y.noalias() = Binv.transpose() * cB;
    int fixed = 0;
    for (int j = 0; j < n; ++j) {
      if (in_basis[static_cast<std::size_t>(j)]) continue;
      if (rlo[static_cast<std::size_t>(j)] == rhi[static_cast<std::size_t>(j)]) continue;
      const double d = col_cost(j) - dot_col(y, j);
      if (!at_upper[static_cast<std::size_t>(j)] && d > kDualTol && d > slack) {
        rhi[static_cast<std::size_t>(j)] = rlo[static_cast<std::size_t>(j)];
        ++fixed;
      } else if (at_upper[static_cast<std::size_t>(j)] && d < -kDualTol && -d > slack) {
        rlo[static_cast<std::size_t>(j)] = rhi[static_cast<std::size_t>(j)];
        ++fixed;
      }
    }
    return fixed;
  }

  void extract(std::vector<double>& x) const {
    x.assign(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j)
      if (!in_basis[static_cast<std::size_t>(j)]) x[static_cast<std::size_t>(j)] = nonbasic_value(j);
    for (int i = 0; i < m; ++i) {
      const int bj = basis[static_cast<std::size_t>(i)];
      if (bj < n) x[static_cast<std::size_t>(bj)] = xB(i);
    }
    for (int j = 0; j < n; ++j) {
      double& v = x[static_cast<std::size_t>(j)];
      v = std::min(std::max(v, lo[static_cast<std::size_t>(j)]), hi[static_cast<std::size_t>(j)]);
      if (std::abs(v) < 1e-11) v = 0.0;
    }
  }

 private:
  bool phase1_ = false;
  bool art_open_ = false;
  std::vector<double> art_sign_;
  Eigen::VectorXd scratch_;
  int updates_since_refactor_ = 0;

  // prefer larger pivot magnitude; break remaining ties by smaller basic index
  bool better_leaving(int cur, int cand, const Eigen::VectorXd& w) const {
    if (cur < 0) return true;
    const double mc = std::abs(w(cur)), mn = std::abs(w(cand));
    if (mn > mc * 4.0) return true;
    if (mc > mn * 4.0) return false;
    return basis[static_cast<std::size_t>(cand)] < basis[static_cast<std::size_t>(cur)];
  }

  void apply_eta(int r, const Eigen::VectorXd& w) {
    const double wr = w(r);
    Eigen::RowVectorXd pr = Binv.row(r) / wr;
    Eigen::VectorXd wc = w;
    wc(r) = 0.0;
    Binv.noalias() -= wc * pr;
    Binv.row(r) = pr;
    ++updates_since_refactor_;
  }

  // degenerate pivot used when expelling artificials
  void pivot_in_place(int r, int q) {
    gather_col(q, scratch_);
    Eigen::VectorXd w = Binv * scratch_;
    if (std::abs(w(r)) <= kPivotTol) return;
    const int leaving = basis[static_cast<std::size_t>(r)];
    at_upper[static_cast<std::size_t>(leaving)] = 0;
    apply_eta(r, w);
    in_basis[static_cast<std::size_t>(leaving)] = 0;
    in_basis[static_cast<std::size_t>(q)] = 1;
    basis[static_cast<std::size_t>(r)] = q;
    // entering keeps its current value; xB(r) was ~0 for the artificial
    xB(r) = nonbasic_value(q);
  }
};

std::int64_t iter_budget(const Simplex& s) {
  return 20000 + 200LL * s.m + 20LL * s.n;
}

struct BnbNode {
  int parent = -1;
  int var = -1;
  double new_lo = 0.0, new_hi = kInf;
  bool has_bounds = false;
  double bound = -kInf;  // parent LP objective (internal minimize sense)
  std::int64_t id = 0;
  Basis basis;  // basis of the parent LP optimum
};

struct NodeOrder {
  // min-heap on bound; ties resolved toward the newest node so the search
  // dives down the tree while bounds stay equal
  bool operator()(const std::pair<double, std::int64_t>& a,
                  const std::pair<double, std::int64_t>& b) const {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  }
};

Solution solve_lp_impl(const Problem& p, const SolverOptions& opts, bool relax_integrality) {
  p.validate();
  (void)opts;
  (void)relax_integrality;
  Simplex s;
  const bool maximize = p.sense() == Sense::Maximize;
  s.load(p, maximize);
  Solution out;
  LpResult r = s.solve_cold(iter_budget(s));
  out.stats.lp_iterations = s.iterations;
  switch (r) {
    case LpResult::Optimal: {
      out.status = Status::Optimal;
      s.extract(out.values);
      const double internal = s.objective_value();
      out.objective = maximize ? -internal : internal;
      out.gap = 0.0;
      break;
    }
    case LpResult::Infeasible:
      out.status = Status::Infeasible;
      break;
    case LpResult::Unbounded:
      out.status = Status::Unbounded;
      break;
    case LpResult::IterLimit:
      out.status = Status::LimitReached;
      out.gap = kInf;
      break;
  }
  return out;
}

}  // namespace

Solution solve_lp(const Problem& p, const SolverOptions& opts) {
  return solve_lp_impl(p, opts, true);
}

Solution solve_milp(const Problem& p, const SolverOptions& opts) {
  return solve_milp(p, opts, nullptr, nullptr);
}

Solution solve_milp(const Problem& p, const SolverOptions& opts, const Basis* warm,
                    Basis* basis_out) {
  p.validate();
  const bool maximize = p.sense() == Sense::Maximize;
  const auto t_start = std::chrono::steady_clock::now();
  auto out_of_time = [&]() {
    if (!std::isfinite(opts.time_limit_s)) return false;
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start);
    return dt.count() > opts.time_limit_s;
  };

  Simplex s;
  s.load(p, maximize);
  std::vector<double> root_lo = s.lo, root_hi = s.hi;

  std::vector<int> int_vars;
  for (int j = 0; j < p.num_variables(); ++j)
    if (p.variables()[static_cast<std::size_t>(j)].domain == VarDomain::Integer)
      int_vars.push_back(j);

  Solution out;

  // root solve (warm start when a compatible basis is supplied)
  LpResult r;
  bool warm_ok = false;
  if (warm != nullptr && !warm->empty() && s.restore(*warm)) {
    r = s.resolve(iter_budget(s));
    if (r == LpResult::IterLimit) {
      r = s.solve_cold(iter_budget(s));
    } else {
      warm_ok = true;
    }
  } else {
    r = s.solve_cold(iter_budget(s));
  }
  (void)warm_ok;

  if (r == LpResult::Infeasible) {
    out.status = Status::Infeasible;
    out.stats.lp_iterations = s.iterations;
    out.stats.nodes = 1;
    return out;
  }
  if (r == LpResult::Unbounded) {
    out.status = Status::Unbounded;
    out.stats.lp_iterations = s.iterations;
    out.stats.nodes = 1;
    return out;
  }
  if (r == LpResult::IterLimit) {
    out.status = Status::LimitReached;
    out.gap = kInf;
    out.stats.lp_iterations = s.iterations;
    out.stats.nodes = 1;
    return out;
  }

  std::vector<BnbNode> nodes(1);
  nodes[0].bound = s.objective_value();
  std::priority_queue<std::pair<double, std::int64_t>, std::vector<std::pair<double, std::int64_t>>,
                      NodeOrder>
      open;

  double incumbent_obj = kInf;
  std::vector<double> incumbent_x;
  bool have_incumbent = false;
  std::int64_t processed = 0;
  double best_open_bound = nodes[0].bound;
  bool limit_hit = false;

  auto cutoff = [&] {
    return incumbent_obj - opts.relative_gap * std::max(1.0, std::abs(incumbent_obj));
  };

  // Ceiling heuristic: push fractional integers up to the next whole value and
  // re-solve, a few rounds; integer-feasible results seed the incumbent so
  // best-bound pruning has teeth from the start.
  if (!int_vars.empty()) {
    std::vector<double> x;
    s.extract(x);
    bool frac0 = false;
    for (int j : int_vars) {
      const double f = x[static_cast<std::size_t>(j)] - std::floor(x[static_cast<std::size_t>(j)]);
      if (f > opts.integrality_tol && 1.0 - f > opts.integrality_tol) frac0 = true;
    }
    if (!frac0) {
      incumbent_obj = s.objective_value();
      s.extract(incumbent_x);
      have_incumbent = true;
    } else {
      Basis root_basis;
      s.snapshot(root_basis);
      bool ok = true;
      for (int round = 0; round < 6 && ok; ++round) {
        bool frac = false;
        for (int j : int_vars) {
          const double v = x[static_cast<std::size_t>(j)];
          const double f = v - std::floor(v);
          if (f > opts.integrality_tol && 1.0 - f > opts.integrality_tol) {
            const double up = std::ceil(v - opts.integrality_tol);
            if (up > s.hi[static_cast<std::size_t>(j)] + 1e-9) {
              ok = false;
              break;
            }
            s.lo[static_cast<std::size_t>(j)] =
                std::max(s.lo[static_cast<std::size_t>(j)], up);
            frac = true;
          }
        }
        if (!ok) break;
        if (!frac) {
          incumbent_obj = s.objective_value();
          s.extract(incumbent_x);
          have_incumbent = true;
          break;
        }
        if (s.resolve(iter_budget(s)) != LpResult::Optimal) break;
        s.extract(x);
      }
      s.lo = root_lo;
      s.hi = root_hi;
      if (!s.restore(root_basis)) {
        s.solve_cold(iter_budget(s));
      } else {
        s.resolve(iter_budget(s));
      }
    }
    if (have_incumbent) {
      const double slack = cutoff() - nodes[0].bound;
      if (s.reduced_cost_fix(slack, root_lo, root_hi) > 0) {
        s.lo = root_lo;
        s.hi = root_hi;
      }
    }
  }

  // the root optimum is the useful warm start for related problems
  if (basis_out != nullptr) s.snapshot(*basis_out);

  // node processing shares the simplex; `current` tracks whose final basis is loaded
  std::int64_t current = -1;

  auto apply_bounds = [&](std::int64_t id) {
    s.lo = root_lo;
    s.hi = root_hi;
    for (std::int64_t k = id; k > 0; k = nodes[static_cast<std::size_t>(k)].parent) {
      const BnbNode& nd = nodes[static_cast<std::size_t>(k)];
      if (!nd.has_bounds) continue;
      auto& l = s.lo[static_cast<std::size_t>(nd.var)];
      auto& h = s.hi[static_cast<std::size_t>(nd.var)];
      l = std::max(l, nd.new_lo);
      h = std::min(h, nd.new_hi);
    }
  };

  auto frac_of = [&](const std::vector<double>& x, int j) {
    const double v = x[static_cast<std::size_t>(j)];
    return v - std::floor(v);
  };

  std::int64_t next_id = 1;
  open.emplace(nodes[0].bound, 0);
  std::int64_t plunge_next = -1;  // child processed in place before queue pops

  while (true) {
    if (processed >= opts.node_limit || out_of_time()) {
      limit_hit = true;
      break;
    }
    std::int64_t id;
    if (plunge_next >= 0) {
      id = plunge_next;
      plunge_next = -1;
      if (have_incumbent && nodes[static_cast<std::size_t>(id)].bound >= cutoff()) continue;
    } else if (!open.empty()) {
      auto [bound, top_id] = open.top();
      open.pop();
      id = top_id;
      best_open_bound = bound;
      if (have_incumbent) {
        const double gap = (incumbent_obj - bound) / std::max(1.0, std::abs(incumbent_obj));
        if (gap <= opts.relative_gap) break;  // proven within tolerance
      }
    } else {
      break;
    }
    BnbNode& nd = nodes[static_cast<std::size_t>(id)];
    ++processed;
    static const bool dbg = std::getenv("LUNEX_BNB_DEBUG") != nullptr;
    if (dbg && processed % 200 == 0)
      std::fprintf(stderr, "[bnb] n=%lld it=%lld inc=%.3f bnd=%.3f open=%zu\n",
                   (long long)processed, (long long)s.iterations,
                   have_incumbent ? (maximize ? -incumbent_obj : incumbent_obj) : 0.0/0.0,
                   maximize ? -best_open_bound : best_open_bound, open.size());

    apply_bounds(id);
    LpResult lr;
    if (id == 0) {
      // root already solved above
      lr = LpResult::Optimal;
    } else if (current == nd.parent || (!nd.basis.empty() && s.restore(nd.basis))) {
      lr = s.resolve(iter_budget(s));
    } else {
      lr = s.solve_cold(iter_budget(s));
    }
    current = id;
    if (lr == LpResult::Infeasible) continue;
    if (lr == LpResult::Unbounded) {
      // integrality restrictions cannot unbound a bounded relaxation; treat as
      // an unbounded problem surfaced below the root
      out.status = Status::Unbounded;
      out.stats.lp_iterations = s.iterations;
      out.stats.nodes = processed;
      return out;
    }
    if (lr == LpResult::IterLimit) {
      limit_hit = true;
      continue;
    }
    const double obj = s.objective_value();
    if (have_incumbent &&
        obj >= incumbent_obj - opts.relative_gap * std::max(1.0, std::abs(incumbent_obj)))
      continue;

    std::vector<double> x;
    s.extract(x);
    int branch_var = -1;
    double branch_score = -1.0;
    for (int j : int_vars) {
      const double f = frac_of(x, j);
      const double dist = std::min(f, 1.0 - f);
      if (dist > opts.integrality_tol && dist > branch_score + 1e-12) {
        branch_score = dist;
        branch_var = j;
      }
    }
    if (branch_var < 0) {
      if (obj < incumbent_obj) {
        incumbent_obj = obj;
        incumbent_x = std::move(x);
        have_incumbent = true;
      }
      continue;
    }
    const double v = x[static_cast<std::size_t>(branch_var)];
    static const bool dbg2 = std::getenv("LUNEX_BNB_DEBUG2") != nullptr;
    if (dbg2)
      std::fprintf(stderr, "[branch] n=%lld obj=%.3f var=%s val=%.4f depth-ish id=%lld\n",
                   (long long)processed, obj,
                   p.variables()[static_cast<std::size_t>(branch_var)].name.c_str(), v,
                   (long long)id);
    Basis snap;
    if (nodes.size() < 40000) s.snapshot(snap);  // beyond this, children re-solve cold
    for (int side = 0; side < 2; ++side) {
      BnbNode child;
      child.parent = static_cast<int>(id);
      child.var = branch_var;
      child.has_bounds = true;
      if (side == 0) {
        child.new_lo = 0.0;
        child.new_hi = std::floor(v);
      } else {
        child.new_lo = std::ceil(v);
        child.new_hi = kInf;
      }
      child.bound = obj;
      child.id = next_id++;
      child.basis = snap;
      nodes.push_back(std::move(child));
      if (side == 1) {
        // dive toward the feasibility-leaning side; the sibling waits in the queue
        plunge_next = nodes.back().id;
      } else {
        open.emplace(obj, nodes.back().id);
      }
    }
  }

  out.stats.lp_iterations = s.iterations;
  out.stats.nodes = processed;
  if (plunge_next >= 0)  // a pending dive child counts as an open node
    best_open_bound = std::min(best_open_bound,
                               nodes[static_cast<std::size_t>(plunge_next)].bound);
  if (have_incumbent) {
    double bound = open.empty() && !limit_hit && plunge_next < 0 ? incumbent_obj
                                                                 : best_open_bound;
    if (!open.empty()) bound = std::min(bound, open.top().first);
    const double gap =
        std::max(0.0, (incumbent_obj - bound) / std::max(1.0, std::abs(incumbent_obj)));
    out.status = limit_hit && gap > opts.relative_gap ? Status::LimitReached : Status::Optimal;
    out.objective = maximize ? -incumbent_obj : incumbent_obj;
    out.values = incumbent_x;
    out.gap = gap;
  } else if (limit_hit) {
    out.status = Status::LimitReached;
    out.gap = kInf;
  } else {
    out.status = Status::Infeasible;
  }
  return out;
}

bool check_solution(const Problem& p, const Solution& s, const SolverOptions& opts) {
  if (s.status != Status::Optimal) return false;
  if (s.values.size() != static_cast<std::size_t>(p.num_variables())) return false;
  for (int j = 0; j < p.num_variables(); ++j) {
    const Variable& v = p.variables()[static_cast<std::size_t>(j)];
    const double x = s.values[static_cast<std::size_t>(j)];
    if (x < -opts.feasibility_tol || x > v.upper + opts.feasibility_tol) return false;
    if (v.domain == VarDomain::Integer &&
        std::abs(x - std::round(x)) > opts.integrality_tol)
      return false;
  }
  for (const Constraint& c : p.constraints()) {
    double lhs = 0.0;
    for (const Term& t : c.terms) lhs += t.coef * s.values[static_cast<std::size_t>(t.var)];
    const double scale = std::max(1.0, std::abs(c.rhs));
    const double tol = opts.feasibility_tol * scale;
    if (c.rel == Relation::Le && lhs > c.rhs + tol) return false;
    if (c.rel == Relation::Ge && lhs < c.rhs - tol) return false;
    if (c.rel == Relation::Eq && std::abs(lhs - c.rhs) > tol) return false;
  }
  const double obj = p.eval_objective(s.values);
  return std::abs(obj - s.objective) <= 1e-9 * std::max(1.0, std::abs(s.objective));
}

Problem relax(const Problem& p) {
  Problem r;
  for (const Variable& v : p.variables()) r.add_variable(v.name, VarDomain::Continuous, v.upper);
  for (const Constraint& c : p.constraints()) r.add_constraint(c.name, c.terms, c.rel, c.rhs);
  r.set_objective(p.sense(), p.objective());
  return r;
}

double dual_bound(const Problem& p, const SolverOptions& opts) {
  return solve_lp(relax(p), opts).objective;
}

namespace {

std::string lp_safe(const std::string& name, int idx, char prefix) {
  std::string s;
  s.reserve(name.size() + 4);
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') s.push_back(c);
    else s.push_back('_');
  }
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == 'e' || s[0] == 'E')
    s = std::string(1, prefix) + std::to_string(idx) + "_" + s;
  return s;
}

void write_expr(std::ostream& os, const LinearExpr& e, const std::vector<std::string>& names) {
  bool first = true;
  if (e.empty()) {
    os << " 0 " << (names.empty() ? "x" : names[0]);
    return;
  }
  for (const Term& t : e) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", std::abs(t.coef));
    os << (t.coef < 0 ? (first ? " - " : " - ") : (first ? " " : " + ")) << buf << ' '
       << names[static_cast<std::size_t>(t.var)];
    first = false;
  }
}

}  // namespace

void write_lp(const Problem& p, std::ostream& os) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p.num_variables()));
  for (int j = 0; j < p.num_variables(); ++j)
    names.push_back(lp_safe(p.variables()[static_cast<std::size_t>(j)].name, j, 'x'));
  os << (p.sense() == Sense::Maximize ? "Maximize" : "Minimize") << "\n obj:";
  write_expr(os, p.objective(), names);
  os << "\nSubject To\n";
  for (int i = 0; i < p.num_constraints(); ++i) {
    const Constraint& c = p.constraints()[static_cast<std::size_t>(i)];
    os << ' ' << lp_safe(c.name, i, 'c') << ':';
    write_expr(os, c.terms, names);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", c.rhs);
    os << (c.rel == Relation::Le ? " <= " : c.rel == Relation::Ge ? " >= " : " = ") << buf
       << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < p.num_variables(); ++j) {
    const Variable& v = p.variables()[static_cast<std::size_t>(j)];
    if (std::isfinite(v.upper)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", v.upper);
      os << ' ' << "0 <= " << names[static_cast<std::size_t>(j)] << " <= " << buf << "\n";
    } else {
      os << ' ' << names[static_cast<std::size_t>(j)] << " >= 0\n";
    }
  }
  bool any_int = false;
  for (const Variable& v : p.variables()) any_int |= v.domain == VarDomain::Integer;
  if (any_int) {
    os << "Generals\n";
    for (int j = 0; j < p.num_variables(); ++j)
      if (p.variables()[static_cast<std::size_t>(j)].domain == VarDomain::Integer)
        os << ' ' << names[static_cast<std::size_t>(j)] << "\n";
  }
  os << "End\n";
}

std::string to_lp_string(const Problem& p) {
  std::ostringstream os;
  write_lp(p, os);
  return os.str();
}

}  // namespace lunex::milp
