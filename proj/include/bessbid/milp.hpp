#ifndef BESSBID_MILP_HPP
#define BESSBID_MILP_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bessbid::milp {

enum class Relation { le, eq, ge };
enum class Sense { maximize, minimize };
enum class SolveStatus { optimal, feasible_budget_hit, infeasible, unbounded };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
    int var = 0;
    double coeff = 0.0;
};

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Solver-agnostic mixed-integer linear program. Variables and constraints
/// are registered through add_variable / add_constraint; handles are dense
/// indices, stable for the model's lifetime.
class Model {
public:
    struct Variable {
        std::string name;
        double lb = 0.0;
        double ub = kInf;
        bool integral = false;
    };
    struct Constraint {
        std::vector<Term> terms;
        Relation rel = Relation::le;
        double rhs = 0.0;
    };

    int add_variable(const std::string& name, double lb, double ub, bool integral) {
        if (lb > ub) throw ModelError("inverted bounds for variable '" + name + "'");
        if (integral && (!std::isfinite(lb) || !std::isfinite(ub)))
            throw ModelError("integer variable '" + name + "' must have finite bounds");
        if (names_.count(name)) throw ModelError("duplicate variable name '" + name + "'");
        int handle = static_cast<int>(vars_.size());
        vars_.push_back({name, lb, ub, integral});
        obj_.push_back(0.0);
        names_.emplace(name, handle);
        return handle;
    }

    int add_constraint(std::vector<Term> terms, Relation rel, double rhs) {
        for (const auto& t : terms)
            if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
                throw ModelError("constraint references undeclared variable handle");
        int handle = static_cast<int>(cons_.size());
        cons_.push_back({std::move(terms), rel, rhs});
        return handle;
    }

    void set_objective_coeff(int var, double coeff) {
        if (var < 0 || var >= static_cast<int>(vars_.size()))
            throw ModelError("objective references undeclared variable handle");
        obj_[var] = coeff;
    }
    void add_objective_coeff(int var, double coeff) {
        if (var < 0 || var >= static_cast<int>(vars_.size()))
            throw ModelError("objective references undeclared variable handle");
        obj_[var] += coeff;
    }
    void set_sense(Sense s) { sense_ = s; }

    void set_bounds(int var, double lb, double ub) {
        if (lb > ub) throw ModelError("inverted bounds");
        vars_[var].lb = lb;
        vars_[var].ub = ub;
    }

    const std::vector<Variable>& variables() const { return vars_; }
    const std::vector<Constraint>& constraints() const { return cons_; }
    const std::vector<double>& objective() const { return obj_; }
    Sense sense() const { return sense_; }
    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(cons_.size()); }

    /// Debug dump, one variable / constraint per line.
    void dump(std::ostream& os) const {
        os << (sense_ == Sense::maximize ? "maximize" : "minimize");
        for (int j = 0; j < num_vars(); ++j)
            if (obj_[j] != 0.0) os << " " << obj_[j] << "*" << vars_[j].name;
        os << "\n";
        for (const auto& v : vars_)
            os << "var " << v.name << " in [" << v.lb << ", " << v.ub << "]"
               << (v.integral ? " integer" : "") << "\n";
        for (const auto& c : cons_) {
            os << "con";
            for (const auto& t : c.terms) os << " " << t.coeff << "*" << vars_[t.var].name;
            os << (c.rel == Relation::le ? " <= " : c.rel == Relation::eq ? " == " : " >= ")
               << c.rhs << "\n";
        }
    }

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> cons_;
    std::vector<double> obj_;
    Sense sense_ = Sense::maximize;
    std::unordered_map<std::string, int> names_;
};

struct Solution {
    SolveStatus status = SolveStatus::infeasible;
    double objective = 0.0;       ///< in the model's sense
    std::vector<double> x;        ///< per-variable assignment (empty if none)
    double gap = 0.0;             ///< relative gap when budget was hit

    bool has_solution() const { return !x.empty(); }
};

struct SolverOptions {
    double tol_feas = 1e-7;       ///< bound / row feasibility
    double tol_int = 1e-6;        ///< integrality tolerance
    double tol_gap = 1e-6;        ///< relative optimality gap
    int node_limit = 5000;        ///< branch-and-bound node budget (deterministic)
    double time_limit_s = 0.0;    ///< optional wall-clock cap, 0 = off
    int max_iters = 0;            ///< simplex iteration cap, 0 = auto
    /// Optional rounding heuristic: maps an LP-relaxation solution to
    /// suggested values for the integer variables. Used to seed incumbents.
    std::function<std::vector<double>(const std::vector<double>&)> round_heuristic;
};

// ---------------------------------------------------------------------------
// Bounded-variable primal simplex with a dense basis inverse.
//
// Columns 0..n-1 are the structural variables, n..n+m-1 the row slacks
// (a_i x + s_i = b_i with slack bounds encoding the relation). Phase 1
// minimizes the summed bound violation of the basic variables with a
// composite gradient; phase 2 runs the standard bounded ratio test.
// Warm starts keep the live basis across bound changes, which is what the
// branch-and-bound dive relies on.
// ---------------------------------------------------------------------------
class LpCore {
public:
    enum class St { optimal, infeasible, unbounded, iter_limit };
    enum Stat : std::uint8_t { at_lower = 0, at_upper = 1, nb_free = 2, basic = 3 };

    struct Basis {
        std::vector<int> basic;
        std::vector<std::uint8_t> stat;
    };

    explicit LpCore(const Model& model, int max_iters = 0) {
        n_ = model.num_vars();
        m_ = model.num_constraints();
        ncols_ = n_ + m_;
        max_iters_ = max_iters > 0 ? max_iters : 20000 + 40 * (m_ + n_);

        lb_.assign(ncols_, 0.0);
        ub_.assign(ncols_, 0.0);
        cost_.assign(ncols_, 0.0);
        sign_ = model.sense() == Sense::maximize ? -1.0 : 1.0;
        for (int j = 0; j < n_; ++j) {
            lb_[j] = model.variables()[j].lb;
            ub_[j] = model.variables()[j].ub;
            cost_[j] = sign_ * model.objective()[j];
        }
        b_.assign(m_, 0.0);
        // sparse structural columns
        std::vector<std::vector<Term>> cols(n_);
        for (int i = 0; i < m_; ++i) {
            const auto& con = model.constraints()[i];
            b_[i] = con.rhs;
            for (const auto& t : con.terms) cols[t.var].push_back({i, t.coeff});
            int s = n_ + i;
            switch (con.rel) {
                case Relation::le: lb_[s] = 0.0; ub_[s] = kInf; break;
                case Relation::ge: lb_[s] = -kInf; ub_[s] = 0.0; break;
                case Relation::eq: lb_[s] = 0.0; ub_[s] = 0.0; break;
            }
        }
        col_ptr_.assign(n_ + 1, 0);
        for (int j = 0; j < n_; ++j) {
            // merge duplicate row entries so ratio tests see one coefficient
            std::sort(cols[j].begin(), cols[j].end(),
                      [](const Term& a, const Term& b) { return a.var < b.var; });
            std::vector<Term> merged;
            for (const auto& t : cols[j]) {
                if (!merged.empty() && merged.back().var == t.var)
                    merged.back().coeff += t.coeff;
                else
                    merged.push_back(t);
            }
            cols[j] = std::move(merged);
            col_ptr_[j + 1] = col_ptr_[j] + static_cast<int>(cols[j].size());
        }
        col_rows_.resize(col_ptr_[n_]);
        col_vals_.resize(col_ptr_[n_]);
        for (int j = 0; j < n_; ++j)
            for (int k = 0; k < static_cast<int>(cols[j].size()); ++k) {
                col_rows_[col_ptr_[j] + k] = cols[j][k].var;
                col_vals_[col_ptr_[j] + k] = cols[j][k].coeff;
            }
        reset_to_slack_basis();
    }

    int num_structural() const { return n_; }

    void set_structural_bounds(int j, double lo, double hi) {
        lb_[j] = lo;
        ub_[j] = hi;
        if (stat_[j] != basic) {
            // re-seat a nonbasic variable on a valid bound
            if (stat_[j] == at_lower && !std::isfinite(lo)) stat_[j] = std::isfinite(hi) ? at_upper : nb_free;
            if (stat_[j] == at_upper && !std::isfinite(hi)) stat_[j] = std::isfinite(lo) ? at_lower : nb_free;
            if (stat_[j] == nb_free && std::isfinite(lo)) stat_[j] = at_lower;
        }
    }
    double structural_lb(int j) const { return lb_[j]; }
    double structural_ub(int j) const { return ub_[j]; }

    St solve_cold() {
        reset_to_slack_basis();
        return run();
    }

    /// Re-optimizes from the current basis (after bound changes).
    St resolve() {
        compute_xB();
        return run();
    }

    Basis save_basis() const { return {basic_, stat_}; }

    bool load_basis(const Basis& bas) {
        if (static_cast<int>(bas.basic.size()) != m_ ||
            static_cast<int>(bas.stat.size()) != ncols_)
            return false;
        basic_ = bas.basic;
        stat_ = bas.stat;
        for (int j = 0; j < ncols_; ++j)
            if (stat_[j] != basic) {
                if (stat_[j] == at_lower && !std::isfinite(lb_[j]))
                    stat_[j] = std::isfinite(ub_[j]) ? at_upper : nb_free;
                if (stat_[j] == at_upper && !std::isfinite(ub_[j]))
                    stat_[j] = std::isfinite(lb_[j]) ? at_lower : nb_free;
            }
        if (!refactorize()) {
            reset_to_slack_basis();
            return false;
        }
        compute_xB();
        return true;
    }

    /// Internal (minimization) objective at the current point.
    double objective_internal() const {
        double v = 0.0;
        for (int j = 0; j < ncols_; ++j) v += cost_[j] * value(j);
        return v;
    }
    /// Objective in the model's sense.
    double objective_external() const { return sign_ * objective_internal(); }

    std::vector<double> primal() const {
        std::vector<double> x(n_);
        for (int j = 0; j < n_; ++j) x[j] = value(j);
        return x;
    }

    double max_bound_violation() const {
        double v = 0.0;
        for (int i = 0; i < m_; ++i) {
            int j = basic_[i];
            if (xB_[i] < lb_[j]) v = std::max(v, lb_[j] - xB_[i]);
            if (xB_[i] > ub_[j]) v = std::max(v, xB_[i] - ub_[j]);
        }
        return v;
    }

private:
    int n_ = 0, m_ = 0, ncols_ = 0;
    int max_iters_ = 0;
    double sign_ = 1.0;  // +1 min, -1 max (costs already flipped)
    std::vector<double> lb_, ub_, cost_, b_;
    std::vector<int> col_ptr_, col_rows_;
    std::vector<double> col_vals_;

    std::vector<std::uint8_t> stat_;
    std::vector<int> basic_;   // row -> column
    std::vector<double> Binv_; // m x m, row-major
    std::vector<double> xB_;   // basic values by row

    static constexpr double tol_feas_ = 1e-7;
    static constexpr double tol_piv_ = 1e-9;

    double value(int j) const {
        switch (stat_[j]) {
            case at_lower: return lb_[j];
            case at_upper: return ub_[j];
            case nb_free: return 0.0;
            default: break;
        }
        for (int i = 0; i < m_; ++i)
            if (basic_[i] == j) return xB_[i];
        return 0.0;
    }

    void reset_to_slack_basis() {
        stat_.assign(ncols_, at_lower);
        for (int j = 0; j < n_; ++j) {
            if (std::isfinite(lb_[j]))
                stat_[j] = at_lower;
            else if (std::isfinite(ub_[j]))
                stat_[j] = at_upper;
            else
                stat_[j] = nb_free;
        }
        basic_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            basic_[i] = n_ + i;
            stat_[n_ + i] = basic;
        }
        Binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) Binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
        compute_xB();
    }

    // w = Binv * A_j (A_j sparse structural or unit slack)
    void ftran(int j, std::vector<double>& w) const {
        std::fill(w.begin(), w.end(), 0.0);
        if (j >= n_) {
            int r = j - n_;
            for (int i = 0; i < m_; ++i) w[i] = Binv_[static_cast<std::size_t>(i) * m_ + r];
            return;
        }
        for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            int r = col_rows_[k];
            double a = col_vals_[k];
            const double* colp = Binv_.data() + r;
            for (int i = 0; i < m_; ++i) w[i] += a * colp[static_cast<std::size_t>(i) * m_];
        }
    }

    double col_dot(int j, const std::vector<double>& y) const {
        if (j >= n_) return y[j - n_];
        double v = 0.0;
        for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k)
            v += col_vals_[k] * y[col_rows_[k]];
        return v;
    }

    void compute_xB() {
        std::vector<double> r = b_;
        for (int j = 0; j < ncols_; ++j) {
            if (stat_[j] == basic) continue;
            double v = (stat_[j] == at_lower) ? lb_[j] : (stat_[j] == at_upper) ? ub_[j] : 0.0;
            if (v == 0.0) continue;
            if (j >= n_) {
                r[j - n_] -= v;
            } else {
                for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k)
                    r[col_rows_[k]] -= v * col_vals_[k];
            }
        }
        xB_.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            const double* row = Binv_.data() + static_cast<std::size_t>(i) * m_;
            double v = 0.0;
            for (int k = 0; k < m_; ++k) v += row[k] * r[k];
            xB_[i] = v;
        }
    }

    bool refactorize() {
        // Gauss-Jordan inversion of the basis matrix with partial pivoting.
        std::vector<double> B(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            int j = basic_[i];
            if (j >= n_) {
                B[static_cast<std::size_t>(j - n_) * m_ + i] = 1.0;
            } else {
                for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k)
                    B[static_cast<std::size_t>(col_rows_[k]) * m_ + i] = col_vals_[k];
            }
        }
        std::vector<double> inv(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) inv[static_cast<std::size_t>(i) * m_ + i] = 1.0;
        for (int col = 0; col < m_; ++col) {
            int piv = -1;
            double best = 1e-11;
            for (int r = col; r < m_; ++r) {
                double v = std::abs(B[static_cast<std::size_t>(r) * m_ + col]);
                if (v > best) { best = v; piv = r; }
            }
            if (piv < 0) return false;  // singular
            if (piv != col) {
                for (int k = 0; k < m_; ++k) {
                    std::swap(B[static_cast<std::size_t>(piv) * m_ + k],
                              B[static_cast<std::size_t>(col) * m_ + k]);
                    std::swap(inv[static_cast<std::size_t>(piv) * m_ + k],
                              inv[static_cast<std::size_t>(col) * m_ + k]);
                }
            }
            double d = B[static_cast<std::size_t>(col) * m_ + col];
            double invd = 1.0 / d;
            for (int k = 0; k < m_; ++k) {
                B[static_cast<std::size_t>(col) * m_ + k] *= invd;
                inv[static_cast<std::size_t>(col) * m_ + k] *= invd;
            }
            for (int r = 0; r < m_; ++r) {
                if (r == col) continue;
                double f = B[static_cast<std::size_t>(r) * m_ + col];
                if (f == 0.0) continue;
                for (int k = 0; k < m_; ++k) {
                    B[static_cast<std::size_t>(r) * m_ + k] -=
                        f * B[static_cast<std::size_t>(col) * m_ + k];
                    inv[static_cast<std::size_t>(r) * m_ + k] -=
                        f * inv[static_cast<std::size_t>(col) * m_ + k];
                }
            }
        }
        Binv_ = std::move(inv);
        return true;
    }

    void pivot_update(int enter, int leave_row, const std::vector<double>& w) {
        double piv = w[leave_row];
        double* prow = Binv_.data() + static_cast<std::size_t>(leave_row) * m_;
        double invp = 1.0 / piv;
        for (int k = 0; k < m_; ++k) prow[k] *= invp;
        for (int i = 0; i < m_; ++i) {
            if (i == leave_row) continue;
            double f = w[i];
            if (f == 0.0) continue;
            double* row = Binv_.data() + static_cast<std::size_t>(i) * m_;
            for (int k = 0; k < m_; ++k) row[k] -= f * prow[k];
        }
        basic_[leave_row] = enter;
        stat_[enter] = basic;
    }

    struct Ratio {
        double t = kInf;
        int row = -1;        // blocking basic row, -1 = entering bound flip
        bool leave_at_ub = false;
        double pivot_mag = 0.0;
    };

    // Blocking step length when the entering variable moves by dir * t.
    Ratio ratio_test(const std::vector<double>& w, double dir, int enter) const {
        Ratio best;
        for (int i = 0; i < m_; ++i) {
            double rate = -dir * w[i];  // d xB_i / dt
            if (std::abs(rate) <= tol_piv_) continue;
            int j = basic_[i];
            double x = xB_[i];
            double t, at_ub;
            if (rate > 0.0) {
                if (x < lb_[j] - tol_feas_) {
                    t = (lb_[j] - x) / rate;  // infeasible below, stop at lb
                    at_ub = false;
                } else if (std::isfinite(ub_[j]) && x <= ub_[j] + tol_feas_) {
                    t = (ub_[j] - x) / rate;
                    at_ub = true;
                } else {
                    continue;
                }
            } else {
                if (x > ub_[j] + tol_feas_) {
                    t = (ub_[j] - x) / rate;  // infeasible above, stop at ub
                    at_ub = true;
                } else if (std::isfinite(lb_[j]) && x >= lb_[j] - tol_feas_) {
                    t = (lb_[j] - x) / rate;
                    at_ub = false;
                } else {
                    continue;
                }
            }
            if (t < 0.0) t = 0.0;
            double mag = std::abs(w[i]);
            if (t < best.t - 1e-12 ||
                (t < best.t + 1e-12 && mag > best.pivot_mag)) {
                best.t = t;
                best.row = i;
                best.leave_at_ub = at_ub != 0.0;
                best.pivot_mag = mag;
            }
        }
        // entering variable's own opposite bound (bound flip)
        if (std::isfinite(lb_[enter]) && std::isfinite(ub_[enter])) {
            double range = ub_[enter] - lb_[enter];
            if (range < best.t) {
                best.t = range;
                best.row = -1;
            }
        }
        return best;
    }

    void apply_step(int enter, double dir, double t, const Ratio& r,
                    const std::vector<double>& w) {
        for (int i = 0; i < m_; ++i) xB_[i] -= dir * t * w[i];
        if (r.row < 0) {
            // bound flip
            stat_[enter] = (stat_[enter] == at_lower) ? at_upper : at_lower;
            return;
        }
        int leave = basic_[r.row];
        double enter_val;
        switch (stat_[enter]) {
            case at_lower: enter_val = lb_[enter] + dir * t; break;
            case at_upper: enter_val = ub_[enter] + dir * t; break;
            default: enter_val = dir * t; break;
        }
        stat_[leave] = r.leave_at_ub ? at_upper : at_lower;
        if (!std::isfinite(r.leave_at_ub ? ub_[leave] : lb_[leave]))
            stat_[leave] = nb_free;
        pivot_update(enter, r.row, w);
        xB_[r.row] = enter_val;
    }

    St run() {
        int iters = 0;
        int degenerate_streak = 0;
        bool bland = false;
        std::vector<double> w(m_), y(m_);
        int refactor_countdown = 4000;

        while (true) {
            if (++iters > max_iters_) return St::iter_limit;
            if (--refactor_countdown <= 0) {
                refactor_countdown = 4000;
                if (!refactorize()) { reset_to_slack_basis(); }
                compute_xB();
            }

            // phase selection: feasible basis -> phase 2
            bool infeasible_basis = false;
            std::fill(y.begin(), y.end(), 0.0);
            for (int i = 0; i < m_; ++i) {
                int j = basic_[i];
                double sig = 0.0;
                if (xB_[i] < lb_[j] - tol_feas_) sig = -1.0;
                else if (xB_[i] > ub_[j] + tol_feas_) sig = 1.0;
                if (sig != 0.0) infeasible_basis = true;
                y[i] = sig;
            }

            std::vector<double> yt(m_, 0.0);
            if (infeasible_basis) {
                // yt = Binv^T * sigma
                for (int i = 0; i < m_; ++i) {
                    if (y[i] == 0.0) continue;
                    const double* row = Binv_.data() + static_cast<std::size_t>(i) * m_;
                    double s = y[i];
                    for (int k = 0; k < m_; ++k) yt[k] += s * row[k];
                }
            } else {
                // yt = Binv^T * c_B
                for (int i = 0; i < m_; ++i) {
                    double cb = cost_[basic_[i]];
                    if (cb == 0.0) continue;
                    const double* row = Binv_.data() + static_cast<std::size_t>(i) * m_;
                    for (int k = 0; k < m_; ++k) yt[k] += cb * row[k];
                }
            }

            // pricing
            int enter = -1;
            double dir = 1.0, best_score = 0.0;
            double dtol = infeasible_basis ? 1e-9 : 1e-9 * std::max(1.0, max_cost_);
            for (int j = 0; j < ncols_; ++j) {
                if (stat_[j] == basic) continue;
                if (ub_[j] - lb_[j] <= tol_piv_) continue;  // fixed, never enters
                double d;
                if (infeasible_basis) {
                    d = -col_dot(j, yt);  // d f / d x_j
                } else {
                    d = cost_[j] - col_dot(j, yt);
                }
                double score = 0.0;
                double cand_dir = 0.0;
                if (stat_[j] == at_lower && d < -dtol) { score = -d; cand_dir = 1.0; }
                else if (stat_[j] == at_upper && d > dtol) { score = d; cand_dir = -1.0; }
                else if (stat_[j] == nb_free && std::abs(d) > dtol) {
                    score = std::abs(d);
                    cand_dir = d < 0 ? 1.0 : -1.0;
                }
                if (cand_dir == 0.0) continue;
                if (bland) { enter = j; dir = cand_dir; break; }
                if (score > best_score) { best_score = score; enter = j; dir = cand_dir; }
            }

            if (enter < 0) {
                if (infeasible_basis) {
                    // sigma-gradient optimum with positive infeasibility
                    return St::infeasible;
                }
                return St::optimal;
            }

            ftran(enter, w);
            Ratio r = ratio_test(w, dir, enter);
            if (!std::isfinite(r.t)) {
                if (infeasible_basis) {
                    // cannot happen for a descent direction of the
                    // infeasibility; treat as numerical failure
                    if (!refactorize()) reset_to_slack_basis();
                    compute_xB();
                    bland = true;
                    continue;
                }
                return St::unbounded;
            }
            if (r.t <= 1e-12) {
                if (++degenerate_streak > 200) bland = true;
            } else {
                degenerate_streak = 0;
                bland = false;
            }
            apply_step(enter, dir, r.t, r, w);
        }
    }

public:
    // set by the wrapper so pricing tolerances track objective magnitude
    double max_cost_ = 1.0;
};

// ---------------------------------------------------------------------------
// LP / MILP entry points
// ---------------------------------------------------------------------------

namespace detail {

inline void init_core(LpCore& core, const Model& model) {
    double cmax = 0.0;
    for (double c : model.objective()) cmax = std::max(cmax, std::abs(c));
    core.max_cost_ = std::max(1.0, cmax);
}

inline Solution finish(const LpCore& core, const Model& model, SolveStatus st) {
    Solution sol;
    sol.status = st;
    if (st == SolveStatus::optimal || st == SolveStatus::feasible_budget_hit) {
        sol.objective = core.objective_external();
        sol.x = core.primal();
        (void)model;
    }
    return sol;
}

}  // namespace detail

/// Solves the LP relaxation (all integrality flags ignored).
inline Solution solve_lp(const Model& model) {
    LpCore core(model);
    detail::init_core(core, model);
    LpCore::St st = core.solve_cold();
    if (st == LpCore::St::iter_limit) st = core.solve_cold();  // one retry
    switch (st) {
        case LpCore::St::optimal:
            return detail::finish(core, model, SolveStatus::optimal);
        case LpCore::St::infeasible:
            return detail::finish(core, model, SolveStatus::infeasible);
        case LpCore::St::unbounded:
            return detail::finish(core, model, SolveStatus::unbounded);
        default:
            return detail::finish(core, model, SolveStatus::infeasible);
    }
}

/// Best-first branch-and-bound with depth-first plunging on the embedded
/// bounded simplex. Deterministic under the node budget; the optional
/// wall-clock cap trades determinism for latency and is off by default.
class BranchAndBound {
public:
    BranchAndBound(const Model& model, SolverOptions opts = {})
        : model_(model), opts_(opts) {}

    /// Warm-start basis from a previous, structurally identical solve.
    void set_start_basis(const LpCore::Basis& b) { start_basis_ = b; has_start_ = true; }
    const LpCore::Basis& final_root_basis() const { return root_basis_; }

    Solution solve() {
        auto t_start = std::chrono::steady_clock::now();
        LpCore core(model_);
        detail::init_core(core, model_);
        int nvars = model_.num_vars();
        int_vars_.clear();
        for (int j = 0; j < nvars; ++j)
            if (model_.variables()[j].integral) int_vars_.push_back(j);

        LpCore::St st;
        if (has_start_ && core.load_basis(start_basis_)) {
            st = core.resolve();
            if (st == LpCore::St::iter_limit) st = core.solve_cold();
        } else {
            st = core.solve_cold();
            if (st == LpCore::St::iter_limit) st = core.solve_cold();
        }
        root_basis_ = core.save_basis();

        if (st == LpCore::St::infeasible) return {SolveStatus::infeasible, 0.0, {}, 0.0};
        if (st == LpCore::St::unbounded) return {SolveStatus::unbounded, 0.0, {}, 0.0};
        if (st != LpCore::St::optimal) return {SolveStatus::infeasible, 0.0, {}, 0.0};

        double root_bound = core.objective_external();
        std::vector<double> root_x = core.primal();

        if (int_vars_.empty() || integral(root_x)) {
            Solution s;
            s.status = SolveStatus::optimal;
            s.objective = root_bound;
            s.x = std::move(root_x);
            snap(s.x);
            return s;
        }

        // incumbent
        bool have_inc = false;
        double inc_obj = 0.0;
        std::vector<double> inc_x;

        auto try_heuristic = [&](const std::vector<double>& relax_x) {
            if (!opts_.round_heuristic) return;
            std::vector<double> fix = opts_.round_heuristic(relax_x);
            if (fix.size() != static_cast<std::size_t>(nvars)) return;
            for (int j : int_vars_) {
                double v = std::round(fix[j]);
                v = std::clamp(v, model_.variables()[j].lb, model_.variables()[j].ub);
                core.set_structural_bounds(j, v, v);
            }
            LpCore::St hst = core.resolve();
            if (hst == LpCore::St::optimal) {
                double obj = core.objective_external();
                if (!have_inc || better(obj, inc_obj)) {
                    have_inc = true;
                    inc_obj = obj;
                    inc_x = core.primal();
                }
            }
            for (int j : int_vars_)
                core.set_structural_bounds(j, model_.variables()[j].lb,
                                           model_.variables()[j].ub);
            // jumping back via the factorized root basis is much cheaper
            // than pivoting the fixed variables back out one by one
            core.load_basis(root_basis_);
        };
        try_heuristic(root_x);

        struct Node {
            double bound;  // parent LP bound, external sense
            std::vector<std::pair<int, std::pair<double, double>>> changes;
            std::uint64_t seq;
        };
        auto worse_node = [this](const Node& a, const Node& b) {
            if (a.bound != b.bound) return better(b.bound, a.bound);
            return a.seq > b.seq;  // FIFO tie break for determinism
        };
        std::priority_queue<Node, std::vector<Node>, decltype(worse_node)> open(worse_node);
        std::uint64_t seq = 0;
        open.push({root_bound, {}, seq++});

        int nodes = 0;
        double best_open_bound = root_bound;
        bool budget_hit = false;

        std::vector<std::pair<int, std::pair<double, double>>> current;  // applied changes

        auto apply_node = [&](const Node& node) {
            // A child extending the current path keeps the live basis (a
            // dive costs a handful of pivots). Any other jump rewinds the
            // bounds and reloads the factorized root basis, which is far
            // cheaper than pivoting the old path's bound changes back out.
            bool extends = node.changes.size() >= current.size() &&
                           std::equal(current.begin(), current.end(),
                                      node.changes.begin(),
                                      [](const auto& a, const auto& b) {
                                          return a.first == b.first &&
                                                 a.second == b.second;
                                      });
            if (extends) {
                for (std::size_t k = current.size(); k < node.changes.size(); ++k)
                    core.set_structural_bounds(node.changes[k].first,
                                               node.changes[k].second.first,
                                               node.changes[k].second.second);
                current = node.changes;
                return;
            }
            for (auto& ch : current)
                core.set_structural_bounds(ch.first, model_.variables()[ch.first].lb,
                                           model_.variables()[ch.first].ub);
            current = node.changes;
            for (auto& ch : current)
                core.set_structural_bounds(ch.first, ch.second.first, ch.second.second);
            core.load_basis(root_basis_);
        };

        while (!open.empty()) {
            if (nodes >= opts_.node_limit) { budget_hit = true; break; }
            if (opts_.time_limit_s > 0.0) {
                double el = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t_start)
                                .count();
                if (el > opts_.time_limit_s) { budget_hit = true; break; }
            }
            Node node = open.top();
            open.pop();
            best_open_bound = node.bound;
            if (have_inc && !better(node.bound, inc_obj + sense_eps())) continue;

            apply_node(node);
            ++nodes;
            LpCore::St nst = core.resolve();
            if (nst == LpCore::St::iter_limit) nst = core.solve_cold();
            if (nst != LpCore::St::optimal) continue;  // infeasible child is pruned

            double bound = core.objective_external();
            if (have_inc && !better(bound, inc_obj + sense_eps())) continue;
            std::vector<double> x = core.primal();

            int branch_var = pick_branch(x);
            if (branch_var < 0) {
                // integral solution
                if (!have_inc || better(bound, inc_obj)) {
                    have_inc = true;
                    inc_obj = bound;
                    inc_x = std::move(x);
                }
                continue;
            }

            double xv = x[branch_var];
            double fl = std::floor(xv), ce = std::ceil(xv);
            Node down = node, up = node;
            down.bound = bound;
            up.bound = bound;
            down.seq = seq++;
            up.seq = seq++;
            down.changes.push_back({branch_var, {model_.variables()[branch_var].lb, fl}});
            up.changes.push_back({branch_var, {ce, model_.variables()[branch_var].ub}});
            // clip against earlier changes of the same variable on this path
            tighten_path(down.changes);
            tighten_path(up.changes);
            open.push(std::move(down));
            open.push(std::move(up));
        }

        Solution sol;
        if (have_inc) {
            snap(inc_x);
            sol.objective = inc_obj;
            sol.x = std::move(inc_x);
            if (budget_hit && !open.empty()) {
                sol.status = SolveStatus::feasible_budget_hit;
                double denom = std::max(1.0, std::abs(inc_obj));
                sol.gap = std::abs(best_open_bound - inc_obj) / denom;
            } else {
                sol.status = SolveStatus::optimal;
                sol.gap = 0.0;
            }
        } else if (budget_hit) {
            sol.status = SolveStatus::feasible_budget_hit;  // budget hit, no incumbent
            sol.gap = kInf;
        } else {
            sol.status = SolveStatus::infeasible;
        }
        return sol;
    }

private:
    const Model& model_;
    SolverOptions opts_;
    std::vector<int> int_vars_;
    LpCore::Basis start_basis_, root_basis_;
    bool has_start_ = false;

    bool better(double a, double b) const {
        return model_.sense() == Sense::maximize ? a > b : a < b;
    }
    double sense_eps() const {
        double e = opts_.tol_gap;
        return model_.sense() == Sense::maximize ? e : -e;
    }
    bool integral(const std::vector<double>& x) const {
        for (int j : int_vars_)
            if (std::abs(x[j] - std::round(x[j])) > opts_.tol_int) return false;
        return true;
    }
    int pick_branch(const std::vector<double>& x) const {
        int best = -1;
        double best_frac = opts_.tol_int;
        for (int j : int_vars_) {
            double f = std::abs(x[j] - std::round(x[j]));
            if (f > best_frac + 1e-12) { best_frac = f; best = j; }
        }
        return best;
    }
    void snap(std::vector<double>& x) const {
        for (int j : int_vars_) x[j] = std::round(x[j]);
    }
    static void tighten_path(std::vector<std::pair<int, std::pair<double, double>>>& changes) {
        auto& last = changes.back();
        for (std::size_t k = 0; k + 1 < changes.size(); ++k) {
            if (changes[k].first == last.first) {
                last.second.first = std::max(last.second.first, changes[k].second.first);
                last.second.second = std::min(last.second.second, changes[k].second.second);
            }
        }
    }
};

inline Solution solve_milp(const Model& model, SolverOptions opts = {}) {
    return BranchAndBound(model, opts).solve();
}

/// Maximum violation of the model's rows and bounds at a point; used by
/// tests and by callers that double-check returned solutions.
inline double max_violation(const Model& model, const std::vector<double>& x) {
    double v = 0.0;
    for (int j = 0; j < model.num_vars(); ++j) {
        v = std::max(v, model.variables()[j].lb - x[j]);
        v = std::max(v, x[j] - model.variables()[j].ub);
    }
    for (const auto& con : model.constraints()) {
        double lhs = 0.0;
        for (const auto& t : con.terms) lhs += t.coeff * x[t.var];
        switch (con.rel) {
            case Relation::le: v = std::max(v, lhs - con.rhs); break;
            case Relation::ge: v = std::max(v, con.rhs - lhs); break;
            case Relation::eq: v = std::max(v, std::abs(lhs - con.rhs)); break;
        }
    }
    return v;
}

}  // namespace bessbid::milp

#endif  // BESSBID_MILP_HPP
