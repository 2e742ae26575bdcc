#include "rpx/lp.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rpx {

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::iteration_limit: return "iteration_limit";
    case SolveStatus::node_limit: return "node_limit";
  }
  throw std::logic_error("unreachable");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kRatioTieTol = 1e-9;
constexpr double kPhase1Tol = 1e-7;
constexpr std::size_t kRefactorPeriod = 100;

enum class VarStatus { basic, at_lower, at_upper };

// Columns: [structural 0..n) | slack n..n+m) | artificial n+m..).
class SimplexTableau {
 public:
  SimplexTableau(const StandardFormLP& lp)
      : lp_(lp), n_(lp.num_vars()), m_(lp.num_rows()) {
    lo_.assign(n_ + m_, 0.0);
    hi_.assign(n_ + m_, kInf);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lp.lower[j];
      hi_[j] = lp.upper[j];
      require(lo_[j] <= hi_[j], "simplex: lower bound exceeds upper bound");
      require(std::isfinite(lo_[j]) || std::isfinite(hi_[j]),
              "simplex: variable free on both sides");
    }
    status_.assign(n_ + m_, VarStatus::at_lower);
    for (std::size_t j = 0; j < n_; ++j)
      status_[j] = std::isfinite(lo_[j]) ? VarStatus::at_lower : VarStatus::at_upper;

    basic_.resize(m_);
    binv_ = DenseMatrix(m_, m_);
    for (std::size_t i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      status_[n_ + i] = VarStatus::basic;
      binv_.at(i, i) = 1.0;
    }
    recompute_basic_values();

    // Rows whose slack starts negative get an artificial (column -e_i);
    // the basis inverse picks up the sign flip on that row.
    for (std::size_t i = 0; i < m_; ++i) {
      if (xb_[i] >= 0.0) continue;
      const std::size_t col = lo_.size();
      artificial_row_.push_back(i);
      lo_.push_back(0.0);
      hi_.push_back(kInf);
      status_[basic_[i]] = VarStatus::at_lower;  // slack leaves the basis
      status_.push_back(VarStatus::basic);
      basic_[i] = col;
      binv_.at(i, i) = -1.0;
      xb_[i] = -xb_[i];
    }
  }

  std::size_t num_artificials() const { return artificial_row_.size(); }

  // Phase 1 maximizes -(sum of artificials); phase 2 the true objective.
  double column_cost(std::size_t j, bool phase1) const {
    if (phase1) return j >= n_ + m_ ? -1.0 : 0.0;
    return j < n_ ? lp_.objective[j] : 0.0;
  }

  // Column j of the full constraint matrix, entry for a given row.
  double column_entry(std::size_t row, std::size_t j) const {
    if (j < n_) return lp_.constraint.at(row, j);
    if (j < n_ + m_) return j - n_ == row ? 1.0 : 0.0;
    return artificial_row_[j - n_ - m_] == row ? -1.0 : 0.0;
  }

  double nonbasic_value(std::size_t j) const {
    return status_[j] == VarStatus::at_lower ? lo_[j] : hi_[j];
  }

  void recompute_basic_values() {
    // x_B = B^{-1} (b - A_N x_N)
    Vec residual = lp_.rhs;
    for (std::size_t j = 0; j < lo_.size(); ++j) {
      if (status_[j] == VarStatus::basic) continue;
      const double v = nonbasic_value(j);
      if (v == 0.0) continue;
      for (std::size_t i = 0; i < m_; ++i) residual[i] -= column_entry(i, j) * v;
    }
    xb_.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < m_; ++r) s += binv_.at(i, r) * residual[r];
      xb_[i] = s;
    }
  }

  void refactorize() {
    // Rebuild B^{-1} from the basis columns by Gauss-Jordan with partial
    // pivoting, then refresh x_B.
    DenseMatrix b(m_, m_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t c = 0; c < m_; ++c) b.at(i, c) = column_entry(i, basic_[c]);
    DenseMatrix inv(m_, m_);
    for (std::size_t i = 0; i < m_; ++i) inv.at(i, i) = 1.0;
    for (std::size_t col = 0; col < m_; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < m_; ++r)
        if (std::fabs(b.at(r, col)) > std::fabs(b.at(piv, col))) piv = r;
      if (std::fabs(b.at(piv, col)) < 1e-12)
        throw std::runtime_error("simplex: singular basis during refactorization");
      if (piv != col) {
        for (std::size_t c = 0; c < m_; ++c) {
          std::swap(b.at(piv, c), b.at(col, c));
          std::swap(inv.at(piv, c), inv.at(col, c));
        }
      }
      const double d = b.at(col, col);
      for (std::size_t c = 0; c < m_; ++c) {
        b.at(col, c) /= d;
        inv.at(col, c) /= d;
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (r == col) continue;
        const double f = b.at(r, col);
        if (f == 0.0) continue;
        for (std::size_t c = 0; c < m_; ++c) {
          b.at(r, c) -= f * b.at(col, c);
          inv.at(r, c) -= f * inv.at(col, c);
        }
      }
    }
    binv_ = std::move(inv);
    recompute_basic_values();
  }

  // Returns true when an optimal basis was reached, false on iteration or
  // unboundedness events (reported through *status).
  bool iterate(bool phase1, std::size_t max_iters, std::size_t* iters,
               SolveStatus* status) {
    const std::size_t total = lo_.size();
    Vec y(m_), alpha(m_);
    while (*iters < max_iters) {
      // y^T = c_B^T B^{-1}
      for (std::size_t j = 0; j < m_; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m_; ++i)
          s += column_cost(basic_[i], phase1) * binv_.at(i, j);
        y[j] = s;
      }

      // Bland: first eligible nonbasic index enters.
      std::size_t entering = total;
      double direction = 0.0;
      for (std::size_t j = 0; j < total; ++j) {
        if (status_[j] == VarStatus::basic) continue;
        if (hi_[j] - lo_[j] < 1e-15) continue;  // fixed
        double d = column_cost(j, phase1);
        for (std::size_t i = 0; i < m_; ++i) {
          const double a = column_entry(i, j);
          if (a != 0.0) d -= y[i] * a;
        }
        if (status_[j] == VarStatus::at_lower && d > kReducedCostTol) {
          entering = j;
          direction = 1.0;
          break;
        }
        if (status_[j] == VarStatus::at_upper && d < -kReducedCostTol) {
          entering = j;
          direction = -1.0;
          break;
        }
      }
      if (entering == total) {
        *status = SolveStatus::optimal;
        return true;
      }

      // alpha = B^{-1} A_entering
      for (std::size_t i = 0; i < m_; ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < m_; ++r)
          s += binv_.at(i, r) * column_entry(r, entering);
        alpha[i] = s;
      }

      // Ratio test: step limited by each basic variable reaching one of its
      // bounds, and by the entering variable's own range (bound flip).
      double t_row = kInf;
      std::size_t leaving_row = m_;
      for (std::size_t i = 0; i < m_; ++i) {
        const double change = direction * alpha[i];  // x_Bi moves by -change*t
        double ratio = kInf;
        if (change > kPivotTol) {
          if (std::isfinite(lo_[basic_[i]])) ratio = (xb_[i] - lo_[basic_[i]]) / change;
        } else if (change < -kPivotTol) {
          if (std::isfinite(hi_[basic_[i]])) ratio = (hi_[basic_[i]] - xb_[i]) / -change;
        }
        if (ratio == kInf) continue;
        if (ratio < 0.0) ratio = 0.0;  // tolerate tiny infeasibility drift
        if (ratio < t_row - kRatioTieTol) {
          t_row = ratio;
          leaving_row = i;
        } else if (ratio <= t_row + kRatioTieTol &&
                   basic_[i] < basic_[leaving_row]) {
          t_row = std::min(t_row, ratio);
          leaving_row = i;  // Bland tie-break on the basic variable index
        }
      }
      const double t_range = hi_[entering] - lo_[entering];
      const double t_min = std::min(t_row, t_range);
      if (!std::isfinite(t_min)) {
        *status = SolveStatus::unbounded;
        return false;
      }

      ++*iters;
      if (t_range <= t_row) {
        // Bound flip: entering runs to its opposite bound.
        status_[entering] = status_[entering] == VarStatus::at_lower
                                ? VarStatus::at_upper
                                : VarStatus::at_lower;
        for (std::size_t i = 0; i < m_; ++i) xb_[i] -= direction * t_min * alpha[i];
        continue;
      }

      const std::size_t leaving = basic_[leaving_row];
      const double entering_start = nonbasic_value(entering);
      for (std::size_t i = 0; i < m_; ++i) xb_[i] -= direction * t_min * alpha[i];
      const double change = direction * alpha[leaving_row];
      status_[leaving] = change > 0.0 ? VarStatus::at_lower : VarStatus::at_upper;
      basic_[leaving_row] = entering;
      status_[entering] = VarStatus::basic;
      xb_[leaving_row] = entering_start + direction * t_min;

      // Gauss-Jordan update of B^{-1} on the pivot column.
      const double piv = alpha[leaving_row];
      if (std::fabs(piv) < kPivotTol)
        throw std::runtime_error("simplex: pivot element below tolerance");
      for (std::size_t c = 0; c < m_; ++c) binv_.at(leaving_row, c) /= piv;
      for (std::size_t i = 0; i < m_; ++i) {
        if (i == leaving_row) continue;
        const double f = alpha[i];
        if (f == 0.0) continue;
        for (std::size_t c = 0; c < m_; ++c)
          binv_.at(i, c) -= f * binv_.at(leaving_row, c);
      }

      if (*iters % kRefactorPeriod == 0) refactorize();
    }
    *status = SolveStatus::iteration_limit;
    return false;
  }

  double phase1_infeasibility() const {
    double s = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      if (basic_[i] >= n_ + m_) s += xb_[i];
    return s;
  }

  void fix_artificials() {
    // Artificials are pinned to zero for phase 2 (cost 0, bounds [0,0]);
    // a degenerate basic artificial stays at value 0 harmlessly.
    for (std::size_t a = 0; a < artificial_row_.size(); ++a) hi_[n_ + m_ + a] = 0.0;
  }

  Vec extract_solution() const {
    Vec x(n_);
    for (std::size_t j = 0; j < n_; ++j) x[j] = nonbasic_value(j);
    for (std::size_t i = 0; i < m_; ++i)
      if (basic_[i] < n_) x[basic_[i]] = xb_[i];
    return x;
  }

 private:
  const StandardFormLP& lp_;
  std::size_t n_, m_;
  Vec lo_, hi_;
  std::vector<VarStatus> status_;
  std::vector<std::size_t> basic_;
  DenseMatrix binv_;
  Vec xb_;
  std::vector<std::size_t> artificial_row_;
};

void validate_lp(const StandardFormLP& lp) {
  require(lp.num_rows() >= 1, "simplex: LP needs at least one row");
  require(lp.constraint.rows == lp.num_rows() && lp.constraint.cols == lp.num_vars(),
          "simplex: constraint matrix shape mismatch");
  require(lp.lower.size() == lp.num_vars() && lp.upper.size() == lp.num_vars(),
          "simplex: bound vector size mismatch");
  require(all_finite(lp.objective) && all_finite(lp.constraint.data) &&
              all_finite(lp.rhs),
          "simplex: non-finite LP data");
}

}  // namespace

SolveResult simplex_solve(const StandardFormLP& lp, std::size_t max_iters) {
  validate_lp(lp);
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult result;

  SimplexTableau tab(lp);
  std::size_t iters = 0;
  SolveStatus status = SolveStatus::iteration_limit;

  if (tab.num_artificials() > 0) {
    if (!tab.iterate(true, max_iters, &iters, &status)) {
      result.status = status == SolveStatus::unbounded
                          ? SolveStatus::infeasible  // phase 1 cannot be unbounded
                          : status;
      result.iterations = iters;
      result.solve_time = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0).count();
      return result;
    }
    if (tab.phase1_infeasibility() > kPhase1Tol) {
      result.status = SolveStatus::infeasible;
      result.iterations = iters;
      result.solve_time = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0).count();
      return result;
    }
    tab.fix_artificials();
    tab.refactorize();
  }

  tab.iterate(false, max_iters, &iters, &status);
  result.status = status;
  result.iterations = iters;
  if (status == SolveStatus::optimal) {
    result.x = tab.extract_solution();
    double obj = 0.0;
    for (std::size_t j = 0; j < lp.num_vars(); ++j) obj += lp.objective[j] * result.x[j];
    result.objective = obj;
  }
  result.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::string lp_debug_dump(const StandardFormLP& lp) {
  std::ostringstream os;
  os << "max";
  for (double c : lp.objective) os << ' ' << c;
  os << '\n';
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    os << "row";
    for (std::size_t j = 0; j < lp.num_vars(); ++j) os << ' ' << lp.constraint.at(i, j);
    os << " <= " << lp.rhs[i] << '\n';
  }
  os << "bounds";
  for (std::size_t j = 0; j < lp.num_vars(); ++j)
    os << " [" << lp.lower[j] << ',' << lp.upper[j] << ']';
  os << '\n';
  return os.str();
}

}  // namespace rpx
