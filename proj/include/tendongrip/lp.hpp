#pragma once

// Dense two-phase simplex for small linear programs:
//   maximise c^T x  subject to  A x = b,  x >= 0.
// Bland's rule throughout, so it cannot cycle.  Meant for a handful of rows
// and a few hundred columns.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tendongrip::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  double value = 0.0;
  Eigen::VectorXd x;
};

namespace detail {

class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& A, const Eigen::VectorXd& b)
      : m_(A.rows()), n_(A.cols()), t_(Eigen::MatrixXd::Zero(A.rows() + 1, A.cols() + A.rows() + 1)),
        basis_(A.rows()), active_(A.rows(), true) {
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sign = b(i) < 0.0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign * A.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, rhs()) = sign * b(i);
      basis_[i] = n_ + i;
    }
  }

  Eigen::Index rhs() const { return n_ + m_; }

  // Returns false when the objective is unbounded.
  bool optimise(Eigen::Index allowed_cols, double tol) {
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j) {
        if (t_(m_, j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (!active_[i] || t_(i, enter) <= tol) continue;
        const double ratio = t_(i, rhs()) / t_(i, enter);
        if (ratio < best - 1e-15 || (ratio <= best + 1e-15 && leave >= 0 && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double factor = t_(i, col);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(row);
    }
    basis_[row] = col;
  }

  void set_objective(const Eigen::VectorXd& c) {
    t_.row(m_).setZero();
    t_.row(m_).head(c.size()) = -c.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!active_[i]) continue;
      const Eigen::Index j = basis_[i];
      const double cj = j < c.size() ? c(j) : 0.0;
      if (cj != 0.0) t_.row(m_) += cj * t_.row(i);
    }
  }

  // Phase 1: drive the artificial variables to zero.
  bool find_feasible(double tol) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_ + m_);
    c.tail(m_).setConstant(-1.0);
    set_objective(c);
    optimise(n_ + m_, tol);
    double scale = 1.0;
    for (Eigen::Index i = 0; i < m_; ++i) scale = std::max(scale, std::abs(t_(i, rhs())));
    if (t_(m_, rhs()) < -1e-9 * scale) return false;
    // Pivot remaining artificials out of the basis, dropping redundant rows.
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > 1e-9) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        pivot(i, col);
      } else {
        active_[i] = false;
      }
    }
    return true;
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i)
      if (active_[i] && basis_[i] < n_) x(basis_[i]) = t_(i, rhs());
    return x;
  }

  double value() const { return t_(m_, rhs()); }
  Eigen::Index columns() const { return n_; }

 private:
  Eigen::Index m_, n_;
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
  std::vector<bool> active_;
};

}  // namespace detail

inline Result maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                       double tol = 1e-11) {
  if (A.rows() != b.size() || A.cols() != c.size()) throw std::invalid_argument("LP dimension mismatch");
  detail::Tableau tab(A, b);
  Result out;
  if (!tab.find_feasible(tol)) return out;
  tab.set_objective(c);
  if (!tab.optimise(tab.columns(), tol)) {
    out.status = Status::Unbounded;
    return out;
  }
  out.status = Status::Optimal;
  out.x = tab.solution();
  out.value = c.dot(out.x);
  return out;
}

}  // namespace tendongrip::lp
