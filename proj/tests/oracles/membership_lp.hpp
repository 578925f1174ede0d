#pragma once

// Point-in-convex-hull by a phase-1 simplex: is there a >= 0 with
// V a = p and sum(a) = 1?  Deliberately shares nothing with the library LP.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

class MembershipLP {
 public:
  // vertices: n points of dimension dim, stored point after point.
  MembershipLP(std::vector<double> vertices, int dim)
      : dim_(dim), n_(static_cast<int>(vertices.size()) / dim), v_(std::move(vertices)) {
    rows_ = dim_ + 1;
    cols_ = n_ + rows_ + 1;
    t_.resize(static_cast<std::size_t>(rows_ + 1) * cols_);
    basis_.resize(rows_);
  }

  int size() const { return n_; }

  bool contains(const double* p, double tol = 1e-9) {
    const int rhs = cols_ - 1;
    std::fill(t_.begin(), t_.end(), 0.0);
    for (int r = 0; r < rows_; ++r) {
      const double b = r < dim_ ? p[r] : 1.0;
      const double s = b < 0.0 ? -1.0 : 1.0;
      for (int j = 0; j < n_; ++j) at(r, j) = s * (r < dim_ ? v_[static_cast<std::size_t>(j) * dim_ + r] : 1.0);
      at(r, n_ + r) = 1.0;
      at(r, rhs) = s * b;
      basis_[r] = n_ + r;
    }
    // Cost row: minimise the sum of artificials, kept in reduced form.
    for (int j = 0; j < cols_; ++j) {
      double acc = 0.0;
      for (int r = 0; r < rows_; ++r) acc += at(r, j);
      at(rows_, j) = j >= n_ && j < n_ + rows_ ? 0.0 : -acc;
    }

    for (int iter = 0; iter < 50 * (n_ + rows_); ++iter) {
      const bool bland = iter > 4 * (n_ + rows_);
      int enter = -1;
      double best = -1e-12;
      for (int j = 0; j < n_ + rows_; ++j) {
        const double d = at(rows_, j);
        if (d < best) {
          enter = j;
          if (bland) break;
          best = d;
        }
      }
      if (enter < 0) break;
      int leave = -1;
      double ratio = 0.0;
      for (int r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a <= 1e-12) continue;
        const double q = at(r, rhs) / a;
        if (leave < 0 || q < ratio - 1e-15 || (q <= ratio + 1e-15 && basis_[r] < basis_[leave])) {
          leave = r;
          ratio = q;
        }
      }
      if (leave < 0) break;
      pivot(leave, enter);
    }
    return -at(rows_, rhs) <= tol;
  }

 private:
  double& at(int r, int c) { return t_[static_cast<std::size_t>(r) * cols_ + c]; }

  void pivot(int row, int col) {
    const double inv = 1.0 / at(row, col);
    for (int c = 0; c < cols_; ++c) at(row, c) *= inv;
    for (int r = 0; r <= rows_; ++r) {
      if (r == row) continue;
      const double f = at(r, col);
      if (f == 0.0) continue;
      for (int c = 0; c < cols_; ++c) at(r, c) -= f * at(row, c);
    }
    basis_[row] = col;
  }

  int dim_, n_, rows_ = 0, cols_ = 0;
  std::vector<double> v_;
  std::vector<double> t_;
  std::vector<int> basis_;
};

}  // namespace oracle
