#pragma once

// Convex hull of a point cloud in D dimensions (beneath-beyond with outside
// sets).  The hull is triangulated into simplicial facets.  After each build
// the facet graph and the "every point beneath every facet" condition are
// checked; if the check fails the input is joggled deterministically and
// rebuilt.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tendongrip {

template <int D>
class ConvexHull {
  static_assert(D >= 2, "hull dimension must be at least 2");

 public:
  using Point = Eigen::Matrix<double, D, 1>;

  struct Facet {
    std::array<int, D> vertices{};
    std::array<int, D> neighbors{};  // neighbors[k] shares every vertex but vertices[k]
    Point normal = Point::Zero();    // outward, unit
    double offset = 0.0;             // normal . x = offset on the facet
    bool alive = true;
    std::vector<int> outside;
  };

  explicit ConvexHull(std::vector<Point> points) : points_(std::move(points)) {
    for (const Point& p : points_)
      if (!p.allFinite()) throw std::invalid_argument("hull input must be finite");
    for (int attempt = 0; attempt < 8; ++attempt) {
      std::vector<Point> work = points_;
      if (attempt > 0) joggle(work, attempt);
      if (build(work)) {
        joggles_ = attempt;
        return;
      }
    }
    throw std::runtime_error("convex hull construction failed");
  }

  bool degenerate() const { return degenerate_; }
  int joggles() const { return joggles_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const Point& interior_point() const { return interior_; }

  double volume() const {
    if (degenerate_) return 0.0;
    double factorial = 1.0;
    for (int k = 2; k <= D; ++k) factorial *= k;
    double sum = 0.0;
    Eigen::Matrix<double, D, D> m;
    for (const Facet& f : facets_) {
      for (int k = 0; k < D; ++k) m.col(k) = used_[f.vertices[k]] - interior_;
      sum += std::abs(m.determinant());
    }
    return sum / factorial;
  }

  bool contains(const Point& p, double tol = 1e-9) const {
    if (degenerate_) return false;
    for (const Facet& f : facets_)
      if (f.normal.dot(p) - f.offset > tol) return false;
    return true;
  }

 private:
  std::vector<Point> points_;
  std::vector<Point> used_;
  std::vector<Facet> facets_;
  Point interior_ = Point::Zero();
  bool degenerate_ = false;
  int joggles_ = 0;
  double eps_ = 0.0;

  static void joggle(std::vector<Point>& pts, int attempt) {
    double scale = 0.0;
    for (const Point& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    if (scale == 0.0) return;
    const double amplitude = scale * 1e-11 * std::pow(10.0, attempt - 1);
    std::mt19937_64 rng(0x5eedULL + static_cast<unsigned>(attempt));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Point& p : pts)
      for (int k = 0; k < D; ++k) p(k) += amplitude * u(rng);
  }

  // Plane through D points, oriented away from the interior point.
  std::optional<std::pair<Point, double>> plane(const std::array<int, D>& v) const {
    Eigen::Matrix<double, D - 1, D> edges;
    for (int k = 1; k < D; ++k) edges.row(k - 1) = (used_[v[k]] - used_[v[0]]).transpose();
    Point n;
    Eigen::Matrix<double, D - 1, D - 1> minor;
    for (int j = 0; j < D; ++j) {
      int col = 0;
      for (int k = 0; k < D; ++k)
        if (k != j) minor.col(col++) = edges.col(k);
      n(j) = ((j % 2) ? -1.0 : 1.0) * minor.determinant();
    }
    const double len = n.norm();
    if (!(len > 0.0) || !std::isfinite(len)) return std::nullopt;
    n /= len;
    double off = n.dot(used_[v[0]]);
    if (n.dot(interior_) > off) {
      n = -n;
      off = -off;
    }
    if (off - n.dot(interior_) < eps_) return std::nullopt;
    return std::make_pair(n, off);
  }

  double distance(const Facet& f, int p) const { return f.normal.dot(used_[p]) - f.offset; }

  // Picks D+1 affinely independent points; empty when the cloud is flat.
  std::vector<int> initial_simplex(double scale) const {
    const int n = static_cast<int>(used_.size());
    std::vector<int> chosen;
    int first = 0;
    for (int i = 1; i < n; ++i)
      if (used_[i](0) < used_[first](0)) first = i;
    chosen.push_back(first);
    std::vector<Point> basis;
    while (static_cast<int>(chosen.size()) < D + 1) {
      int best = -1;
      double best_dist = 1e-9 * scale;
      for (int i = 0; i < n; ++i) {
        Point r = used_[i] - used_[first];
        for (const Point& b : basis) r -= r.dot(b) * b;
        const double d = r.norm();
        if (d > best_dist) {
          best_dist = d;
          best = i;
        }
      }
      if (best < 0) return {};
      Point r = used_[best] - used_[first];
      for (const Point& b : basis) r -= r.dot(b) * b;
      basis.push_back(r / r.norm());
      chosen.push_back(best);
    }
    return chosen;
  }

  void assign(const std::vector<int>& candidates, const std::vector<int>& targets) {
    for (int p : candidates) {
      for (int f : targets) {
        if (distance(facets_[f], p) > eps_) {
          facets_[f].outside.push_back(p);
          break;
        }
      }
    }
  }

  bool build(const std::vector<Point>& pts) {
    used_ = pts;
    facets_.clear();
    degenerate_ = false;
    double scale = 0.0;
    for (const Point& p : used_) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    if (used_.size() < static_cast<std::size_t>(D + 1) || scale == 0.0) {
      degenerate_ = true;
      return true;
    }
    eps_ = 1e-11 * scale * D;
    const std::vector<int> simplex = initial_simplex(scale);
    if (simplex.empty()) {
      degenerate_ = true;
      return true;
    }
    interior_ = Point::Zero();
    for (int i : simplex) interior_ += used_[i];
    interior_ /= static_cast<double>(D + 1);

    for (int skip = 0; skip <= D; ++skip) {
      Facet f;
      int k = 0;
      for (int j = 0; j <= D; ++j) {
        if (j == skip) continue;
        f.vertices[k] = simplex[j];
        // The ridge without simplex[j] is shared with the facet that skips j.
        f.neighbors[k] = j;
        ++k;
      }
      const auto pl = plane(f.vertices);
      if (!pl) return false;
      f.normal = pl->first;
      f.offset = pl->second;
      facets_.push_back(std::move(f));
    }
    {
      std::vector<int> rest;
      std::vector<bool> in_simplex(used_.size(), false);
      for (int i : simplex) in_simplex[i] = true;
      for (int i = 0; i < static_cast<int>(used_.size()); ++i)
        if (!in_simplex[i]) rest.push_back(i);
      std::vector<int> all(D + 1);
      for (int j = 0; j <= D; ++j) all[j] = j;
      assign(rest, all);
    }

    std::vector<int> visit_mark;
    int stamp = 0;
    for (std::size_t cursor = 0; cursor < facets_.size(); ++cursor) {
      if (!facets_[cursor].alive || facets_[cursor].outside.empty()) continue;
      const Facet& seed = facets_[cursor];
      int apex = seed.outside.front();
      double far = distance(seed, apex);
      for (int p : seed.outside) {
        const double d = distance(seed, p);
        if (d > far) {
          far = d;
          apex = p;
        }
      }

      ++stamp;
      visit_mark.resize(facets_.size(), 0);
      std::vector<int> visible{static_cast<int>(cursor)};
      visit_mark[cursor] = stamp;
      for (std::size_t k = 0; k < visible.size(); ++k) {
        for (int nb : facets_[visible[k]].neighbors) {
          if (visit_mark[nb] == stamp || visit_mark[nb] == -stamp) continue;
          if (distance(facets_[nb], apex) > eps_) {
            visit_mark[nb] = stamp;
            visible.push_back(nb);
          } else {
            visit_mark[nb] = -stamp;
          }
        }
      }

      std::vector<int> created;
      std::map<std::array<int, D - 1>, std::pair<int, int>> open_ridges;
      std::vector<int> orphans;
      for (int vf : visible) {
        for (int k = 0; k < D; ++k) {
          const int across = facets_[vf].neighbors[k];
          if (visit_mark[across] == stamp) continue;
          Facet g;
          int slot = 0;
          for (int j = 0; j < D; ++j)
            if (j != k) g.vertices[slot++] = facets_[vf].vertices[j];
          g.vertices[D - 1] = apex;
          g.neighbors[D - 1] = across;
          const auto pl = plane(g.vertices);
          if (!pl) return false;
          g.normal = pl->first;
          g.offset = pl->second;
          const int id = static_cast<int>(facets_.size());
          Facet& other = facets_[across];
          bool relinked = false;
          for (int& back : other.neighbors) {
            if (back == vf) {
              back = id;
              relinked = true;
              break;
            }
          }
          if (!relinked) return false;
          facets_.push_back(std::move(g));
          created.push_back(id);
          // Ridges through the apex are shared with other new facets.
          for (int j = 0; j < D - 1; ++j) {
            std::array<int, D - 1> key{};
            int s = 0;
            for (int i = 0; i < D; ++i)
              if (i != j) key[s++] = facets_[id].vertices[i];
            std::sort(key.begin(), key.end());
            auto it = open_ridges.find(key);
            if (it == open_ridges.end()) {
              open_ridges.emplace(key, std::make_pair(id, j));
            } else {
              facets_[id].neighbors[j] = it->second.first;
              facets_[it->second.first].neighbors[it->second.second] = id;
              open_ridges.erase(it);
            }
          }
        }
      }
      if (!open_ridges.empty()) return false;
      for (int vf : visible) {
        for (int p : facets_[vf].outside)
          if (p != apex) orphans.push_back(p);
        facets_[vf].outside.clear();
        facets_[vf].alive = false;
      }
      assign(orphans, created);
    }

    std::vector<Facet> live;
    std::vector<int> remap(facets_.size(), -1);
    for (std::size_t i = 0; i < facets_.size(); ++i) {
      if (!facets_[i].alive) continue;
      remap[i] = static_cast<int>(live.size());
      live.push_back(std::move(facets_[i]));
    }
    for (Facet& f : live) {
      for (int& nb : f.neighbors) {
        if (remap[nb] < 0) return false;
        nb = remap[nb];
      }
      f.outside.clear();
    }
    facets_ = std::move(live);
    return valid();
  }

  bool valid() const {
    const double tol = 1e3 * eps_;
    for (std::size_t i = 0; i < facets_.size(); ++i) {
      const Facet& f = facets_[i];
      for (int k = 0; k < D; ++k) {
        const Facet& g = facets_[f.neighbors[k]];
        int shared = 0;
        bool back = false;
        for (int j = 0; j < D; ++j) {
          if (g.neighbors[j] == static_cast<int>(i)) back = true;
          for (int v : f.vertices)
            if (v == g.vertices[j]) ++shared;
        }
        if (!back || shared != D - 1) return false;
        if (std::find(g.vertices.begin(), g.vertices.end(), f.vertices[k]) != g.vertices.end()) return false;
      }
    }
    for (std::size_t p = 0; p < used_.size(); ++p)
      for (const Facet& f : facets_)
        if (distance(f, static_cast<int>(p)) > tol) return false;
    return true;
  }
};

}  // namespace tendongrip
