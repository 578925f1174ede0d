#pragma once

// Link-length search by simulated annealing, cumulative grasp quality over a
// pool, and the through-origin fit of the pulley ratio.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tendongrip/geometry.hpp"
#include "tendongrip/parallel.hpp"
#include "tendongrip/pool.hpp"

namespace tendongrip {

/// (knuckle, proximal, distal) lengths in mm.
using LinkLengths = std::array<double, 3>;

inline constexpr std::array<Range, 3> kLinkBounds{{{25.0, 35.0}, {45.0, 75.0}, {25.0, 45.0}}};

inline GripperDesign with_lengths(GripperDesign design, const LinkLengths& x) {
  design.knuckle_len = x[0];
  design.proximal_len = x[1];
  design.distal_len = x[2];
  return design;
}

inline LinkLengths lengths_of(const GripperDesign& design) {
  return {design.knuckle_len, design.proximal_len, design.distal_len};
}

struct SAConfig {
  int iterations = 200;
  double T0 = -1.0;  // negative: 0.1 * |Q(start)|, at least 1e-6
  double cooling = 0.97;
  std::array<double, 3> sigma{-1.0, -1.0, -1.0};  // negative: 5% of the range
  std::uint64_t seed = 1;
  std::array<Range, 3> bounds = kLinkBounds;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
    if (!(cooling > 0.0 && cooling < 1.0)) throw std::invalid_argument("cooling must lie in (0, 1)");
    for (std::size_t k = 0; k < 3; ++k) {
      if (!(bounds[k].lo < bounds[k].hi)) throw std::invalid_argument("bounds must satisfy lo < hi");
      if (sigma[k] == 0.0 || std::isnan(sigma[k])) throw std::invalid_argument("sigma must be positive");
    }
  }

  double step(std::size_t k) const { return sigma[k] > 0.0 ? sigma[k] : 0.05 * (bounds[k].hi - bounds[k].lo); }

  LinkLengths start() const {
    LinkLengths x{};
    for (std::size_t k = 0; k < 3; ++k) x[k] = 0.5 * (bounds[k].lo + bounds[k].hi);
    return x;
  }
};

/// Gaussian step, clipped to the bounds.
inline LinkLengths propose(const LinkLengths& x, const SAConfig& cfg, std::mt19937_64& rng) {
  LinkLengths out{};
  for (std::size_t k = 0; k < 3; ++k) {
    std::normal_distribution<double> noise(0.0, cfg.step(k));
    out[k] = std::clamp(x[k] + noise(rng), cfg.bounds[k].lo, cfg.bounds[k].hi);
  }
  return out;
}

struct TraceRow {
  int iteration = 0;
  LinkLengths candidate{};
  double q = 0.0;
  bool accepted = false;
  bool non_finite = false;
  double temperature = 0.0;
  double best_q = 0.0;
};

struct OptimizationTrace {
  LinkLengths start{};
  double start_q = 0.0;
  std::vector<TraceRow> rows;
  LinkLengths best{};
  double best_q = 0.0;
  int best_iteration = 0;  // 0 is the start point
};

using Objective = std::function<double(const LinkLengths&)>;

inline OptimizationTrace sa_optimize(const Objective& objective, const SAConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  OptimizationTrace trace;
  trace.start = cfg.start();
  trace.start_q = objective(trace.start);
  if (!std::isfinite(trace.start_q)) throw std::invalid_argument("objective is not finite at the start point");
  trace.best = trace.start;
  trace.best_q = trace.start_q;

  LinkLengths current = trace.start;
  double current_q = trace.start_q;
  double temperature = cfg.T0 >= 0.0 ? cfg.T0 : std::max(0.1 * std::abs(trace.start_q), 1e-6);
  for (int it = 1; it <= cfg.iterations; ++it) {
    TraceRow row;
    row.iteration = it;
    row.temperature = temperature;
    row.candidate = propose(current, cfg, rng);
    row.q = objective(row.candidate);
    const double u = unit(rng);
    if (!std::isfinite(row.q)) {
      row.non_finite = true;
    } else {
      const double delta = row.q - current_q;
      row.accepted = delta >= 0.0 || (temperature > 0.0 && u < std::exp(delta / temperature));
    }
    if (row.accepted) {
      current = row.candidate;
      current_q = row.q;
      if (current_q > trace.best_q) {
        trace.best_q = current_q;
        trace.best = current;
        trace.best_iteration = it;
      }
    }
    row.best_q = trace.best_q;
    trace.rows.push_back(row);
    temperature *= cfg.cooling;
  }
  return trace;
}

/// Sum of grasp volumes over the valid grasps when every pool entry is
/// re-closed with `design`.  Entries are summed in pool order.
inline double cumulative_quality(const GripperDesign& design, const GraspPool& pool, unsigned threads = 0) {
  if (pool.records.empty()) throw std::invalid_argument("grasp pool is empty");
  const std::vector<double> v = parallel_map(
      pool.records.size(),
      [&](std::size_t i) {
        const GraspRecord& r = pool.records[i];
        const GraspRecord rec = evaluate_grasp(design, pool.objects, r.object_index, r.pose_index, r.palm_pose,
                                               pool.closure, pool.options.quality);
        return rec.valid() ? rec.quality.volume : 0.0;
      },
      threads);
  double q = 0.0;
  for (double x : v) q += x;
  return q;
}

/// Proximal and distal joint travel of one finger over one closure (rad).
struct RatioSample {
  double proximal = 0.0;
  double distal = 0.0;
};

struct RatioFit {
  double rho = 0.0;
  std::size_t samples = 0;
  double rms = 0.0;
};

inline RatioFit fit_pulley_ratio(const std::vector<RatioSample>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("need at least two displacement samples");
  double sxy = 0.0, sxx = 0.0;
  for (const RatioSample& s : samples) {
    if (!(s.proximal >= 0.0) || !(s.distal >= 0.0)) throw std::invalid_argument("joint displacements must be non-negative");
    sxy += s.proximal * s.distal;
    sxx += s.proximal * s.proximal;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("all proximal displacements are zero");
  RatioFit fit;
  fit.rho = sxy / sxx;
  fit.samples = samples.size();
  double ss = 0.0;
  for (const RatioSample& s : samples) {
    const double e = s.distal - fit.rho * s.proximal;
    ss += e * e;
  }
  fit.rms = std::sqrt(ss / static_cast<double>(samples.size()));
  return fit;
}

/// Both fingers of every valid grasp in the pool.
inline std::vector<RatioSample> harvest_ratio_samples(const GraspPool& pool) {
  std::vector<RatioSample> out;
  for (const GraspRecord& r : pool.records) {
    if (!r.valid()) continue;
    for (const JointDisplacement& d : r.displacement) out.push_back({d.proximal, d.distal});
  }
  return out;
}

}  // namespace tendongrip
