#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cavmatch/error.hpp"
#include "cavmatch/generators.hpp"
#include "cavmatch/laws.hpp"
#include "cavmatch/parallel.hpp"
#include "cavmatch/random.hpp"

namespace cavmatch {

/// Right-continuous step CDF on the uniform grid t_k = k * step, k = 0..G.
/// h(t) = 0 for t < 0 and h(t) = 1 beyond the last grid point.
class CdfGrid {
 public:
  CdfGrid() = default;
  CdfGrid(double step, std::vector<double> values) : step_(step), values_(std::move(values)) {
    if (!(step > 0.0)) throw ValidationError("cdf grid: step must be > 0");
    if (values_.empty()) throw ValidationError("cdf grid: no values");
  }

  static CdfGrid constant(double step, double t_max, double value) {
    return CdfGrid(step, std::vector<double>(points_for(step, t_max), value));
  }

  static size_t points_for(double step, double t_max) {
    return static_cast<size_t>(std::ceil(t_max / step - 1e-9)) + 1;
  }

  double step() const noexcept { return step_; }
  double t_max() const noexcept { return step_ * static_cast<double>(values_.size() - 1); }
  size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double t(size_t k) const { return step_ * static_cast<double>(k); }

  double operator()(double t) const {
    if (t < 0.0) return 0.0;
    const auto k = static_cast<size_t>(std::floor(t / step_ + 1e-12));
    return k < values_.size() ? values_[k] : 1.0;
  }

  double atom_at_zero() const noexcept { return values_.front(); }

  bool is_valid_cdf(double slack = 0.0) const {
    for (size_t k = 0; k < values_.size(); ++k) {
      if (values_[k] < -slack || values_[k] > 1.0 + slack) return false;
      if (k > 0 && values_[k] + slack < values_[k - 1]) return false;
    }
    return true;
  }

  double sup_distance(const CdfGrid& o) const {
    if (o.size() != size() || o.step() != step()) throw ValidationError("cdf grid: incompatible grids");
    double d = 0.0;
    for (size_t k = 0; k < values_.size(); ++k) d = std::max(d, std::abs(values_[k] - o.values_[k]));
    return d;
  }

 private:
  double step_ = 1e-3;
  std::vector<double> values_;
};

/// Particles distributed (approximately) as the stationary message law.
struct SamplePool {
  std::vector<double> samples;
  int sweep_count = 0;

  double atom_at_zero() const {
    if (samples.empty()) return 0.0;
    return static_cast<double>(std::count(samples.begin(), samples.end(), 0.0)) /
           static_cast<double>(samples.size());
  }

  double mean() const {
    double s = 0.0;
    for (double x : samples) s += x;
    return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
  }

  /// sup_k |F_pool(t_k) - h(t_k)| over the grid points of h.
  double kolmogorov_distance(const CdfGrid& h) const {
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    size_t idx = 0;
    for (size_t k = 0; k < h.size(); ++k) {
      const double t = h.t(k);
      while (idx < sorted.size() && sorted[idx] <= t) ++idx;
      d = std::max(d, std::abs(static_cast<double>(idx) / n - h.values()[k]));
    }
    return d;
  }
};

/// phi'(x)/phi'(1).
inline double offspring_pgf(const DegreeLaw& law, double x) { return law.offspring_pgf(x); }

/// inf{x in [0,1] : phi_hat(x) >= y}, by bisection on the nondecreasing map.
inline double inv_phi_hat(const DegreeLaw& law, double y, double tol = 1e-14) {
  if (law.offspring_pgf(0.0) >= y) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (law.offspring_pgf(mid) >= y)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

struct GridSpec {
  double step = 1e-3;
  std::optional<double> t_max;  // default: 1.5 x the 99.99th weight percentile

  double resolve_t_max(const WeightLaw& weights) const {
    return t_max ? *t_max : 1.5 * weights.quantile(0.9999);
  }
};

struct IterateResult {
  CdfGrid h;
  double residual = 0.0;
  int iterations = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// E_W[h(W - t_k)] for every k: h piecewise constant, omega-mass of each cell exact.
inline std::vector<double> expected_shifted(const CdfGrid& h, const WeightLaw& weights) {
  const size_t g = h.size();
  const double s = h.step();
  const auto& hv = h.values();
  std::vector<double> out(g);
  if (weights.is_exponential()) {
    // Memoryless: P(W in [t_k + a, t_k + b)) = e^{-rate t_k} P(W in [a, b)).
    const double rate = weights.rate();
    double base = 0.0;
    for (size_t j = 0; j < g; ++j)
      base += hv[j] * (std::exp(-rate * s * static_cast<double>(j)) - std::exp(-rate * s * static_cast<double>(j + 1)));
    base += std::exp(-rate * s * static_cast<double>(g));  // h = 1 beyond the grid
    for (size_t k = 0; k < g; ++k) out[k] = std::exp(-rate * s * static_cast<double>(k)) * base;
    return out;
  }
  // Cell masses mu_m = P(W in [m s, (m+1) s)), m = 0 .. 2g-1, plus tails.
  std::vector<double> cdf(2 * g + 1);
  for (size_t m = 0; m < cdf.size(); ++m) cdf[m] = weights.cdf(s * static_cast<double>(m));
  std::vector<double> mu(2 * g);
  size_t last_nonzero = 0;
  for (size_t m = 0; m < mu.size(); ++m) {
    mu[m] = cdf[m + 1] - cdf[m];
    if (mu[m] != 0.0) last_nonzero = m;
  }
  for (size_t k = 0; k < g; ++k) {
    double acc = 0.0;
    const size_t jmax = last_nonzero >= k ? std::min(g - 1, last_nonzero - k) : 0;
    if (last_nonzero >= k)
      for (size_t j = 0; j <= jmax; ++j) acc += hv[j] * mu[k + j];
    acc += 1.0 - cdf[k + g];  // W - t_k beyond the grid
    out[k] = acc;
  }
  return out;
}

}  // namespace detail

/// One application of h <- 1[t>=0] phi_hat(1 - E_W[h(W - t)]).
inline CdfGrid apply_rde_map(const CdfGrid& h, const DegreeLaw& law, const WeightLaw& weights) {
  const auto e = detail::expected_shifted(h, weights);
  std::vector<double> next(h.size());
  for (size_t k = 0; k < h.size(); ++k) {
    next[k] = std::clamp(law.offspring_pgf(std::clamp(1.0 - e[k], 0.0, 1.0)), 0.0, 1.0);
    if (k > 0) next[k] = std::max(next[k], next[k - 1]);  // rounding can break monotonicity by an ulp
  }
  return CdfGrid(h.step(), std::move(next));
}

/// Fixed-point iteration of the distributional equation on a CDF grid.
/// Throws ConvergenceError if the sup-norm change is still >= tol after
/// `max_iter` iterations.
inline IterateResult iterate_h(const DegreeLaw& law, const WeightLaw& weights, const GridSpec& grid,
                               double tol, int max_iter, std::optional<CdfGrid> init = std::nullopt) {
  IterateResult r;
  const double t_max = grid.resolve_t_max(weights);
  if (t_max < weights.quantile(0.9999))
    r.warnings.push_back("t_max " + std::to_string(t_max) + " is below the 99.99th weight percentile");
  CdfGrid h = init ? *init : CdfGrid::constant(grid.step, t_max, 1.0);
  if (init && (h.step() != grid.step || h.size() != CdfGrid::points_for(grid.step, t_max)))
    throw ValidationError("iterate_h: initial grid does not match the grid spec");
  r.residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    CdfGrid next = apply_rde_map(h, law, weights);
    r.residual = next.sup_distance(h);
    h = std::move(next);
    r.iterations = it;
    if (r.residual < tol) {
      r.h = std::move(h);
      return r;
    }
  }
  throw ConvergenceError("iterate_h: no convergence after " + std::to_string(max_iter) + " iterations", r.residual);
}

/// Initial grid 1[t>=0] (1 - e^{-t}); used as a second starting point.
inline CdfGrid exponential_init(const GridSpec& grid, const WeightLaw& weights) {
  CdfGrid c = CdfGrid::constant(grid.step, grid.resolve_t_max(weights), 0.0);
  std::vector<double> v(c.size());
  for (size_t k = 0; k < v.size(); ++k) v[k] = -std::expm1(-c.t(k));
  return CdfGrid(grid.step, std::move(v));
}

inline constexpr int kPoolPartitions = 64;

/// Population dynamics for Z = max(0, max_{i<=N} (w_i - Z_i)) in law, N from
/// the offspring law. Synchronous sweeps over a frozen copy of the previous
/// pool; the pool is cut into a fixed number of partitions with their own
/// streams, so the result does not depend on `threads`.
inline SamplePool population_dynamics(const DegreeLaw& law, const WeightLaw& weights, int pool_size, int sweeps,
                                      std::uint64_t seed, int threads = 1) {
  if (pool_size < 1000) throw ValidationError("population_dynamics.pool_size: must be >= 1000");
  SamplePool pool{std::vector<double>(static_cast<size_t>(pool_size), 0.0), 0};
  std::vector<double> next(pool.samples.size());
  const auto n = static_cast<std::uint64_t>(pool_size);
  for (int s = 0; s < sweeps; ++s) {
    const auto& prev = pool.samples;
    parallel_for(kPoolPartitions, threads, [&](int part) {
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(s) * kPoolPartitions + static_cast<std::uint64_t>(part));
      const size_t lo = n * static_cast<size_t>(part) / kPoolPartitions;
      const size_t hi = n * static_cast<size_t>(part + 1) / kPoolPartitions;
      for (size_t i = lo; i < hi; ++i) {
        const int kids = law.sample_offspring(rng);
        double z = 0.0;
        for (int c = 0; c < kids; ++c) {
          const double w = weights.sample(rng);
          z = std::max(z, w - prev[static_cast<size_t>(detail::bounded(rng, n))]);
        }
        next[i] = z;
      }
    });
    pool.samples.swap(next);
    pool.sweep_count = s + 1;
  }
  return pool;
}

struct ExpFixedPoint {
  double K = 0.0;
  CdfGrid h;
};

/// f(x) = int_0^inf phi_hat(1 - e^{-u} x) e^{-u} du = (1 - phi(1 - x)) / (m x),
/// continuous and strictly decreasing on [0, 1] with f(0) = 1.
inline double exp_fixed_point_map(const DegreeLaw& law, double x) {
  // Midpoint rule on int_0^1 phi_hat(1 - s x) ds avoids cancellation near 0.
  if (x < 1e-9) return law.offspring_pgf(1.0 - 0.5 * x);
  return (1.0 - law.phi(1.0 - x)) / (law.mean() * x);
}

/// Closed-form stationary law for Exp(rate) weights: h(t) = phi_hat(1 - e^{-rate t} K)
/// where K = f(K), found by bisection.
inline ExpFixedPoint exp_fixed_point_K(const DegreeLaw& law, double rate, double tol = 1e-13,
                                       const GridSpec& grid = {}) {
  if (!(rate > 0.0)) throw ValidationError("exp_fixed_point_K.rate: must be > 0");
  double lo = 0.0;  // f(lo) - lo >= 0
  double hi = 1.0;  // f(hi) - hi <= 0
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (exp_fixed_point_map(law, mid) - mid >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  ExpFixedPoint out;
  out.K = 0.5 * (lo + hi);
  const WeightLaw w = WeightLaw::exponential(rate);
  const double t_max = grid.resolve_t_max(w);
  std::vector<double> v(CdfGrid::points_for(grid.step, t_max));
  for (size_t k = 0; k < v.size(); ++k)
    v[k] = law.offspring_pgf(1.0 - std::exp(-rate * grid.step * static_cast<double>(k)) * out.K);
  out.h = CdfGrid(grid.step, std::move(v));
  return out;
}

/// Inverse-CDF sampler for a grid law: the atom at zero with probability
/// h(0), otherwise linear interpolation inside the cell where h crosses u.
class CdfSampler {
 public:
  explicit CdfSampler(const CdfGrid& h) : h_(&h) {}

  double operator()(Rng& rng) const { return invert(uniform01(rng)); }

  double invert(double u) const {
    const auto& v = h_->values();
    if (u < v.front()) return 0.0;
    auto it = std::upper_bound(v.begin(), v.end(), u);
    if (it == v.end()) return h_->t_max();
    const auto k = static_cast<size_t>(it - v.begin());
    const double lo = v[k - 1];
    const double hi = v[k];
    const double frac = hi > lo ? (u - lo) / (hi - lo) : 1.0;
    return h_->step() * (static_cast<double>(k - 1) + frac);
  }

 private:
  const CdfGrid* h_ = nullptr;
};

inline SamplePool sample_from_cdf(const CdfGrid& h, int count, std::uint64_t seed) {
  Rng rng(seed);
  CdfSampler sampler(h);
  SamplePool pool;
  pool.samples.resize(static_cast<size_t>(std::max(0, count)));
  for (double& x : pool.samples) x = sampler(rng);
  return pool;
}

}  // namespace cavmatch
