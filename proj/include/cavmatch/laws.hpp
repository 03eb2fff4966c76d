#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cavmatch/error.hpp"
#include "cavmatch/random.hpp"

namespace cavmatch {

namespace detail {

inline std::vector<double> cumulative(std::span<const double> p) {
  std::vector<double> c(p.size());
  std::partial_sum(p.begin(), p.end(), c.begin());
  return c;
}

inline int sample_cumulative(const std::vector<double>& cum, Rng& rng) {
  const double u = uniform01(rng) * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) --it;
  return static_cast<int>(it - cum.begin());
}

}  // namespace detail

/// Degree distribution pi of the sparse graph limit, with generating
/// function phi and offspring generating function phi'(x)/phi'(1).
///
/// The offspring pmf (children excluding the parent) is (k+1) p_{k+1} / m,
/// which is the pmf whose generating function is phi'(x)/phi'(1).
class DegreeLaw {
 public:
  static constexpr double kPmfTolerance = 1e-12;
  static constexpr double kPoissonTail = 1e-12;

  static DegreeLaw from_pmf(std::vector<double> pmf) {
    if (pmf.empty()) throw ValidationError("degree_law.pmf: empty");
    double sum = 0.0;
    for (size_t k = 0; k < pmf.size(); ++k) {
      if (!(pmf[k] >= 0.0) || !std::isfinite(pmf[k]))
        throw ValidationError("degree_law.pmf: entry " + std::to_string(k) + " is negative");
      sum += pmf[k];
    }
    if (std::abs(sum - 1.0) > kPmfTolerance)
      throw ValidationError("degree_law.pmf: entries sum to " + std::to_string(sum) + ", not 1");
    while (pmf.size() > 1 && pmf.back() == 0.0) pmf.pop_back();
    DegreeLaw law;
    law.pmf_ = std::move(pmf);
    law.finish();
    return law;
  }

  static DegreeLaw regular(int d) {
    if (d < 1) throw ValidationError("degree_law.d: must be >= 1");
    std::vector<double> p(static_cast<size_t>(d) + 1, 0.0);
    p.back() = 1.0;
    return from_pmf(std::move(p));
  }

  static DegreeLaw poisson(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("degree_law.c: must be > 0");
    DegreeLaw law;
    law.poisson_ = true;
    law.c_ = c;
    // Smallest D with P(deg > D) < 1e-12.
    double term = std::exp(-c);
    double cdf = term;
    std::vector<double> p{term};
    for (int k = 1; 1.0 - cdf >= kPoissonTail || k <= static_cast<int>(c); ++k) {
      term *= c / k;
      p.push_back(term);
      cdf += term;
      if (k > 10000) break;
    }
    law.pmf_ = std::move(p);
    law.finish();
    return law;
  }

  bool is_poisson() const noexcept { return poisson_; }
  double poisson_mean() const noexcept { return c_; }

  /// Mean degree phi'(1).
  double mean() const noexcept { return mean_; }
  int max_degree() const noexcept { return static_cast<int>(pmf_.size()) - 1; }

  /// Degree pmf; analytic for Poisson, zero outside the stored support otherwise.
  double pmf(int k) const {
    if (k < 0) return 0.0;
    if (poisson_) return std::exp(-c_ + k * std::log(c_) - std::lgamma(k + 1.0));
    return k < static_cast<int>(pmf_.size()) ? pmf_[static_cast<size_t>(k)] : 0.0;
  }
  const std::vector<double>& pmf_vector() const noexcept { return pmf_; }

  double offspring_pmf(int k) const { return k < 0 ? 0.0 : (k + 1) * pmf(k + 1) / mean_; }

  double phi(double x) const {
    if (poisson_) return std::exp(c_ * (x - 1.0));
    double acc = 0.0;
    for (size_t k = pmf_.size(); k-- > 0;) acc = acc * x + pmf_[k];
    return acc;
  }

  double phi_prime(double x) const {
    if (poisson_) return c_ * std::exp(c_ * (x - 1.0));
    double acc = 0.0;
    for (size_t k = pmf_.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * pmf_[k];
    return acc;
  }

  /// phi'(x) / phi'(1).
  double offspring_pgf(double x) const { return phi_prime(x) / mean_; }

  int sample_degree(Rng& rng) const { return detail::sample_cumulative(degree_cum_, rng); }
  int sample_offspring(Rng& rng) const { return detail::sample_cumulative(offspring_cum_, rng); }

  std::string describe() const {
    if (poisson_) return "poisson(" + std::to_string(c_) + ")";
    std::string s = "pmf[";
    for (size_t k = 0; k < pmf_.size(); ++k) s += (k ? "," : "") + std::to_string(pmf_[k]);
    return s + "]";
  }

 private:
  void finish() {
    if (poisson_) {
      mean_ = c_;
    } else {
      mean_ = 0.0;
      for (size_t k = 1; k < pmf_.size(); ++k) mean_ += static_cast<double>(k) * pmf_[k];
      if (!(mean_ > 0.0)) throw ValidationError("degree_law.pmf: mean degree must be > 0");
    }
    degree_cum_ = detail::cumulative(pmf_);
    std::vector<double> off(pmf_.size() > 1 ? pmf_.size() - 1 : 1, 0.0);
    for (size_t k = 0; k + 1 < pmf_.size(); ++k) off[k] = (k + 1) * pmf_[k + 1] / mean_;
    offspring_cum_ = detail::cumulative(off);
  }

  bool poisson_ = false;
  double c_ = 0.0;
  double mean_ = 0.0;
  std::vector<double> pmf_;
  std::vector<double> degree_cum_;
  std::vector<double> offspring_cum_;
};

struct ExponentialWeights {
  double rate = 1.0;
};
struct UniformWeights {
  double a = 0.0;
  double b = 1.0;
};
struct EmpiricalWeights {
  std::vector<double> sorted;
};

/// Edge weight law omega.
class WeightLaw {
 public:
  using Kind = std::variant<ExponentialWeights, UniformWeights, EmpiricalWeights>;

  static WeightLaw exponential(double rate = 1.0) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("weight_law.rate: must be > 0");
    return WeightLaw(ExponentialWeights{rate});
  }
  static WeightLaw uniform(double a = 0.0, double b = 1.0) {
    if (!(b > a)) throw ValidationError("weight_law: uniform needs a < b");
    return WeightLaw(UniformWeights{a, b});
  }
  static WeightLaw empirical(std::vector<double> samples) {
    if (samples.empty()) throw ValidationError("weight_law.samples: empty");
    std::sort(samples.begin(), samples.end());
    WeightLaw law(EmpiricalWeights{std::move(samples)});
    const auto& s = std::get<EmpiricalWeights>(law.kind_).sorted;
    law.suffix_.assign(s.size() + 1, 0.0);
    for (size_t i = s.size(); i-- > 0;) law.suffix_[i] = law.suffix_[i + 1] + s[i];
    return law;
  }

  const Kind& kind() const noexcept { return kind_; }
  bool is_exponential() const noexcept { return std::holds_alternative<ExponentialWeights>(kind_); }
  double rate() const { return std::get<ExponentialWeights>(kind_).rate; }

  /// P(W <= t).
  double cdf(double t) const {
    if (const auto* e = std::get_if<ExponentialWeights>(&kind_))
      return t <= 0.0 ? 0.0 : -std::expm1(-e->rate * t);
    if (const auto* u = std::get_if<UniformWeights>(&kind_))
      return std::clamp((t - u->a) / (u->b - u->a), 0.0, 1.0);
    const auto& s = std::get<EmpiricalWeights>(kind_).sorted;
    return static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin()) /
           static_cast<double>(s.size());
  }

  /// P(W > t).
  double survival(double t) const {
    if (const auto* e = std::get_if<ExponentialWeights>(&kind_))
      return t <= 0.0 ? 1.0 : std::exp(-e->rate * t);
    return 1.0 - cdf(t);
  }

  /// Left-continuous inverse cdf for u in (0,1).
  double quantile(double u) const {
    if (const auto* e = std::get_if<ExponentialWeights>(&kind_)) return -std::log1p(-u) / e->rate;
    if (const auto* un = std::get_if<UniformWeights>(&kind_)) return un->a + u * (un->b - un->a);
    const auto& s = std::get<EmpiricalWeights>(kind_).sorted;
    auto idx = static_cast<size_t>(std::ceil(u * static_cast<double>(s.size())));
    idx = std::clamp<size_t>(idx, 1, s.size());
    return s[idx - 1];
  }

  double sample(Rng& rng) const { return quantile(uniform_open(rng)); }

  double mean() const {
    if (const auto* e = std::get_if<ExponentialWeights>(&kind_)) return 1.0 / e->rate;
    if (const auto* u = std::get_if<UniformWeights>(&kind_)) return 0.5 * (u->a + u->b);
    return suffix_[0] / static_cast<double>(std::get<EmpiricalWeights>(kind_).sorted.size());
  }

  /// E[W 1(W > s)].
  double tail_mean(double s) const {
    if (const auto* e = std::get_if<ExponentialWeights>(&kind_)) {
      if (s <= 0.0) return 1.0 / e->rate;
      return std::exp(-e->rate * s) * (s + 1.0 / e->rate);
    }
    if (const auto* u = std::get_if<UniformWeights>(&kind_)) {
      if (s <= u->a) return 0.5 * (u->a + u->b);
      if (s >= u->b) return 0.0;
      return (u->b * u->b - s * s) / (2.0 * (u->b - u->a));
    }
    const auto& v = std::get<EmpiricalWeights>(kind_).sorted;
    auto i = static_cast<size_t>(std::upper_bound(v.begin(), v.end(), s) - v.begin());
    return suffix_[i] / static_cast<double>(v.size());
  }

  std::string describe() const {
    if (const auto* e = std::get_if<ExponentialWeights>(&kind_))
      return "exponential(" + std::to_string(e->rate) + ")";
    if (const auto* u = std::get_if<UniformWeights>(&kind_))
      return "uniform(" + std::to_string(u->a) + "," + std::to_string(u->b) + ")";
    return "empirical(" + std::to_string(std::get<EmpiricalWeights>(kind_).sorted.size()) + ")";
  }

 private:
  explicit WeightLaw(Kind k) : kind_(std::move(k)) {}

  Kind kind_;
  std::vector<double> suffix_;
};

}  // namespace cavmatch
