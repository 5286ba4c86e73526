#pragma once

// Divergence identities and bounds between the record distributions induced by
// two latent values, checked numerically.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ebrl/model.hpp"
#include "ebrl/rng.hpp"
#include "ebrl/strdist.hpp"

namespace ebrl {

/// Categorical distortion model: a field value is kept with probability 1-beta
/// and otherwise redrawn from theta.
struct CategoricalModelParams {
  std::vector<double> theta;
  double beta = 0.5;
  std::size_t y = 0;
  std::size_t y_prime = 1;

  void validate() const {
    if (theta.size() < 2) throw Error("theta needs at least two categories");
    double s = 0.0;
    for (double t : theta) {
      if (!(t > 0.0) || !std::isfinite(t)) throw Error("theta entries must be > 0");
      s += t;
    }
    if (std::abs(s - 1.0) > 1e-9) throw Error("theta must sum to 1 (sum is " + std::to_string(s) + ")");
    if (!(beta >= 0.0 && beta <= 1.0)) throw Error("beta must lie in [0,1]");
    if (y >= theta.size() || y_prime >= theta.size()) throw Error("latent value outside the category range");
  }
};

/// P(m) = I(y = m)(1 - beta) + theta_m beta.
inline std::vector<double> categoricalPMF(const std::vector<double>& theta, double beta, std::size_t y) {
  CategoricalModelParams{theta, beta, y, y}.validate();
  std::vector<double> p(theta.size());
  for (std::size_t m = 0; m < theta.size(); ++m) p[m] = (m == y ? 1.0 - beta : 0.0) + theta[m] * beta;
  return p;
}

inline std::vector<double> categoricalPMF(const CategoricalModelParams& params) {
  return categoricalPMF(params.theta, params.beta, params.y);
}

/// Record distribution of a string field: proportional to
/// I(y = m)(1 - beta) + alpha(m) beta exp(-c d(m, y)).
inline std::vector<double> ebStringPMF(std::size_t field, Index y, const FieldTables& tables, double beta) {
  const auto& st = tables.stringTable(field);
  if (y >= st.size) throw Error("latent value outside the field vocabulary");
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error("beta must lie in [0,1]");
  const auto& alpha = tables.alpha[field].probs;
  std::vector<double> p(st.size);
  double total = 0.0;
  for (std::size_t m = 0; m < st.size; ++m) {
    p[m] = (m == y ? 1.0 - beta : 0.0) + alpha[m] * beta * st.kernelAt(static_cast<Index>(m), y);
    total += p[m];
  }
  for (double& v : p) v /= total;
  return p;
}

inline double l1Distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error("distributions differ in length");
  double s = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) s += std::abs(p[m] - q[m]);
  return s;
}

/// KL(p || q) in nats, with 0 log 0 = 0.
inline double klDivergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error("distributions differ in length");
  double s = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    if (p[m] == 0.0) continue;
    if (!(q[m] > 0.0)) throw Error("KL undefined: q(" + std::to_string(m) + ") = 0 where p > 0");
    s += p[m] * std::log(p[m] / q[m]);
  }
  return s;
}

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double margin = 0.0;  // nonnegative iff the bound holds
};

/// KL(p || q) >= l1^2 / 4.
inline BoundCheck pinskerCheck(std::span<const double> p, std::span<const double> q) {
  BoundCheck b;
  b.lhs = klDivergence(p, q);
  const double l1 = l1Distance(p, q);
  b.rhs = 0.25 * l1 * l1;
  b.margin = b.lhs - b.rhs;
  b.holds = b.margin >= 0.0;
  return b;
}

/// KL(p || q) <= l1 ln(1 / min q).
inline BoundCheck reversePinskerCheck(std::span<const double> p, std::span<const double> q) {
  if (q.empty()) throw Error("empty distribution");
  const double qmin = *std::min_element(q.begin(), q.end());
  if (!(qmin > 0.0)) throw Error("reverse Pinsker bound is infinite: q has a zero entry");
  BoundCheck b;
  b.lhs = klDivergence(p, q);
  b.rhs = l1Distance(p, q) * std::log(1.0 / qmin);
  b.margin = b.rhs - b.lhs;
  b.holds = b.margin >= 0.0;
  return b;
}

/// 2(1 - beta) ln(1 / min_m theta_m beta), the reverse Pinsker bound written in
/// terms of the categorical model parameters (t != t').
inline double specializedReverseBound(const CategoricalModelParams& params) {
  params.validate();
  const double tmin = *std::min_element(params.theta.begin(), params.theta.end());
  return 2.0 * (1.0 - params.beta) * std::log(1.0 / (tmin * params.beta));
}

/// 1 - (gamma + ln 2) / ln r, clamped below at 0.
inline double fanoBound(double gamma, long r) {
  if (r < 2) throw Error("Fano bound needs r >= 2");
  return std::max(0.0, 1.0 - (gamma + std::log(2.0)) / std::log(static_cast<double>(r)));
}

/// sum_m alpha(m) exp(-c d(m, m')): the MGF of d(M, m') at -c, M ~ alpha.
inline double distanceMGF(std::size_t field, Index m_prime, const FieldTables& tables) {
  if (!tables.isString(field))
    throw Error("distanceMGF: field " + std::to_string(field) + " is categorical");
  const auto& st = tables.stringTable(field);
  if (m_prime >= st.size) throw Error("value outside the field vocabulary");
  const auto& alpha = tables.alpha[field].probs;
  double s = 0.0;
  for (std::size_t m = 0; m < st.size; ++m) s += alpha[m] * st.kernelAt(static_cast<Index>(m), m_prime);
  return s;
}

/// (1 - exp(-c d(t, t'))) * sum_m alpha(m) exp(-c d(m, t)) evaluated at an
/// arbitrary c from raw distances.
inline double mgfSeparationFactor(std::span<const double> alpha, std::span<const double> dist_to_t,
                                  double d_tt, double c) {
  double mgf = 0.0;
  for (std::size_t m = 0; m < alpha.size(); ++m) mgf += alpha[m] * std::exp(-c * dist_to_t[m]);
  return (1.0 - std::exp(-c * d_tt)) * mgf;
}

/// Random categorical model with t != t': M in [2, max_categories], theta
/// from a flat Dirichlet, beta uniform on (0, 1).
inline CategoricalModelParams randomCategoricalParams(StreamRng& rng, std::size_t max_categories = 10) {
  CategoricalModelParams p;
  const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_categories - 1));
  p.theta.resize(m);
  double s = 0.0;
  for (double& t : p.theta) s += (t = -std::log(rng.uniformOpen()));
  for (double& t : p.theta) t /= s;
  p.beta = rng.uniformOpen();
  p.y = static_cast<std::size_t>(rng.uniform() * static_cast<double>(m));
  p.y_prime = (p.y + 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(m - 1))) % m;
  return p;
}

/// Aggregate of one check over many draws.
struct CheckSummary {
  std::string name;
  std::size_t trials = 0;
  std::size_t passed = 0;
  double worst_margin = std::numeric_limits<double>::infinity();

  bool ok() const { return trials == passed; }
  void add(bool pass, double margin) {
    ++trials;
    passed += pass ? 1 : 0;
    worst_margin = std::min(worst_margin, margin);
  }
};

/// Random sweep over categorical models: the l1 identity, Pinsker, reverse
/// Pinsker and the specialized reverse bound.
inline std::vector<CheckSummary> categoricalBoundSweep(std::uint64_t seed, std::size_t draws,
                                                       double l1_tolerance = 1e-12) {
  CheckSummary l1{"l1_identity"}, pinsker{"pinsker"}, reverse{"reverse_pinsker"},
      special{"specialized_reverse_bound"};
  for (std::size_t k = 0; k < draws; ++k) {
    StreamRng rng(seed, k, Block::Check, 0);
    const auto params = randomCategoricalParams(rng);
    const auto p = categoricalPMF(params.theta, params.beta, params.y);
    const auto q = categoricalPMF(params.theta, params.beta, params.y_prime);
    const double err = std::abs(l1Distance(p, q) - 2.0 * (1.0 - params.beta));
    l1.add(err <= l1_tolerance, l1_tolerance - err);
    const auto pk = pinskerCheck(p, q);
    pinsker.add(pk.holds, pk.margin);
    const auto rp = reversePinskerCheck(p, q);
    reverse.add(rp.holds, rp.margin);
    const double sb = specializedReverseBound(params) - rp.lhs;
    special.add(sb >= 0.0, sb);
  }
  return {l1, pinsker, reverse, special};
}

}  // namespace ebrl
