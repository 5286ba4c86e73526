#pragma once

// Exact posterior by enumeration, for instances small enough to list every
// configuration. This is a test oracle: it evaluates the joint posterior term
// by term from the unsimplified model (record likelihood, latent prior,
// Bernoulli distortion flags, Beta prior) and shares no code with the sampler
// or with the precomputed field tables.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ebrl/model.hpp"
#include "ebrl/strdist.hpp"

namespace ebrl {

inline constexpr double kEnumerationCap = 1e7;

/// Normalized probabilities over every (lambda, Y, z) configuration, beta
/// integrated out. Configurations are addressed in mixed radix: lambda digits
/// first (base n_pop), then Y digits (base |S_f|), then z bits.
struct EnumeratedPosterior {
  std::size_t num_records = 0;
  std::size_t num_fields = 0;
  std::size_t n_pop = 0;
  std::vector<std::size_t> vocab_sizes;
  std::vector<double> probs;

  std::size_t encode(const LatentState& s) const {
    std::size_t idx = 0;
    std::size_t scale = 1;
    for (std::size_t r = 0; r < num_records; ++r, scale *= n_pop) idx += s.lambda[r] * scale;
    for (std::size_t v = 0; v < n_pop; ++v)
      for (std::size_t f = 0; f < num_fields; ++f) {
        idx += s.latentValue(v, f) * scale;
        scale *= vocab_sizes[f];
      }
    for (std::size_t k = 0; k < num_records * num_fields; ++k, scale *= 2) idx += s.z[k] * scale;
    return idx;
  }

  LatentState decode(std::size_t idx) const {
    LatentState s;
    s.n_pop = n_pop;
    s.num_fields = num_fields;
    s.lambda.resize(num_records);
    s.y.resize(n_pop * num_fields);
    s.z.resize(num_records * num_fields);
    for (std::size_t r = 0; r < num_records; ++r) {
      s.lambda[r] = static_cast<Index>(idx % n_pop);
      idx /= n_pop;
    }
    for (std::size_t v = 0; v < n_pop; ++v)
      for (std::size_t f = 0; f < num_fields; ++f) {
        s.latentValue(v, f) = static_cast<Index>(idx % vocab_sizes[f]);
        idx /= vocab_sizes[f];
      }
    for (std::size_t k = 0; k < num_records * num_fields; ++k) {
      s.z[k] = static_cast<std::uint8_t>(idx % 2);
      idx /= 2;
    }
    return s;
  }

  double probability(const LatentState& s) const { return probs[encode(s)]; }
};

class PosteriorOracle {
 public:
  PosteriorOracle(const Dataset& ds, const Hyperparams& hp) : ds_(&ds), hp_(hp) {
    const std::size_t p = ds.numFields();
    alpha_.resize(p);
    lik_.resize(p);
    for (std::size_t f = 0; f < p; ++f) {
      const std::size_t m = ds.vocab[f].size();
      std::vector<double> counts(m, 0.0);
      for (std::size_t r = 0; r < ds.numRecords(); ++r) counts[ds.value(r, f)] += 1.0;
      for (auto& c : counts) c /= static_cast<double>(ds.numRecords());
      alpha_[f] = counts;
      // lik_[f][x * m + y]: probability of observing x from latent value y when distorted.
      lik_[f].resize(m * m);
      for (std::size_t y = 0; y < m; ++y) {
        if (!ds.isString(f)) {
          for (std::size_t x = 0; x < m; ++x) lik_[f][x * m + y] = alpha_[f][x];
          continue;
        }
        double norm = 0.0;
        std::vector<double> un(m);
        for (std::size_t x = 0; x < m; ++x) {
          const double d = stringDistance(hp.distance, ds.vocab[f][x], ds.vocab[f][y]);
          un[x] = alpha_[f][x] * std::exp(-hp.c * d);
          norm += un[x];
        }
        for (std::size_t x = 0; x < m; ++x) lik_[f][x * m + y] = un[x] / norm;
      }
    }
  }

  /// n_pop^N * prod_f |S_f|^n_pop * 2^(N p).
  double fullConfigCount() const {
    return linkageConfigCount() *
           std::pow(2.0, static_cast<double>(ds_->numRecords() * ds_->numFields()));
  }

  /// n_pop^N * prod_f |S_f|^n_pop: the (lambda, Y) pairs visited when z is
  /// summed out group by group.
  double linkageConfigCount() const {
    double c = std::pow(static_cast<double>(hp_.n_pop), static_cast<double>(ds_->numRecords()));
    for (std::size_t f = 0; f < ds_->numFields(); ++f)
      c *= std::pow(static_cast<double>(ds_->vocab[f].size()), static_cast<double>(hp_.n_pop));
    return c;
  }

  /// Log joint density with beta taken from the state.
  double logWeight(const LatentState& s) const {
    const std::size_t p = ds_->numFields();
    double total = recordAndPriorTerms(s);
    if (!std::isfinite(total)) return total;
    for (std::size_t r = 0; r < ds_->numRecords(); ++r)
      for (std::size_t f = 0; f < p; ++f) {
        const double b = s.distortionProb(ds_->list_of[r], f);
        total += s.distorted(r, f) ? std::log(b) : std::log(1.0 - b);
      }
    for (std::size_t i = 0; i < ds_->numLists(); ++i)
      for (std::size_t f = 0; f < p; ++f) {
        const double b = s.distortionProb(i, f);
        total += (hp_.a - 1.0) * std::log(b) + (hp_.b - 1.0) * std::log(1.0 - b);
      }
    return total;
  }

  /// Log joint density of (lambda, Y, z) with every beta integrated out.
  double logWeightIntegrated(const LatentState& s) const {
    const std::size_t p = ds_->numFields();
    double total = recordAndPriorTerms(s);
    if (!std::isfinite(total)) return total;
    std::vector<double> zsum(ds_->numLists() * p, 0.0);
    for (std::size_t r = 0; r < ds_->numRecords(); ++r)
      for (std::size_t f = 0; f < p; ++f) zsum[ds_->list_of[r] * p + f] += s.distorted(r, f);
    for (std::size_t i = 0; i < ds_->numLists(); ++i) {
      const auto n_i = static_cast<double>(ds_->list_sizes[i]);
      for (std::size_t f = 0; f < p; ++f) {
        const double z = zsum[i * p + f];
        total += logBeta(z + hp_.a, n_i - z + hp_.b) - logBeta(hp_.a, hp_.b);
      }
    }
    return total;
  }

  std::vector<double> lambdaConditional(LatentState s, std::size_t r) const {
    std::vector<double> lw(hp_.n_pop);
    for (std::size_t v = 0; v < hp_.n_pop; ++v) {
      s.lambda[r] = static_cast<Index>(v);
      lw[v] = logWeight(s);
    }
    return normalize(lw);
  }

  std::vector<double> yConditional(LatentState s, std::size_t v, std::size_t f) const {
    std::vector<double> lw(ds_->vocab[f].size());
    for (std::size_t w = 0; w < lw.size(); ++w) {
      s.latentValue(v, f) = static_cast<Index>(w);
      lw[w] = logWeight(s);
    }
    return normalize(lw);
  }

  /// P(z_rf = 1 | rest).
  double zConditional(LatentState s, std::size_t r, std::size_t f) const {
    std::vector<double> lw(2);
    for (std::uint8_t b = 0; b < 2; ++b) {
      s.distorted(r, f) = b;
      lw[b] = logWeight(s);
    }
    return normalize(lw)[1];
  }

  /// Log joint density as a function of one distortion probability.
  double betaLogKernel(LatentState s, std::size_t list, std::size_t f, double value) const {
    s.distortionProb(list, f) = value;
    return logWeight(s);
  }

  EnumeratedPosterior enumerate(double cap = kEnumerationCap) const {
    const double count = fullConfigCount();
    if (count > cap)
      throw Error("instance too large to enumerate: " + std::to_string(count) +
                  " configurations (cap " + std::to_string(cap) + ")");
    EnumeratedPosterior e;
    e.num_records = ds_->numRecords();
    e.num_fields = ds_->numFields();
    e.n_pop = hp_.n_pop;
    for (const auto& v : ds_->vocab) e.vocab_sizes.push_back(v.size());
    const auto total = static_cast<std::size_t>(count);
    std::vector<double> lw(total);
    for (std::size_t k = 0; k < total; ++k) lw[k] = logWeightIntegrated(e.decode(k));
    e.probs = normalize(lw);
    return e;
  }

  /// Exact marginal of lambda, indexed by sum_r lambda_r * n_pop^r. The z flags
  /// are summed exactly within each (list, field) group and beta integrated.
  std::vector<double> lambdaMarginal(double cap = kEnumerationCap) const {
    const double count = linkageConfigCount();
    if (count > cap)
      throw Error("instance too large to enumerate: " + std::to_string(count) +
                  " (lambda, Y) configurations (cap " + std::to_string(cap) + ")");
    const std::size_t n = ds_->numRecords();
    const std::size_t p = ds_->numFields();
    const std::size_t n_pop = hp_.n_pop;
    std::size_t lambda_count = 1;
    for (std::size_t r = 0; r < n; ++r) lambda_count *= n_pop;
    std::size_t y_count = 1;
    for (std::size_t f = 0; f < p; ++f)
      for (std::size_t v = 0; v < n_pop; ++v) y_count *= ds_->vocab[f].size();

    std::vector<std::vector<std::size_t>> groups(ds_->numLists());
    for (std::size_t r = 0; r < n; ++r) groups[ds_->list_of[r]].push_back(r);

    LatentState s;
    s.n_pop = n_pop;
    s.num_fields = p;
    s.lambda.resize(n);
    s.y.resize(n_pop * p);
    std::vector<double> marginal(lambda_count, 0.0);
    for (std::size_t li = 0; li < lambda_count; ++li) {
      std::size_t rest = li;
      for (std::size_t r = 0; r < n; ++r) {
        s.lambda[r] = static_cast<Index>(rest % n_pop);
        rest /= n_pop;
      }
      double acc = 0.0;
      for (std::size_t yi = 0; yi < y_count; ++yi) {
        rest = yi;
        double w = 1.0;
        for (std::size_t v = 0; v < n_pop; ++v)
          for (std::size_t f = 0; f < p; ++f) {
            const std::size_t m = ds_->vocab[f].size();
            s.latentValue(v, f) = static_cast<Index>(rest % m);
            rest /= m;
            w *= alpha_[f][s.latentValue(v, f)];
          }
        for (std::size_t i = 0; i < groups.size() && w > 0.0; ++i)
          for (std::size_t f = 0; f < p && w > 0.0; ++f) w *= groupWeight(s, groups[i], f);
        acc += w;
      }
      marginal[li] = acc;
    }
    double z = 0.0;
    for (double m : marginal) z += m;
    for (double& m : marginal) m /= z;
    return marginal;
  }

  static std::size_t encodeLambda(std::span<const Index> lambda, std::size_t n_pop) {
    std::size_t idx = 0, scale = 1;
    for (Index v : lambda) {
      idx += v * scale;
      scale *= n_pop;
    }
    return idx;
  }

 private:
  static double logBeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

  static std::vector<double> normalize(const std::vector<double>& lw) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double w : lw) mx = std::max(mx, w);
    std::vector<double> out(lw.size(), 0.0);
    if (!std::isfinite(mx)) return out;
    double z = 0.0;
    for (std::size_t k = 0; k < lw.size(); ++k) z += (out[k] = std::exp(lw[k] - mx));
    for (double& o : out) o /= z;
    return out;
  }

  // Record likelihood terms plus the latent prior.
  double recordAndPriorTerms(const LatentState& s) const {
    const std::size_t p = ds_->numFields();
    double total = 0.0;
    for (std::size_t r = 0; r < ds_->numRecords(); ++r)
      for (std::size_t f = 0; f < p; ++f) {
        const Index x = ds_->value(r, f);
        const Index y = s.latentValue(s.lambda[r], f);
        const double zf = s.distorted(r, f);
        const double term = (1.0 - zf) * (x == y ? 1.0 : 0.0) + zf * likelihood(f, x, y);
        if (term <= 0.0) return -std::numeric_limits<double>::infinity();
        total += std::log(term);
      }
    for (std::size_t v = 0; v < s.n_pop; ++v)
      for (std::size_t f = 0; f < p; ++f) total += std::log(alpha_[f][s.latentValue(v, f)]);
    return total;
  }

  double likelihood(std::size_t f, Index x, Index y) const {
    return lik_[f][static_cast<std::size_t>(x) * ds_->vocab[f].size() + y];
  }

  // sum over z of one (list, field) group, beta integrated.
  double groupWeight(const LatentState& s, const std::vector<std::size_t>& members, std::size_t f) const {
    const std::size_t k = members.size();
    const auto n_i = static_cast<double>(k);
    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
      double w = 1.0;
      double zs = 0.0;
      for (std::size_t j = 0; j < k && w > 0.0; ++j) {
        const std::size_t r = members[j];
        const Index x = ds_->value(r, f);
        const Index y = s.latentValue(s.lambda[r], f);
        if (mask >> j & 1) {
          w *= likelihood(f, x, y);
          zs += 1.0;
        } else if (x != y) {
          w = 0.0;
        }
      }
      if (w > 0.0) w *= std::exp(logBeta(zs + hp_.a, n_i - zs + hp_.b) - logBeta(hp_.a, hp_.b));
      total += w;
    }
    return total;
  }

  const Dataset* ds_;
  Hyperparams hp_;
  std::vector<std::vector<double>> alpha_;
  std::vector<std::vector<double>> lik_;
};

}  // namespace ebrl
