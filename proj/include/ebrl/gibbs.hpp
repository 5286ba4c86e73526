#pragma once

// Blocked Gibbs sampler over (beta, z, Y, lambda). Each block is drawn from its
// exact full conditional; within a block the coordinates are conditionally
// independent and each coordinate owns a keyed random stream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ebrl/model.hpp"
#include "ebrl/rng.hpp"
#include "ebrl/strdist.hpp"

namespace ebrl {

struct SamplerConfig {
  std::size_t sweeps = 1;
  std::uint64_t seed = 0;
  std::size_t thin = 1;  // keep a lambda snapshot every `thin` sweeps
  bool record_lambda = true;
  bool record_beta = false;

  void validate() const {
    if (sweeps < 1) throw Error("sweeps must be >= 1");
    if (thin < 1) throw Error("thin must be >= 1");
  }
};

/// Output of a run: lambda snapshots plus per-sweep scalar diagnostics.
struct SampleLog {
  std::size_t num_records = 0;
  std::size_t n_pop = 0;
  std::size_t num_lists = 0;
  std::size_t num_fields = 0;
  std::size_t sweeps = 0;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  Hyperparams hp;

  std::vector<Index> lambda;                              // snapshots x num_records
  std::vector<std::uint32_t> n_distinct;                  // per sweep
  std::vector<std::vector<std::uint32_t>> multiplicity;   // per sweep; [m-1] = latents with m records
  std::vector<double> beta_trace;                         // per sweep x (num_lists * num_fields)

  std::size_t numSnapshots() const { return num_records == 0 ? 0 : lambda.size() / num_records; }
  std::span<const Index> snapshot(std::size_t s) const {
    return {lambda.data() + s * num_records, num_records};
  }
  /// Latents with exactly m attached records at the given sweep.
  std::uint32_t multiplicityCount(std::size_t sweep, std::size_t m) const {
    const auto& row = multiplicity.at(sweep);
    return m >= 1 && m <= row.size() ? row[m - 1] : 0;
  }

  /// Log holding only the given snapshots; diagnostics are derived from them.
  static SampleLog fromSnapshots(std::size_t num_records, const std::vector<std::vector<Index>>& snaps);

  bool operator==(const SampleLog&) const = default;
};

namespace detail {

/// Appends n_distinct and the multiplicity histogram of one linkage vector.
inline void recordPartitionStats(std::span<const Index> lambda, std::size_t n_pop, SampleLog& log) {
  std::vector<std::uint32_t> sizes(n_pop, 0);
  for (Index v : lambda) ++sizes[v];
  std::vector<std::uint32_t> hist;
  std::uint32_t distinct = 0;
  for (auto s : sizes) {
    if (s == 0) continue;
    ++distinct;
    if (hist.size() < s) hist.resize(s, 0);
    ++hist[s - 1];
  }
  log.n_distinct.push_back(distinct);
  log.multiplicity.push_back(std::move(hist));
}

/// Draws an index with probability proportional to exp(log_w[i]). Entries equal
/// to -inf have zero probability. Returns the index and fills `probs` with the
/// normalized probabilities when non-null.
inline std::size_t drawFromLogWeights(std::span<const double> log_w, double u,
                                      std::vector<double>* probs = nullptr) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double w : log_w) mx = std::max(mx, w);
  if (!std::isfinite(mx)) throw InvariantError("all-zero conditional weights");
  double total = 0.0;
  thread_local std::vector<double> cum;
  cum.resize(log_w.size());
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    total += std::exp(log_w[i] - mx);
    cum[i] = total;
  }
  if (probs) {
    probs->resize(log_w.size());
    for (std::size_t i = 0; i < log_w.size(); ++i) (*probs)[i] = std::exp(log_w[i] - mx) / total;
  }
  const double target = u * total;
  auto it = std::upper_bound(cum.begin(), cum.end(), target);
  auto idx = static_cast<std::size_t>(it - cum.begin());
  if (idx >= log_w.size()) idx = log_w.size() - 1;
  while (!(log_w[idx] > -std::numeric_limits<double>::infinity())) --idx;  // u*total rounding at the top
  return idx;
}

}  // namespace detail

inline SampleLog SampleLog::fromSnapshots(std::size_t num_records,
                                          const std::vector<std::vector<Index>>& snaps) {
  SampleLog log;
  log.num_records = num_records;
  Index max_label = 0;
  for (const auto& s : snaps) {
    if (s.size() != num_records) throw Error("snapshot length differs from record count");
    for (Index v : s) max_label = std::max(max_label, v);
  }
  log.n_pop = static_cast<std::size_t>(max_label) + 1;
  log.hp.n_pop = log.n_pop;
  log.sweeps = snaps.size();
  for (const auto& s : snaps) {
    log.lambda.insert(log.lambda.end(), s.begin(), s.end());
    detail::recordPartitionStats(s, log.n_pop, log);
  }
  return log;
}

/// Per field, the latents holding each vocabulary value (ascending latent order).
struct LatentIndex {
  std::vector<std::vector<std::size_t>> offsets;  // per field, size |S|+1
  std::vector<std::vector<Index>> latents;        // per field, size n_pop

  LatentIndex(const LatentState& s, const Dataset& ds) {
    const std::size_t p = ds.numFields();
    offsets.resize(p);
    latents.resize(p);
    for (std::size_t f = 0; f < p; ++f) {
      auto& off = offsets[f];
      off.assign(ds.vocab[f].size() + 1, 0);
      for (std::size_t v = 0; v < s.n_pop; ++v) ++off[s.latentValue(v, f) + 1];
      for (std::size_t w = 0; w + 1 < off.size(); ++w) off[w + 1] += off[w];
      auto& lat = latents[f];
      lat.resize(s.n_pop);
      std::vector<std::size_t> cursor(off.begin(), off.end() - 1);
      for (std::size_t v = 0; v < s.n_pop; ++v) lat[cursor[s.latentValue(v, f)]++] = static_cast<Index>(v);
    }
  }

  std::span<const Index> holding(std::size_t f, Index w) const {
    return {latents[f].data() + offsets[f][w], offsets[f][w + 1] - offsets[f][w]};
  }
};

/// Initial state: each record its own latent when n_pop >= N, otherwise uniform
/// random latents. Attached latents copy their first record's values; empty
/// latents draw from the empirical prior; z flags mark disagreements; beta sits
/// at the prior mean.
inline LatentState initState(const Dataset& ds, const FieldTables& t, const Hyperparams& hp,
                             std::uint64_t seed) {
  hp.validate();
  const std::size_t n = ds.numRecords();
  const std::size_t p = ds.numFields();
  LatentState s;
  s.n_pop = hp.n_pop;
  s.num_fields = p;
  s.lambda.resize(n);
  if (hp.n_pop >= n) {
    for (std::size_t r = 0; r < n; ++r) s.lambda[r] = static_cast<Index>(r);
  } else {
    for (std::size_t r = 0; r < n; ++r) {
      StreamRng rng(seed, 0, Block::Init, r);
      s.lambda[r] = static_cast<Index>(std::min<std::size_t>(
          static_cast<std::size_t>(rng.uniform() * static_cast<double>(hp.n_pop)), hp.n_pop - 1));
    }
  }
  s.y.assign(hp.n_pop * p, 0);
  std::vector<char> attached(hp.n_pop, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const Index v = s.lambda[r];
    if (attached[v]) continue;
    attached[v] = 1;
    for (std::size_t f = 0; f < p; ++f) s.latentValue(v, f) = ds.value(r, f);
  }
  for (std::size_t v = 0; v < hp.n_pop; ++v) {
    if (attached[v]) continue;
    for (std::size_t f = 0; f < p; ++f) {
      StreamRng rng(seed, 1, Block::Init, v * p + f);
      s.latentValue(v, f) = t.alpha[f].sample(rng.uniform());
    }
  }
  s.z.resize(n * p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t f = 0; f < p; ++f)
      s.distorted(r, f) = ds.value(r, f) != s.latentValue(s.lambda[r], f) ? 1 : 0;
  s.beta.assign(ds.numLists() * p, hp.a / (hp.a + hp.b));
  return s;
}

class GibbsSampler {
 public:
  struct BetaParams {
    double shape_a;
    double shape_b;
  };

  GibbsSampler(const Dataset& ds, const FieldTables& tables, const Hyperparams& hp,
               std::uint64_t seed, LatentState initial)
      : ds_(&ds), t_(&tables), hp_(hp), seed_(seed), s_(std::move(initial)) {
    hp_.validate();
    if (s_.n_pop != hp_.n_pop || s_.num_fields != ds.numFields())
      throw Error("initial state does not match dataset/hyperparameters");
    buildDistortionCounts();
  }

  const LatentState& state() const { return s_; }
  void setState(LatentState s) { s_ = std::move(s); }
  std::uint64_t step() const { return step_; }

  /// One full sweep: beta, z, Y, lambda.
  void sweep() {
    sampleBeta();
    sampleZ();
    sampleY();
    sampleLambda();
  }

  BetaParams betaConditional(std::size_t list, std::size_t f) const {
    std::size_t zsum = 0;
    for (std::size_t r = 0; r < ds_->numRecords(); ++r)
      if (ds_->list_of[r] == list) zsum += s_.distorted(r, f);
    const auto n_i = static_cast<double>(ds_->list_sizes[list]);
    const auto z = static_cast<double>(zsum);
    return {z + hp_.a, n_i - z + hp_.b};
  }

  void sampleBeta() {
    const std::size_t p = ds_->numFields();
    buildDistortionCounts();
    for (std::size_t i = 0; i < ds_->numLists(); ++i) {
      const auto n_i = static_cast<double>(ds_->list_sizes[i]);
      for (std::size_t f = 0; f < p; ++f) {
        const auto z = static_cast<double>(zcount_[i * p + f]);
        StreamRng rng(seed_, step_, Block::Beta, i * p + f);
        s_.distortionProb(i, f) = rng.beta(z + hp_.a, n_i - z + hp_.b);
      }
    }
    ++step_;
  }

  /// P(z_rf = 1 | everything else).
  double zConditional(std::size_t r, std::size_t f) const {
    const Index x = ds_->value(r, f);
    const Index y = s_.latentValue(s_.lambda[r], f);
    if (x != y) return 1.0;
    const double b = s_.distortionProb(ds_->list_of[r], f);
    double q = b * t_->alpha[f].probs[x];
    if (t_->isString(f)) {
      const auto& st = t_->stringTable(f);
      q *= st.h[y] * st.kernelAt(x, y);
    }
    return q / (q + (1.0 - b));
  }

  void sampleZ() {
    const std::size_t p = ds_->numFields();
    for (std::size_t r = 0; r < ds_->numRecords(); ++r) {
      StreamRng rng(seed_, step_, Block::Z, r);
      for (std::size_t f = 0; f < p; ++f) {
        const double pr = zConditional(r, f);
        const double u = rng.uniform();
        s_.distorted(r, f) = (pr >= 1.0 || u < pr) ? 1 : 0;
      }
    }
    ++step_;
  }

  /// P(Y_vf = w | everything else) over the vocabulary of field f.
  std::vector<double> yConditional(std::size_t v, std::size_t f) const {
    std::vector<Index> members;
    for (std::size_t r = 0; r < ds_->numRecords(); ++r)
      if (s_.lambda[r] == v) members.push_back(static_cast<Index>(r));
    std::vector<double> logw;
    const auto forced = yLogWeights(members, f, logw);
    std::vector<double> probs(ds_->vocab[f].size(), 0.0);
    if (forced) {
      probs[*forced] = 1.0;
      return probs;
    }
    detail::drawFromLogWeights(logw, 0.0, &probs);
    return probs;
  }

  void sampleY() {
    const std::size_t p = ds_->numFields();
    const std::size_t n = ds_->numRecords();
    // Records grouped by latent (CSR).
    std::vector<std::size_t> off(s_.n_pop + 1, 0);
    for (std::size_t r = 0; r < n; ++r) ++off[s_.lambda[r] + 1];
    for (std::size_t v = 0; v < s_.n_pop; ++v) off[v + 1] += off[v];
    std::vector<Index> members(n);
    {
      std::vector<std::size_t> cur(off.begin(), off.end() - 1);
      for (std::size_t r = 0; r < n; ++r) members[cur[s_.lambda[r]]++] = static_cast<Index>(r);
    }
    std::vector<double> logw;
    for (std::size_t v = 0; v < s_.n_pop; ++v) {
      std::span<const Index> mem(members.data() + off[v], off[v + 1] - off[v]);
      for (std::size_t f = 0; f < p; ++f) {
        StreamRng rng(seed_, step_, Block::Y, v * p + f);
        const double u = rng.uniform();
        if (mem.empty() || !t_->isString(f)) {
          // Prior draw unless an undistorted record pins the value.
          const auto pinned = pinnedValue(mem, f);
          s_.latentValue(v, f) = pinned ? *pinned : t_->alpha[f].sample(u);
          continue;
        }
        const auto forced = yLogWeights(mem, f, logw);
        s_.latentValue(v, f) = forced ? *forced : static_cast<Index>(detail::drawFromLogWeights(logw, u));
      }
    }
    ++step_;
  }

  /// P(lambda_r = v | everything else) for every latent v.
  std::vector<double> lambdaConditional(std::size_t r) const {
    const std::size_t p = ds_->numFields();
    std::vector<double> logw(s_.n_pop);
    for (std::size_t v = 0; v < s_.n_pop; ++v) {
      double w = 0.0;
      for (std::size_t f = 0; f < p; ++f) {
        const Index x = ds_->value(r, f);
        const Index y = s_.latentValue(v, f);
        if (s_.distorted(r, f) == 0) {
          if (x != y) {
            w = -std::numeric_limits<double>::infinity();
            break;
          }
        } else if (t_->isString(f)) {
          const auto& st = t_->stringTable(f);
          w += st.log_h[y] - t_->c * st.distance(x, y);
        }
      }
      logw[v] = w;
    }
    std::vector<double> probs;
    detail::drawFromLogWeights(logw, 0.0, &probs);
    return probs;
  }

  /// Latents with positive conditional probability for record r, ascending,
  /// with their probabilities. This is the form sampleLambda draws from.
  std::vector<std::pair<Index, double>> lambdaCandidates(std::size_t r) const {
    LatentIndex index(s_, *ds_);
    std::vector<Index> cand;
    std::vector<double> logw;
    collectLambdaCandidates(r, index, cand, logw);
    std::vector<double> probs;
    detail::drawFromLogWeights(logw, 0.0, &probs);
    std::vector<std::pair<Index, double>> out;
    for (std::size_t k = 0; k < cand.size(); ++k) out.emplace_back(cand[k], probs[k]);
    return out;
  }

  void sampleLambda() {
    LatentIndex index(s_, *ds_);
    std::vector<Index> cand;
    std::vector<double> logw;
    for (std::size_t r = 0; r < ds_->numRecords(); ++r) {
      collectLambdaCandidates(r, index, cand, logw);
      StreamRng rng(seed_, step_, Block::Lambda, r);
      s_.lambda[r] = cand[detail::drawFromLogWeights(logw, rng.uniform())];
    }
    ++step_;
  }

 private:
  void buildDistortionCounts() {
    const std::size_t p = ds_->numFields();
    zcount_.assign(ds_->numLists() * p, 0);
    for (std::size_t r = 0; r < ds_->numRecords(); ++r)
      for (std::size_t f = 0; f < p; ++f) zcount_[ds_->list_of[r] * p + f] += s_.distorted(r, f);
  }

  /// Value fixed by an undistorted attached record, if any.
  std::optional<Index> pinnedValue(std::span<const Index> members, std::size_t f) const {
    std::optional<Index> pinned;
    for (Index r : members) {
      if (s_.distorted(r, f) != 0) continue;
      const Index x = ds_->value(r, f);
      if (pinned && *pinned != x)
        throw InvariantError("undistorted records attached to one latent disagree on field " +
                             std::to_string(f));
      pinned = x;
    }
    return pinned;
  }

  /// Fills log phi(w) for latent members on field f, or returns the single
  /// value with positive weight when an undistorted record pins it.
  std::optional<Index> yLogWeights(std::span<const Index> members, std::size_t f,
                                   std::vector<double>& logw) const {
    if (auto pinned = pinnedValue(members, f)) return pinned;
    const auto& alpha = t_->alpha[f];
    logw.assign(alpha.log_probs.begin(), alpha.log_probs.end());
    if (!t_->isString(f)) return std::nullopt;
    const auto& st = t_->stringTable(f);
    for (Index r : members) {
      const double* row = st.logLinkRow(ds_->value(r, f));
      for (std::size_t w = 0; w < st.size; ++w) logw[w] += row[w];
    }
    return std::nullopt;
  }

  void collectLambdaCandidates(std::size_t r, const LatentIndex& index, std::vector<Index>& cand,
                               std::vector<double>& logw) const {
    const std::size_t p = ds_->numFields();
    cand.clear();
    logw.clear();
    // Narrowest undistorted field restricts the support.
    std::span<const Index> pool;
    bool restricted = false;
    for (std::size_t f = 0; f < p; ++f) {
      if (s_.distorted(r, f) != 0) continue;
      auto h = index.holding(f, ds_->value(r, f));
      if (!restricted || h.size() < pool.size()) pool = h;
      restricted = true;
    }
    auto consider = [&](Index v) {
      double w = 0.0;
      for (std::size_t f = 0; f < p; ++f) {
        const Index x = ds_->value(r, f);
        const Index y = s_.latentValue(v, f);
        if (s_.distorted(r, f) == 0) {
          if (x != y) return;
        } else if (t_->isString(f)) {
          w += t_->stringTable(f).logLinkRow(x)[y];
        }
      }
      cand.push_back(v);
      logw.push_back(w);
    };
    if (restricted) {
      for (Index v : pool) consider(v);
    } else {
      for (std::size_t v = 0; v < s_.n_pop; ++v) consider(static_cast<Index>(v));
    }
    if (cand.empty()) throw InvariantError("record " + std::to_string(r) + " has no admissible latent");
  }

  const Dataset* ds_;
  const FieldTables* t_;
  Hyperparams hp_;
  std::uint64_t seed_;
  LatentState s_;
  std::uint64_t step_ = 0;
  std::vector<std::size_t> zcount_;
};

/// Appends the diagnostics (and snapshot, when due) for the current state.
inline void recordSweep(const LatentState& s, const SamplerConfig& cfg, std::size_t sweep, SampleLog& log) {
  detail::recordPartitionStats(s.lambda, s.n_pop, log);
  if (cfg.record_lambda && (sweep + 1) % cfg.thin == 0)
    log.lambda.insert(log.lambda.end(), s.lambda.begin(), s.lambda.end());
  if (cfg.record_beta) log.beta_trace.insert(log.beta_trace.end(), s.beta.begin(), s.beta.end());
}

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

inline SampleLog runSampler(const Dataset& ds, const FieldTables& tables, const Hyperparams& hp,
                            const SamplerConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  hp.validate();
  SampleLog log;
  log.num_records = ds.numRecords();
  log.n_pop = hp.n_pop;
  log.num_lists = ds.numLists();
  log.num_fields = ds.numFields();
  log.sweeps = cfg.sweeps;
  log.thin = cfg.thin;
  log.seed = cfg.seed;
  log.hp = hp;
  if (cfg.record_lambda) log.lambda.reserve((cfg.sweeps / cfg.thin) * ds.numRecords());
  log.n_distinct.reserve(cfg.sweeps);
  log.multiplicity.reserve(cfg.sweeps);

  GibbsSampler sampler(ds, tables, hp, cfg.seed, initState(ds, tables, hp, cfg.seed));
  for (std::size_t it = 0; it < cfg.sweeps; ++it) {
    sampler.sweep();
    recordSweep(sampler.state(), cfg, it, log);
    if (progress) progress(it + 1, cfg.sweeps);
  }
  return log;
}

inline SampleLog runSampler(const Dataset& ds, const Hyperparams& hp, const SamplerConfig& cfg) {
  return runSampler(ds, buildFieldTables(ds, hp), hp, cfg);
}

}  // namespace ebrl
