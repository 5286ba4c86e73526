#pragma once

// Pairwise error rates, deterministic baselines, posterior summaries and
// convergence diagnostics.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "ebrl/gibbs.hpp"
#include "ebrl/linkage.hpp"
#include "ebrl/model.hpp"

namespace ebrl {

/// Classification of all unordered record pairs.
struct ConfusionCounts {
  std::uint64_t cl = 0;   // linked in both
  std::uint64_t fn = 0;   // linked in truth only
  std::uint64_t fp = 0;   // linked in estimate only
  std::uint64_t cnl = 0;  // linked in neither

  std::uint64_t total() const { return cl + fn + fp + cnl; }
  bool operator==(const ConfusionCounts&) const = default;
};

inline ConfusionCounts confusionCounts(const LinkagePartition& estimate, const LinkagePartition& truth) {
  if (estimate.n_records != truth.n_records)
    throw Error("partitions cover different record counts (" + std::to_string(estimate.n_records) +
                " vs " + std::to_string(truth.n_records) + ")");
  if (auto err = estimate.validate()) throw Error("estimate: " + *err);
  if (auto err = truth.validate()) throw Error("truth: " + *err);
  auto pairs = [](std::uint64_t n) { return n * (n - 1) / 2; };
  const auto truth_label = truth.labels();
  std::uint64_t both = 0;
  for (const auto& c : estimate.clusters) {
    std::unordered_map<Index, std::uint64_t> overlap;
    for (Index r : c) ++overlap[truth_label[r]];
    for (const auto& [_, k] : overlap) both += pairs(k);
  }
  ConfusionCounts out;
  out.cl = both;
  out.fn = truth.numLinkedPairs() - both;
  out.fp = estimate.numLinkedPairs() - both;
  out.cnl = pairs(estimate.n_records) - out.cl - out.fn - out.fp;
  return out;
}

/// FN / (CL + FN); 0 when there are no true links.
inline double fnr(const ConfusionCounts& c) {
  const auto d = c.cl + c.fn;
  return d == 0 ? 0.0 : static_cast<double>(c.fn) / static_cast<double>(d);
}

/// FP / (CL + FP); 0 when there are no estimated links.
inline double fdr(const ConfusionCounts& c) {
  const auto d = c.cl + c.fp;
  return d == 0 ? 0.0 : static_cast<double>(c.fp) / static_cast<double>(d);
}

inline LinkagePartition truthPartition(const Dataset& ds) {
  if (!ds.hasTruth()) throw Error("dataset has no truth column");
  return LinkagePartition::fromLabels(ds.truth);
}

/// Links records iff every field agrees.
inline LinkagePartition exactMatchBaseline(const Dataset& ds) {
  std::vector<std::vector<Index>> keys(ds.numRecords());
  for (std::size_t r = 0; r < ds.numRecords(); ++r) {
    const auto rec = ds.record(r);
    keys[r].assign(rec.begin(), rec.end());
  }
  return LinkagePartition::fromLabels(keys);
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Transitive closure of "disagree on at most one field".
inline LinkagePartition nearTwinBaseline(const Dataset& ds) {
  const std::size_t n = ds.numRecords();
  const std::size_t p = ds.numFields();
  UnionFind uf(n);
  for (std::size_t skip = 0; skip < p; ++skip) {
    std::map<std::vector<Index>, std::size_t> first;
    std::vector<Index> key;
    for (std::size_t r = 0; r < n; ++r) {
      key.clear();
      for (std::size_t f = 0; f < p; ++f)
        if (f != skip) key.push_back(ds.value(r, f));
      auto [it, fresh] = first.try_emplace(key, r);
      if (!fresh) uf.unite(it->second, r);
    }
  }
  std::vector<std::size_t> roots(n);
  for (std::size_t r = 0; r < n; ++r) roots[r] = uf.find(r);
  return LinkagePartition::fromLabels(roots);
}

struct NDistinctSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 with fewer than two sweeps
  std::map<std::uint32_t, std::size_t> histogram;
};

inline NDistinctSummary nDistinctSummary(const SampleLog& log) {
  if (log.n_distinct.empty()) throw Error("sample log holds no sweeps");
  NDistinctSummary s;
  double sum = 0.0;
  for (auto v : log.n_distinct) {
    sum += v;
    ++s.histogram[v];
  }
  const auto n = static_cast<double>(log.n_distinct.size());
  s.mean = sum / n;
  if (log.n_distinct.size() > 1) {
    double ss = 0.0;
    for (auto v : log.n_distinct) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

/// Per sweep, the number of latents with exactly m attached records.
inline std::vector<std::uint32_t> multiplicityTrace(const SampleLog& log, std::size_t m) {
  if (m < 1) throw Error("multiplicity must be >= 1");
  std::vector<std::uint32_t> out;
  out.reserve(log.multiplicity.size());
  for (std::size_t s = 0; s < log.multiplicity.size(); ++s) out.push_back(log.multiplicityCount(s, m));
  return out;
}

struct GewekeResult {
  double z = 0.0;
  bool zero_variance = false;
};

inline constexpr std::size_t kGewekeBatches = 20;

namespace detail {

struct WindowStats {
  double mean;
  double var_of_mean;
};

// Window mean and its batch-means variance.
inline WindowStats batchMeans(std::span<const double> x) {
  const std::size_t batch = x.size() / kGewekeBatches;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::vector<double> bm(kGewekeBatches);
  for (std::size_t b = 0; b < kGewekeBatches; ++b) {
    const auto first = x.begin() + static_cast<std::ptrdiff_t>(b * batch);
    bm[b] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(batch), 0.0) / static_cast<double>(batch);
  }
  const double bmean = std::accumulate(bm.begin(), bm.end(), 0.0) / static_cast<double>(kGewekeBatches);
  double ss = 0.0;
  for (double v : bm) ss += (v - bmean) * (v - bmean);
  const double var_batch = ss / static_cast<double>(kGewekeBatches - 1);
  return {mean, var_batch / static_cast<double>(kGewekeBatches)};
}

}  // namespace detail

/// Geweke z-score comparing the first frac_a and last frac_b of the series.
inline GewekeResult gewekeZ(std::span<const double> series, double frac_a = 0.1, double frac_b = 0.5) {
  if (series.size() < 100) throw Error("Geweke diagnostic needs at least 100 values");
  if (!(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0))
    throw Error("Geweke window fractions must be positive and sum to at most 1");
  const auto n = series.size();
  const auto na = static_cast<std::size_t>(std::floor(frac_a * static_cast<double>(n)));
  const auto nb = static_cast<std::size_t>(std::floor(frac_b * static_cast<double>(n)));
  if (na < kGewekeBatches || nb < kGewekeBatches) throw Error("Geweke windows too short for batch means");
  const auto a = detail::batchMeans(series.subspan(0, na));
  const auto b = detail::batchMeans(series.subspan(n - nb, nb));
  const double var = a.var_of_mean + b.var_of_mean;
  GewekeResult r;
  if (!(var > 0.0)) {
    r.zero_variance = true;
    r.z = a.mean == b.mean ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), a.mean - b.mean);
    return r;
  }
  r.z = (a.mean - b.mean) / std::sqrt(var);
  return r;
}

template <class T>
GewekeResult gewekeZ(const std::vector<T>& series, double frac_a = 0.1, double frac_b = 0.5) {
  std::vector<double> x(series.begin(), series.end());
  return gewekeZ(std::span<const double>(x), frac_a, frac_b);
}

}  // namespace ebrl
