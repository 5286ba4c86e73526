#pragma once

// Point estimates and match probabilities from posterior linkage samples.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ebrl/gibbs.hpp"
#include "ebrl/model.hpp"

namespace ebrl {

using RecordSet = std::vector<Index>;  // sorted ascending

/// Disjoint clusters of record indices covering 0..n_records-1. Clusters are
/// kept sorted, and ordered by their smallest member.
struct LinkagePartition {
  std::size_t n_records = 0;
  std::vector<RecordSet> clusters;

  /// Groups records sharing a label. Labels are arbitrary values.
  template <class Label>
  static LinkagePartition fromLabels(std::span<const Label> labels) {
    std::map<Label, RecordSet> groups;
    for (std::size_t r = 0; r < labels.size(); ++r) groups[labels[r]].push_back(static_cast<Index>(r));
    LinkagePartition p;
    p.n_records = labels.size();
    for (auto& [_, g] : groups) p.clusters.push_back(std::move(g));
    p.canonicalize();
    return p;
  }
  template <class Label>
  static LinkagePartition fromLabels(const std::vector<Label>& labels) {
    return fromLabels(std::span<const Label>(labels));
  }

  /// Cluster number of every record, in canonical cluster order.
  std::vector<Index> labels() const {
    std::vector<Index> out(n_records, 0);
    for (std::size_t c = 0; c < clusters.size(); ++c)
      for (Index r : clusters[c]) out[r] = static_cast<Index>(c);
    return out;
  }

  void canonicalize() {
    for (auto& c : clusters) std::sort(c.begin(), c.end());
    std::erase_if(clusters, [](const RecordSet& c) { return c.empty(); });
    std::sort(clusters.begin(), clusters.end());
  }

  /// Description of the first violation, or nullopt for a valid partition.
  std::optional<std::string> validate() const {
    std::vector<char> seen(n_records, 0);
    for (const auto& c : clusters) {
      if (c.empty()) return std::string("empty cluster");
      for (Index r : c) {
        if (r >= n_records) return "record " + std::to_string(r) + " out of range";
        if (seen[r]) return "record " + std::to_string(r) + " in more than one cluster";
        seen[r] = 1;
      }
    }
    for (std::size_t r = 0; r < n_records; ++r)
      if (!seen[r]) return "record " + std::to_string(r) + " not covered";
    return std::nullopt;
  }

  std::size_t numLinkedPairs() const {
    std::size_t n = 0;
    for (const auto& c : clusters) n += c.size() * (c.size() - 1) / 2;
    return n;
  }

  bool operator==(const LinkagePartition&) const = default;
};

using RecordPair = std::pair<Index, Index>;  // first < second

namespace detail {

inline void requireSnapshots(const SampleLog& log) {
  if (log.numSnapshots() == 0) throw Error("sample log holds no linkage snapshots");
}

/// Per snapshot, the records attached to each latent (only non-empty groups).
template <class Fn>
void forEachGroup(std::span<const Index> snap, std::size_t n_pop, Fn&& fn) {
  std::vector<std::vector<Index>> by_latent(n_pop);
  for (std::size_t r = 0; r < snap.size(); ++r) by_latent[snap[r]].push_back(static_cast<Index>(r));
  for (auto& g : by_latent)
    if (!g.empty()) fn(g);
}

struct RecordSetHash {
  std::size_t operator()(const RecordSet& s) const {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (Index r : s) h = splitmix64(h ^ r);
    return static_cast<std::size_t>(h);
  }
};

inline std::size_t labelSpace(const SampleLog& log) {
  std::size_t n_pop = log.n_pop;
  for (Index v : log.lambda) n_pop = std::max<std::size_t>(n_pop, v + 1);
  return n_pop;
}

// MMS occurrence counts: for each record, set id -> number of snapshots.
struct MMSCounts {
  std::vector<RecordSet> sets;
  std::vector<std::unordered_map<std::size_t, std::size_t>> per_record;
  std::size_t snapshots = 0;
};

inline MMSCounts countMMS(const SampleLog& log) {
  requireSnapshots(log);
  MMSCounts out;
  out.snapshots = log.numSnapshots();
  out.per_record.resize(log.num_records);
  std::unordered_map<RecordSet, std::size_t, RecordSetHash> ids;
  const std::size_t n_pop = labelSpace(log);
  for (std::size_t s = 0; s < out.snapshots; ++s) {
    forEachGroup(log.snapshot(s), n_pop, [&](const RecordSet& g) {
      auto [it, fresh] = ids.try_emplace(g, out.sets.size());
      if (fresh) out.sets.push_back(g);
      for (Index r : g) ++out.per_record[r][it->second];
    });
  }
  return out;
}

// Higher count wins; then smaller set; then lexicographically smaller.
inline std::size_t pickMPMMS(const MMSCounts& mc, std::size_t record) {
  std::size_t best = 0, best_count = 0;
  bool have = false;
  for (const auto& [id, count] : mc.per_record[record]) {
    if (have) {
      const auto& a = mc.sets[id];
      const auto& b = mc.sets[best];
      if (count < best_count) continue;
      if (count == best_count && (a.size() > b.size() || (a.size() == b.size() && !(a < b)))) continue;
    }
    best = id;
    best_count = count;
    have = true;
  }
  return best;
}

}  // namespace detail

/// Fraction of snapshots in which each pair shares a latent; zero pairs omitted.
inline std::map<RecordPair, double> pairwiseMatchProbs(const SampleLog& log) {
  detail::requireSnapshots(log);
  std::map<RecordPair, std::size_t> counts;
  const std::size_t n_pop = detail::labelSpace(log);
  for (std::size_t s = 0; s < log.numSnapshots(); ++s)
    detail::forEachGroup(log.snapshot(s), n_pop, [&](const RecordSet& g) {
      for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = a + 1; b < g.size(); ++b) ++counts[{g[a], g[b]}];
    });
  std::map<RecordPair, double> out;
  const auto total = static_cast<double>(log.numSnapshots());
  for (const auto& [pair, c] : counts) out[pair] = static_cast<double>(c) / total;
  return out;
}

/// Empirical distribution of the maximal matching set of one record.
inline std::map<RecordSet, double> recordMMSDistribution(const SampleLog& log, std::size_t record) {
  detail::requireSnapshots(log);
  if (record >= log.num_records) throw Error("record index out of range");
  std::map<RecordSet, std::size_t> counts;
  for (std::size_t s = 0; s < log.numSnapshots(); ++s) {
    const auto snap = log.snapshot(s);
    RecordSet mms;
    for (std::size_t r = 0; r < snap.size(); ++r)
      if (snap[r] == snap[record]) mms.push_back(static_cast<Index>(r));
    ++counts[mms];
  }
  std::map<RecordSet, double> out;
  const auto total = static_cast<double>(log.numSnapshots());
  for (const auto& [set, c] : counts) out[set] = static_cast<double>(c) / total;
  return out;
}

struct MPMMS {
  RecordSet set;
  double probability = 0.0;
};

inline MPMMS mpmms(const SampleLog& log, std::size_t record) {
  if (record >= log.num_records) throw Error("record index out of range");
  const auto mc = detail::countMMS(log);
  const std::size_t id = detail::pickMPMMS(mc, record);
  return {mc.sets[id], static_cast<double>(mc.per_record[record].at(id)) / static_cast<double>(mc.snapshots)};
}

/// Clusters are the sets that are the MPMMS of every one of their members;
/// remaining records are singletons.
inline LinkagePartition sharedMPMMSLinkage(const SampleLog& log) {
  const auto mc = detail::countMMS(log);
  const std::size_t n = log.num_records;
  std::vector<std::size_t> choice(n);
  for (std::size_t r = 0; r < n; ++r) choice[r] = detail::pickMPMMS(mc, r);

  LinkagePartition p;
  p.n_records = n;
  std::vector<char> assigned(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    if (assigned[r]) continue;
    const auto& set = mc.sets[choice[r]];
    const bool shared = std::all_of(set.begin(), set.end(), [&](Index m) { return choice[m] == choice[r]; });
    if (!shared) {
      assigned[r] = 1;
      p.clusters.push_back({static_cast<Index>(r)});
      continue;
    }
    for (Index m : set) {
      if (assigned[m]) throw InvariantError("record " + std::to_string(m) + " belongs to two shared MPMMS");
      assigned[m] = 1;
    }
    p.clusters.push_back(set);
  }
  p.canonicalize();
  return p;
}

/// Pairs whose match probability exceeds the threshold. Not transitive in general.
inline std::vector<RecordPair> thresholdLinks(const std::map<RecordPair, double>& probs, double threshold = 0.5) {
  std::vector<RecordPair> out;
  for (const auto& [pair, pr] : probs)
    if (pr > threshold) out.push_back(pair);
  return out;
}

}  // namespace ebrl
