#pragma once

#include <cmath>
#include <limits>

#include "ebrl/model.hpp"
#include "ebrl/strdist.hpp"

namespace ebrl {

/// Log of the unnormalized joint posterior of (lambda, Y, z, beta) given the
/// records, in its simplified product form. Returns -inf when some undistorted
/// field disagrees with its latent value.
inline double logJointPosterior(const LatentState& s, const Dataset& ds, const FieldTables& t,
                                const Hyperparams& hp) {
  const std::size_t n = ds.numRecords();
  const std::size_t p = ds.numFields();
  if (s.num_fields != p || s.lambda.size() != n || s.z.size() != n * p ||
      s.y.size() != s.n_pop * p || s.beta.size() != ds.numLists() * p || t.alpha.size() != p)
    throw Error("logJointPosterior: state dimensions do not match dataset");

  double total = 0.0;
  std::vector<std::size_t> distorted(ds.numLists() * p, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const Index v = s.lambda[r];
    if (v >= s.n_pop) throw Error("logJointPosterior: lambda out of range");
    for (std::size_t f = 0; f < p; ++f) {
      const Index x = ds.value(r, f);
      const Index y = s.latentValue(v, f);
      if (s.distorted(r, f) == 0) {
        if (x != y) return -std::numeric_limits<double>::infinity();
        continue;
      }
      ++distorted[ds.list_of[r] * p + f];
      total += t.alpha[f].log_probs[x];
      if (t.isString(f)) {
        const auto& st = t.stringTable(f);
        total += st.log_h[y] - t.c * st.distance(x, y);
      }
    }
  }
  for (std::size_t v = 0; v < s.n_pop; ++v)
    for (std::size_t f = 0; f < p; ++f) total += t.alpha[f].log_probs[s.latentValue(v, f)];
  for (std::size_t i = 0; i < ds.numLists(); ++i) {
    const auto ni = static_cast<double>(ds.list_sizes[i]);
    for (std::size_t f = 0; f < p; ++f) {
      const auto zsum = static_cast<double>(distorted[i * p + f]);
      const double b = s.distortionProb(i, f);
      total += (zsum + hp.a - 1.0) * std::log(b) + (ni - zsum + hp.b - 1.0) * std::log1p(-b);
    }
  }
  return total;
}

}  // namespace ebrl
