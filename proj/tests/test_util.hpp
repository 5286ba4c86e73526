#pragma once

#include <string>
#include <vector>

#include "ebrl/model.hpp"
#include "ebrl/rng.hpp"

namespace ebrl::testing {

/// Dataset from literal rows. `kinds` holds one 's' or 'c' per field; `lists`
/// gives each row's list id (all "1" when empty).
inline Dataset makeDataset(const std::vector<std::vector<std::string>>& rows, const std::string& kinds,
                           const std::vector<std::string>& lists = {},
                           const std::vector<std::string>& truth = {}) {
  RawTable t;
  Schema s;
  for (std::size_t f = 0; f < kinds.size(); ++f) {
    t.header.push_back("f" + std::to_string(f));
    s.fields.push_back({"f" + std::to_string(f), kinds[f] == 's' ? FieldKind::String : FieldKind::Categorical, f});
  }
  t.header.push_back("list");
  s.list_column = kinds.size();
  if (!truth.empty()) {
    t.header.push_back("id");
    s.truth_column = kinds.size() + 1;
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto row = rows[r];
    row.push_back(lists.empty() ? "1" : lists[r]);
    if (!truth.empty()) row.push_back(truth[r]);
    t.rows.push_back(row);
  }
  return internDataset(t, s);
}

/// Uniformly random state that satisfies the support constraint: z is set to
/// one wherever the record disagrees with its latent, and randomly elsewhere.
inline LatentState randomValidState(const Dataset& ds, std::size_t n_pop, StreamRng& rng) {
  const std::size_t p = ds.numFields();
  LatentState s;
  s.n_pop = n_pop;
  s.num_fields = p;
  auto pick = [&](std::size_t n) { return static_cast<Index>(rng.uniform() * static_cast<double>(n)); };
  for (std::size_t r = 0; r < ds.numRecords(); ++r) s.lambda.push_back(pick(n_pop));
  for (std::size_t v = 0; v < n_pop; ++v)
    for (std::size_t f = 0; f < p; ++f) s.y.push_back(pick(ds.vocab[f].size()));
  s.z.resize(ds.numRecords() * p);
  for (std::size_t r = 0; r < ds.numRecords(); ++r)
    for (std::size_t f = 0; f < p; ++f)
      s.distorted(r, f) = ds.value(r, f) != s.latentValue(s.lambda[r], f) ? 1 : (rng.uniform() < 0.5 ? 1 : 0);
  for (std::size_t k = 0; k < ds.numLists() * p; ++k) s.beta.push_back(0.02 + 0.96 * rng.uniform());
  return s;
}

}  // namespace ebrl::testing
