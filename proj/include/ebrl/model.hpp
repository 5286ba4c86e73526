#pragma once

// Domain types of the latent-entity linkage model: schema, interned records,
// empirical priors, hyperparameters and one Gibbs state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ebrl {

using Index = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed input tables and schemas.
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Raised when sampler state breaks an invariant that a valid chain cannot break.
class InvariantError : public Error {
 public:
  using Error::Error;
};

enum class FieldKind { String, Categorical };

inline const char* toString(FieldKind k) {
  return k == FieldKind::String ? "string" : "categorical";
}

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::Categorical;
  std::size_t column = 0;  // source column in the raw table
};

/// Field declarations plus the bookkeeping columns of a raw table.
struct Schema {
  std::vector<FieldSpec> fields;
  std::size_t list_column = 0;
  std::optional<std::size_t> truth_column;
};

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Interned records. Field values are indices into the per-field vocabulary.
/// String fields always come first (indices 0..num_string-1).
struct Dataset {
  std::vector<FieldSpec> fields;
  std::vector<std::vector<std::string>> vocab;
  std::vector<Index> values;  // row-major, numRecords() x numFields()
  std::vector<Index> list_of;
  std::vector<std::string> list_names;
  std::vector<std::size_t> list_sizes;
  std::vector<std::string> truth;  // empty when no truth column was declared

  std::size_t numRecords() const { return list_of.size(); }
  std::size_t numFields() const { return fields.size(); }
  std::size_t numLists() const { return list_sizes.size(); }
  std::size_t numStringFields() const {
    return static_cast<std::size_t>(std::count_if(
        fields.begin(), fields.end(), [](const FieldSpec& f) { return f.kind == FieldKind::String; }));
  }
  bool isString(std::size_t f) const { return fields[f].kind == FieldKind::String; }
  bool hasTruth() const { return !truth.empty(); }

  Index value(std::size_t r, std::size_t f) const { return values[r * numFields() + f]; }
  std::span<const Index> record(std::size_t r) const {
    return {values.data() + r * numFields(), numFields()};
  }
  const std::string& text(std::size_t r, std::size_t f) const { return vocab[f][value(r, f)]; }

  /// Position j of record r within its own list.
  std::size_t positionInList(std::size_t r) const {
    return static_cast<std::size_t>(
        std::count(list_of.begin(), list_of.begin() + static_cast<std::ptrdiff_t>(r), list_of[r]));
  }
};

/// Builds a Dataset from raw rows. Vocabularies are interned in first-occurrence
/// order; list ids likewise.
inline Dataset internDataset(const RawTable& table, const Schema& schema) {
  if (table.rows.empty()) throw IngestError("empty table: no records");
  if (schema.fields.empty()) throw IngestError("schema declares no fields");

  Dataset ds;
  // Strings first, preserving declaration order within each kind.
  for (const auto& f : schema.fields)
    if (f.kind == FieldKind::String) ds.fields.push_back(f);
  for (const auto& f : schema.fields)
    if (f.kind == FieldKind::Categorical) ds.fields.push_back(f);

  const std::size_t p = ds.fields.size();
  ds.vocab.assign(p, {});
  std::vector<std::unordered_map<std::string, Index>> lookup(p);
  std::unordered_map<std::string, Index> list_lookup;

  std::size_t needed = schema.list_column;
  for (const auto& f : ds.fields) needed = std::max(needed, f.column);
  if (schema.truth_column) needed = std::max(needed, *schema.truth_column);

  ds.values.reserve(table.rows.size() * p);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() <= needed) {
      std::ostringstream msg;
      msg << "row " << r + 1 << " has " << row.size() << " columns; column " << needed + 1
          << " is required";
      throw IngestError(msg.str());
    }
    const std::string& list_id = row[schema.list_column];
    if (list_id.empty())
      throw IngestError("row " + std::to_string(r + 1) + ": empty list id");
    auto [lit, lnew] = list_lookup.try_emplace(list_id, static_cast<Index>(ds.list_names.size()));
    if (lnew) {
      ds.list_names.push_back(list_id);
      ds.list_sizes.push_back(0);
    }
    ds.list_of.push_back(lit->second);
    ++ds.list_sizes[lit->second];

    for (std::size_t f = 0; f < p; ++f) {
      const std::string& v = row[ds.fields[f].column];
      if (v.empty())
        throw IngestError("row " + std::to_string(r + 1) + ": empty value in field '" +
                          ds.fields[f].name + "'");
      auto [it, fresh] = lookup[f].try_emplace(v, static_cast<Index>(ds.vocab[f].size()));
      if (fresh) ds.vocab[f].push_back(v);
      ds.values.push_back(it->second);
    }
    if (schema.truth_column) ds.truth.push_back(row[*schema.truth_column]);
  }
  return ds;
}

/// G_l: empirical frequency of each vocabulary value over all records.
struct EmpiricalDist {
  std::vector<double> probs;
  std::vector<double> log_probs;
  std::vector<double> cdf;

  std::size_t size() const { return probs.size(); }

  /// Inverse-CDF draw for u in [0,1).
  Index sample(double u) const {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
    auto idx = static_cast<std::size_t>(it - cdf.begin());
    return static_cast<Index>(std::min(idx, cdf.size() - 1));
  }
};

inline EmpiricalDist buildEmpiricalDist(const Dataset& ds, std::size_t field) {
  if (field >= ds.numFields()) throw Error("field index out of range");
  std::vector<std::size_t> counts(ds.vocab[field].size(), 0);
  for (std::size_t r = 0; r < ds.numRecords(); ++r) ++counts[ds.value(r, field)];
  EmpiricalDist d;
  const auto n = static_cast<double>(ds.numRecords());
  double acc = 0.0;
  for (auto c : counts) {
    const double pr = static_cast<double>(c) / n;
    d.probs.push_back(pr);
    d.log_probs.push_back(std::log(pr));
    acc += pr;
    d.cdf.push_back(acc);
  }
  return d;
}

enum class Distance { Edit, JaroWinkler };

inline const char* toString(Distance d) { return d == Distance::Edit ? "edit" : "jw"; }

inline Distance parseDistance(const std::string& s) {
  if (s == "edit") return Distance::Edit;
  if (s == "jw" || s == "jaro-winkler") return Distance::JaroWinkler;
  throw Error("unknown distance '" + s + "' (expected edit or jw)");
}

struct Hyperparams {
  double a = 1.0;
  double b = 99.0;
  double c = 1.0;
  std::size_t n_pop = 1;
  Distance distance = Distance::Edit;

  void validate() const {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error("hyperparameter a must be > 0");
    if (!(b > 0.0) || !std::isfinite(b)) throw Error("hyperparameter b must be > 0");
    if (!(c > 0.0) || !std::isfinite(c)) throw Error("hyperparameter c must be > 0");
    if (n_pop < 1) throw Error("n_pop must be a positive integer");
  }

  bool operator==(const Hyperparams&) const = default;
};

/// One state of the chain: linkage lambda, latent values y, distortion flags z
/// and distortion probabilities beta.
struct LatentState {
  std::size_t n_pop = 0;
  std::size_t num_fields = 0;
  std::vector<Index> lambda;        // per record
  std::vector<Index> y;             // n_pop x num_fields
  std::vector<std::uint8_t> z;      // records x num_fields
  std::vector<double> beta;         // lists x num_fields

  Index& latentValue(std::size_t v, std::size_t f) { return y[v * num_fields + f]; }
  Index latentValue(std::size_t v, std::size_t f) const { return y[v * num_fields + f]; }
  std::uint8_t& distorted(std::size_t r, std::size_t f) { return z[r * num_fields + f]; }
  std::uint8_t distorted(std::size_t r, std::size_t f) const { return z[r * num_fields + f]; }
  double& distortionProb(std::size_t i, std::size_t f) { return beta[i * num_fields + f]; }
  double distortionProb(std::size_t i, std::size_t f) const { return beta[i * num_fields + f]; }

  bool operator==(const LatentState&) const = default;
};

/// Returns a description of the first invariant violation, or nullopt when the
/// state is valid for this dataset.
inline std::optional<std::string> validateState(const LatentState& s, const Dataset& ds,
                                                const Hyperparams& hp) {
  const std::size_t n = ds.numRecords();
  const std::size_t p = ds.numFields();
  std::ostringstream msg;
  if (s.n_pop != hp.n_pop) {
    msg << "state n_pop " << s.n_pop << " differs from hyperparameter n_pop " << hp.n_pop;
    return msg.str();
  }
  if (s.num_fields != p || s.lambda.size() != n || s.y.size() != s.n_pop * p ||
      s.z.size() != n * p || s.beta.size() != ds.numLists() * p)
    return std::string("state dimensions do not match dataset");
  for (std::size_t r = 0; r < n; ++r) {
    if (s.lambda[r] >= s.n_pop) {
      msg << "record " << r << " (i=" << ds.list_of[r] << ", j=" << ds.positionInList(r)
          << "): lambda " << s.lambda[r] + 1 << " outside 1.." << s.n_pop;
      return msg.str();
    }
  }
  for (std::size_t v = 0; v < s.n_pop; ++v)
    for (std::size_t f = 0; f < p; ++f)
      if (s.latentValue(v, f) >= ds.vocab[f].size()) {
        msg << "latent " << v << " field " << f << ": value index out of vocabulary";
        return msg.str();
      }
  for (std::size_t i = 0; i < ds.numLists(); ++i)
    for (std::size_t f = 0; f < p; ++f) {
      const double b = s.distortionProb(i, f);
      if (!(b > 0.0 && b < 1.0)) {
        msg << "beta(" << i << "," << f << ") = " << b << " outside (0,1)";
        return msg.str();
      }
    }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t f = 0; f < p; ++f) {
      const auto zf = s.distorted(r, f);
      if (zf > 1) {
        msg << "record " << r << " field " << f << ": z not binary";
        return msg.str();
      }
      if (zf == 0 && ds.value(r, f) != s.latentValue(s.lambda[r], f)) {
        msg << "support violation at (i=" << ds.list_of[r] << ", j=" << ds.positionInList(r)
            << ", l=" << f << "): z=0 but record " << r << " differs from latent " << s.lambda[r];
        return msg.str();
      }
    }
  return std::nullopt;
}

}  // namespace ebrl
