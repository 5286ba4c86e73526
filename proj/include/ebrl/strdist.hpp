#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ebrl/model.hpp"

namespace ebrl {

namespace detail {

/// Decodes UTF-8 into code points; invalid bytes are passed through as-is so
/// that distances stay defined on arbitrary input.
inline std::u32string decodeUtf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = c;
    if (c >= 0xF0 && c < 0xF8) {
      extra = 3;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    }
    bool ok = extra > 0 && i + static_cast<std::size_t>(extra) < s.size();
    for (int k = 1; ok && k <= extra; ++k)
      ok = (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    if (!ok) {
      out.push_back(c);
      ++i;
      continue;
    }
    for (int k = 1; k <= extra; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

inline std::size_t levenshtein(std::u32string_view s, std::u32string_view t) {
  if (s.size() < t.size()) std::swap(s, t);
  std::vector<std::size_t> row(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (s[i - 1] == t[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[t.size()];
}

inline double jaroWinklerSimilarity(std::u32string_view s, std::u32string_view t) {
  if (s == t) return 1.0;
  if (s.empty() || t.empty()) return 0.0;
  const std::size_t window =
      std::max<std::size_t>(std::max(s.size(), t.size()) / 2, 1) - 1;
  std::vector<char> s_match(s.size(), 0), t_match(t.size(), 0);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(i + window + 1, t.size());
    for (std::size_t j = lo; j < hi; ++j) {
      if (t_match[j] || s[i] != t[j]) continue;
      s_match[i] = t_match[j] = 1;
      ++matches;
      break;
    }
  }
  if (matches == 0) return 0.0;
  std::size_t half_transpositions = 0;
  for (std::size_t i = 0, j = 0; i < s.size(); ++i) {
    if (!s_match[i]) continue;
    while (!t_match[j]) ++j;
    if (s[i] != t[j]) ++half_transpositions;
    ++j;
  }
  const double m = static_cast<double>(matches);
  const double jaro = (m / static_cast<double>(s.size()) + m / static_cast<double>(t.size()) +
                       (m - static_cast<double>(half_transpositions) / 2.0) / m) /
                      3.0;
  std::size_t prefix = 0;
  while (prefix < 4 && prefix < s.size() && prefix < t.size() && s[prefix] == t[prefix]) ++prefix;
  return jaro + static_cast<double>(prefix) * 0.1 * (1.0 - jaro);
}

}  // namespace detail

/// Levenshtein distance with unit costs, over Unicode code points.
inline std::size_t editDistance(std::string_view s, std::string_view t) {
  return detail::levenshtein(detail::decodeUtf8(s), detail::decodeUtf8(t));
}

/// 1 - Jaro-Winkler similarity (prefix scale 0.1, prefix capped at 4).
inline double jaroWinklerDistance(std::string_view s, std::string_view t) {
  const double d =
      1.0 - detail::jaroWinklerSimilarity(detail::decodeUtf8(s), detail::decodeUtf8(t));
  return std::clamp(d, 0.0, 1.0);
}

inline double stringDistance(Distance kind, std::string_view s, std::string_view t) {
  return kind == Distance::Edit ? static_cast<double>(editDistance(s, t))
                                : jaroWinklerDistance(s, t);
}

/// Precomputed quantities for one string field. Matrices are dense and
/// row-major over the field vocabulary.
struct StringFieldTable {
  std::size_t size = 0;
  std::vector<double> dist;    // d(w, w')
  std::vector<double> kernel;  // exp(-c d(w, w'))
  std::vector<double> h;       // 1 / sum_w alpha(w) exp(-c d(w, w0))
  std::vector<double> log_h;
  // log h(w) - c d(x, w), indexed [x * size + w]: the per-field contribution of
  // a distorted record with value x attached to a latent with value w.
  std::vector<double> log_link;

  double distance(Index a, Index b) const { return dist[static_cast<std::size_t>(a) * size + b]; }
  double kernelAt(Index a, Index b) const { return kernel[static_cast<std::size_t>(a) * size + b]; }
  const double* logLinkRow(Index x) const { return log_link.data() + static_cast<std::size_t>(x) * size; }
};

struct FieldTables {
  double c = 1.0;
  Distance distance = Distance::Edit;
  std::vector<EmpiricalDist> alpha;                    // every field
  std::vector<std::optional<StringFieldTable>> strings;  // engaged for string fields

  const StringFieldTable& stringTable(std::size_t f) const {
    if (f >= strings.size() || !strings[f]) throw Error("field " + std::to_string(f) + " is not string-valued");
    return *strings[f];
  }
  bool isString(std::size_t f) const { return f < strings.size() && strings[f].has_value(); }
};

inline constexpr std::size_t kDefaultVocabularyCap = 20000;

/// Builds alpha for every field and the distance/kernel/h tables for every
/// string field. Requires c >= 0 (c = 0 is permitted here for limit checks).
inline FieldTables buildFieldTables(const Dataset& ds, const Hyperparams& hp,
                                    std::size_t vocabulary_cap = kDefaultVocabularyCap) {
  if (!(hp.c >= 0.0) || !std::isfinite(hp.c)) throw Error("steepness c must be >= 0");
  FieldTables t;
  t.c = hp.c;
  t.distance = hp.distance;
  t.strings.resize(ds.numFields());
  for (std::size_t f = 0; f < ds.numFields(); ++f) {
    t.alpha.push_back(buildEmpiricalDist(ds, f));
    if (!ds.isString(f)) continue;
    const std::size_t m = ds.vocab[f].size();
    if (m > vocabulary_cap) {
      throw Error("string field '" + ds.fields[f].name + "' has " + std::to_string(m) +
                  " distinct values, above the cap of " + std::to_string(vocabulary_cap) +
                  " (the dense distance matrix would need " + std::to_string(m * m) +
                  " entries); raise the cap or treat the field as categorical");
    }
    StringFieldTable st;
    st.size = m;
    st.dist.assign(m * m, 0.0);
    st.kernel.assign(m * m, 1.0);
    std::vector<std::u32string> decoded;
    decoded.reserve(m);
    for (const auto& w : ds.vocab[f]) decoded.push_back(detail::decodeUtf8(w));
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        const double d = hp.distance == Distance::Edit
                             ? static_cast<double>(detail::levenshtein(decoded[a], decoded[b]))
                             : std::clamp(1.0 - detail::jaroWinklerSimilarity(decoded[a], decoded[b]),
                                          0.0, 1.0);
        const double k = std::exp(-hp.c * d);
        st.dist[a * m + b] = st.dist[b * m + a] = d;
        st.kernel[a * m + b] = st.kernel[b * m + a] = k;
      }
    }
    const auto& alpha = t.alpha.back().probs;
    st.h.resize(m);
    st.log_h.resize(m);
    for (std::size_t w0 = 0; w0 < m; ++w0) {
      double s = 0.0;
      for (std::size_t w = 0; w < m; ++w) s += alpha[w] * st.kernel[w * m + w0];
      st.h[w0] = 1.0 / s;
      st.log_h[w0] = -std::log(s);
    }
    st.log_link.resize(m * m);
    for (std::size_t x = 0; x < m; ++x)
      for (std::size_t w = 0; w < m; ++w) st.log_link[x * m + w] = st.log_h[w] - hp.c * st.dist[x * m + w];
    t.strings[f] = std::move(st);
  }
  return t;
}

/// F_l(y): P(w) = alpha(w) exp(-c d(w, y)) h(y) over the field vocabulary.
inline std::vector<double> distortionPMF(std::size_t field, Index y, const FieldTables& tables) {
  if (!tables.isString(field))
    throw Error("distortionPMF: field " + std::to_string(field) +
                " is categorical; its distortion distribution is the empirical prior");
  const auto& st = tables.stringTable(field);
  const auto& alpha = tables.alpha[field].probs;
  std::vector<double> p(st.size);
  for (std::size_t w = 0; w < st.size; ++w) p[w] = alpha[w] * st.kernelAt(static_cast<Index>(w), y) * st.h[y];
  return p;
}

}  // namespace ebrl
