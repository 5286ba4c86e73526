#pragma once

// Synthetic duplicate-laden data in the style of the RLdata500 benchmark:
// base records drawn from value pools, a subset copied and perturbed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ebrl/model.hpp"
#include "ebrl/rng.hpp"

namespace ebrl {

struct GenField {
  std::string name;
  FieldKind kind = FieldKind::Categorical;
  std::vector<std::string> pool;
};

inline std::vector<GenField> defaultGenFields();

struct GenConfig {
  std::size_t n_records = 500;
  std::size_t n_duplicates = 50;
  std::vector<GenField> fields = defaultGenFields();
  double string_error = 1.0;  // Poisson mean of single-character edits per string field
  double cat_error = 0.05;    // swap probability per categorical field
  std::size_t num_lists = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_records == 0) throw Error("n_records must be positive");
    if (n_duplicates >= n_records) throw Error("n_duplicates must be smaller than n_records");
    if (fields.empty()) throw Error("generator needs at least one field");
    if (!(string_error >= 0.0) || !std::isfinite(string_error)) throw Error("string_error must be >= 0");
    if (!(cat_error >= 0.0 && cat_error <= 1.0)) throw Error("cat_error must lie in [0,1]");
    if (num_lists < 1) throw Error("num_lists must be >= 1");
    bool can_perturb = false;
    for (const auto& f : fields) {
      if (f.pool.empty()) throw Error("value pool of field '" + f.name + "' is empty");
      for (const auto& v : f.pool)
        if (v.empty()) throw Error("value pool of field '" + f.name + "' holds an empty value");
      if (f.kind == FieldKind::String && string_error > 0.0) can_perturb = true;
      if (f.kind == FieldKind::Categorical && cat_error > 0.0 && f.pool.size() > 1) can_perturb = true;
    }
    if (n_duplicates > 0 && !can_perturb)
      throw Error("duplicates cannot be perturbed: every error rate is zero or every pool has one value");
  }
};

struct SyntheticData {
  RawTable table;          // fields..., list, id
  std::string schema;      // matching schema text
  std::vector<std::size_t> source;  // per row: row index of the base record it copies (itself for bases)
};

inline constexpr std::string_view kEditAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// Applies `edits` random single-character insertions, deletions or
/// substitutions. Substitutions always change the character; deletions are
/// skipped on one-character strings.
inline std::string perturbString(std::string s, std::size_t edits, StreamRng& rng) {
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)); };
  for (std::size_t e = 0; e < edits; ++e) {
    std::size_t op = pick(3);
    if (op == 1 && s.size() <= 1) op = 0;
    if (op == 0) {
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(pick(s.size() + 1)), kEditAlphabet[pick(kEditAlphabet.size())]);
    } else if (op == 1) {
      s.erase(pick(s.size()), 1);
    } else {
      const std::size_t pos = pick(s.size());
      char c;
      do c = kEditAlphabet[pick(kEditAlphabet.size())];
      while (c == s[pos]);
      s[pos] = c;
    }
  }
  return s;
}

inline SyntheticData generateSynthetic(const GenConfig& cfg) {
  cfg.validate();
  StreamRng rng(cfg.seed, 0, Block::Generate, 0);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)); };
  const std::size_t p = cfg.fields.size();
  const std::size_t n_base = cfg.n_records - cfg.n_duplicates;

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> source;
  for (std::size_t b = 0; b < n_base; ++b) {
    std::vector<std::string> row(p);
    for (std::size_t f = 0; f < p; ++f) row[f] = cfg.fields[f].pool[pick(cfg.fields[f].pool.size())];
    rows.push_back(std::move(row));
    source.push_back(b);
  }

  std::vector<std::size_t> order(n_base);
  for (std::size_t b = 0; b < n_base; ++b) order[b] = b;
  std::shuffle(order.begin(), order.end(), rng);
  std::poisson_distribution<std::size_t> edits(cfg.string_error > 0.0 ? cfg.string_error : 1.0);
  for (std::size_t d = 0; d < cfg.n_duplicates; ++d) {
    const std::size_t src = order[d];
    std::vector<std::string> copy;
    do {
      copy = rows[src];
      for (std::size_t f = 0; f < p; ++f) {
        const auto& fld = cfg.fields[f];
        if (fld.kind == FieldKind::String) {
          if (cfg.string_error > 0.0) copy[f] = perturbString(copy[f], edits(rng), rng);
        } else if (fld.pool.size() > 1 && rng.uniform() < cfg.cat_error) {
          std::string v;
          do v = fld.pool[pick(fld.pool.size())];
          while (v == copy[f]);
          copy[f] = v;
        }
      }
    } while (copy == rows[src]);
    rows.push_back(std::move(copy));
    source.push_back(src);
  }

  std::vector<std::size_t> perm(rows.size());
  for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
  std::shuffle(perm.begin(), perm.end(), rng);

  SyntheticData out;
  for (const auto& f : cfg.fields) out.table.header.push_back(f.name);
  out.table.header.push_back("list");
  out.table.header.push_back("id");
  std::vector<std::size_t> new_pos(rows.size());
  for (std::size_t k = 0; k < perm.size(); ++k) new_pos[perm[k]] = k;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    auto row = rows[perm[k]];
    row.push_back(std::to_string(1 + k % cfg.num_lists));
    row.push_back("e" + std::to_string(source[perm[k]] + 1));
    out.table.rows.push_back(std::move(row));
    out.source.push_back(new_pos[source[perm[k]]]);
  }
  for (const auto& f : cfg.fields) out.schema += f.name + " = " + toString(f.kind) + "\n";
  out.schema += "list = list_id\nid = truth_id\n";
  return out;
}

namespace detail {

// Pads a name list with syllable-built names until it holds `size` distinct values.
inline std::vector<std::string> padNamePool(std::vector<std::string> names, std::size_t size, std::uint64_t salt) {
  static constexpr std::string_view consonants = "BDFGHKLMNPRSTVWZ", vowels = "AEIOU";
  static constexpr std::string_view endings[] = {"", "N", "R", "L", "S", "NA", "ER", "EN"};
  std::set<std::string> seen(names.begin(), names.end());
  StreamRng rng(salt, 0, Block::Generate, 1);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)); };
  while (names.size() < size) {
    std::string s;
    const std::size_t syllables = pick(3) == 0 ? 3 : 2;
    for (std::size_t k = 0; k < syllables; ++k) {
      s += consonants[pick(consonants.size())];
      s += vowels[pick(vowels.size())];
    }
    s += endings[pick(std::size(endings))];
    if (seen.insert(s).second) names.push_back(std::move(s));
  }
  return names;
}

}  // namespace detail

inline constexpr std::size_t kDefaultNamePoolSize = 2000;

inline std::vector<GenField> defaultGenFields() {
  GenField fname{"fname_c1", FieldKind::String,
                 {"ANDREAS", "ANNA", "BERND", "BIRGIT", "CARSTEN", "CHRISTA", "CHRISTIAN", "CLAUDIA",
                  "DANIEL", "DIETER", "DIRK", "DORIS", "ELKE", "ERIKA", "ERNST", "EVA", "FRANK",
                  "FRIEDRICH", "GABRIELE", "GERHARD", "GISELA", "GUENTER", "HANS", "HEIDI", "HEINZ",
                  "HELGA", "HELMUT", "HERBERT", "HORST", "INGE", "INGRID", "JAN", "JOACHIM",
                  "JOHANNES", "JOERG", "JUERGEN", "JUTTA", "KARIN", "KARL", "KATHARINA", "KLAUS",
                  "LARS", "LUKAS", "MARIA", "MARIE", "MARKUS", "MARTIN", "MATTHIAS", "MICHAEL",
                  "MONIKA", "NICOLE", "NORBERT", "OTTO", "PAUL", "PETER", "PETRA", "RAINER", "RALF",
                  "RENATE", "ROLF", "RUTH", "SABINE", "SANDRA", "SILKE", "SIMONE", "STEFAN",
                  "STEFFEN", "SUSANNE", "THOMAS", "TORSTEN", "UDO", "ULRICH", "URSULA", "UTE",
                  "UWE", "VERA", "WALTER", "WERNER", "WOLFGANG", "YVONNE", "ALEXANDER", "BARBARA",
                  "BERNHARD", "BRIGITTE", "DOROTHEA", "EDITH", "EMIL", "FELIX", "FLORIAN", "GERDA",
                  "GREGOR", "HANNAH", "HILDE", "INGO", "IRMGARD", "JONAS", "KERSTIN", "KONRAD",
                  "LEONIE", "LOTHAR", "MAX", "MELANIE", "NINA", "OLIVER", "REINHARD", "ROSWITHA",
                  "SEBASTIAN", "SOPHIE", "TANJA", "TIMO", "VOLKER", "WILHELM"}};
  GenField lname{"lname_c1", FieldKind::String,
                 {"MUELLER", "SCHMIDT", "SCHNEIDER", "FISCHER", "WEBER", "MEYER", "WAGNER", "BECKER",
                  "SCHULZ", "HOFFMANN", "SCHAEFER", "KOCH", "BAUER", "RICHTER", "KLEIN", "WOLF",
                  "SCHROEDER", "NEUMANN", "SCHWARZ", "ZIMMERMANN", "BRAUN", "KRUEGER", "HOFMANN",
                  "HARTMANN", "LANGE", "SCHMITT", "WERNER", "SCHMITZ", "KRAUSE", "MEIER", "LEHMANN",
                  "SCHMID", "SCHULZE", "MAIER", "KOEHLER", "HERRMANN", "KOENIG", "WALTER", "MAYER",
                  "HUBER", "KAISER", "FUCHS", "PETERS", "LANG", "SCHOLZ", "MOELLER", "WEISS", "JUNG",
                  "HAHN", "SCHUBERT", "VOGEL", "FRIEDRICH", "KELLER", "GUENTHER", "FRANK", "BERGER",
                  "WINKLER", "ROTH", "BECK", "LORENZ", "BAUMANN", "FRANKE", "ALBRECHT", "SCHUSTER",
                  "SIMON", "LUDWIG", "BOEHM", "WINTER", "KRAUS", "MARTIN", "SCHUMACHER", "KRAEMER",
                  "VOGT", "STEIN", "JAEGER", "OTTO", "SOMMER", "GROSS", "SEIDEL", "HEINRICH", "BRANDT",
                  "HAAS", "SCHREIBER", "GRAF", "SCHULTE", "DIETRICH", "ZIEGLER", "KUHN", "KUEHN",
                  "POHL", "ENGEL", "HORN", "BUSCH", "BERGMANN", "THOMAS", "VOIGT", "SAUER", "ARNOLD",
                  "WOLFF", "PFEIFFER"}};
  fname.pool = detail::padNamePool(std::move(fname.pool), kDefaultNamePoolSize, 101);
  lname.pool = detail::padNamePool(std::move(lname.pool), kDefaultNamePoolSize, 202);
  GenField by{"by", FieldKind::Categorical, {}};
  for (int y = 1925; y <= 2005; ++y) by.pool.push_back(std::to_string(y));
  GenField bm{"bm", FieldKind::Categorical, {}};
  for (int m = 1; m <= 12; ++m) bm.pool.push_back(std::to_string(m));
  GenField bd{"bd", FieldKind::Categorical, {}};
  for (int d = 1; d <= 28; ++d) bd.pool.push_back(std::to_string(d));
  return {fname, lname, by, bm, bd};
}

}  // namespace ebrl
