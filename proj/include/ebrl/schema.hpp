#pragma once

// Schema files map CSV columns to roles, one per line:
//
//   fname = string
//   by    = categorical
//   file  = list_id
//   id    = truth_id
//
// '#' starts a comment. Values may be quoted. Columns not named are ignored.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ebrl/csv.hpp"
#include "ebrl/model.hpp"

namespace ebrl {

enum class ColumnRole { String, Categorical, ListId, TruthId };

struct SchemaEntry {
  std::string column;
  ColumnRole role;
  std::size_t line;
};

struct SchemaSpec {
  std::vector<SchemaEntry> entries;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace detail

inline SchemaSpec parseSchema(const std::string& text) {
  SchemaSpec spec;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  bool have_list = false, have_truth = false;
  while (std::getline(in, raw)) {
    ++line;
    // strip comments outside quotes
    bool q = false;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      if (raw[k] == '"') q = !q;
      if (raw[k] == '#' && !q) {
        raw.resize(k);
        break;
      }
    }
    const std::string s = detail::trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') continue;  // section headers carry no meaning here
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw IngestError("schema line " + std::to_string(line) + ": expected 'column = kind'");
    const std::string col = detail::unquote(detail::trim(s.substr(0, eq)));
    const std::string kind = detail::unquote(detail::trim(s.substr(eq + 1)));
    if (col.empty()) throw IngestError("schema line " + std::to_string(line) + ": empty column name");
    ColumnRole role;
    if (kind == "string") role = ColumnRole::String;
    else if (kind == "categorical") role = ColumnRole::Categorical;
    else if (kind == "list_id") role = ColumnRole::ListId;
    else if (kind == "truth_id") role = ColumnRole::TruthId;
    else
      throw IngestError("schema line " + std::to_string(line) + ": unknown kind '" + kind +
                        "' (expected string, categorical, list_id or truth_id)");
    for (const auto& e : spec.entries)
      if (e.column == col)
        throw IngestError("schema line " + std::to_string(line) + ": column '" + col +
                          "' already declared on line " + std::to_string(e.line));
    if (role == ColumnRole::ListId) {
      if (have_list) throw IngestError("schema line " + std::to_string(line) + ": second list_id column");
      have_list = true;
    }
    if (role == ColumnRole::TruthId) {
      if (have_truth) throw IngestError("schema line " + std::to_string(line) + ": second truth_id column");
      have_truth = true;
    }
    spec.entries.push_back({col, role, line});
  }
  return spec;
}

inline SchemaSpec readSchema(const std::string& path) {
  try {
    return parseSchema(readFile(path));
  } catch (const IngestError& e) {
    throw IngestError(path + ": " + e.what());
  }
}

/// Resolves column names against a header. Without a list_id column every
/// record belongs to one list; the table then gains a constant column.
/// `truth_override` replaces any truth_id entry.
inline Schema resolveSchema(const SchemaSpec& spec, RawTable& table,
                            const std::optional<std::string>& truth_override = std::nullopt) {
  auto find = [&](const std::string& name, std::size_t line) {
    for (std::size_t c = 0; c < table.header.size(); ++c)
      if (table.header[c] == name) return c;
    std::string msg = "column '" + name + "' not found in input header";
    if (line) msg = "schema line " + std::to_string(line) + ": " + msg;
    throw IngestError(msg);
  };
  Schema schema;
  bool have_list = false;
  for (const auto& e : spec.entries) {
    switch (e.role) {
      case ColumnRole::String:
      case ColumnRole::Categorical:
        schema.fields.push_back(
            {e.column, e.role == ColumnRole::String ? FieldKind::String : FieldKind::Categorical, find(e.column, e.line)});
        break;
      case ColumnRole::ListId:
        schema.list_column = find(e.column, e.line);
        have_list = true;
        break;
      case ColumnRole::TruthId:
        if (!truth_override) schema.truth_column = find(e.column, e.line);
        break;
    }
  }
  if (truth_override) schema.truth_column = find(*truth_override, 0);
  if (schema.fields.empty()) throw IngestError("schema declares no string or categorical fields");
  if (!have_list) {
    schema.list_column = table.header.size();
    table.header.push_back("__list");
    for (auto& row : table.rows) row.push_back("1");
  }
  return schema;
}

struct InputSummary {
  std::size_t records = 0;
  std::size_t lists = 0;
  std::size_t string_fields = 0;
  std::size_t categorical_fields = 0;
  std::vector<std::pair<std::string, std::size_t>> vocab_sizes;

  std::string describe() const {
    std::ostringstream o;
    o << "N=" << records << " k=" << lists << " p_s=" << string_fields << " p_c=" << categorical_fields
      << " vocab:";
    for (const auto& [name, n] : vocab_sizes) o << ' ' << name << '=' << n;
    return o.str();
  }
};

inline InputSummary summarizeInput(const Dataset& ds) {
  InputSummary s;
  s.records = ds.numRecords();
  s.lists = ds.numLists();
  s.string_fields = ds.numStringFields();
  s.categorical_fields = ds.numFields() - s.string_fields;
  for (std::size_t f = 0; f < ds.numFields(); ++f) s.vocab_sizes.emplace_back(ds.fields[f].name, ds.vocab[f].size());
  return s;
}

inline Dataset loadInput(const std::string& csv_path, const std::string& schema_path,
                         const std::optional<std::string>& truth_override = std::nullopt) {
  auto spec = readSchema(schema_path);
  auto table = readCsv(csv_path);
  const auto schema = resolveSchema(spec, table, truth_override);
  try {
    return internDataset(table, schema);
  } catch (const IngestError& e) {
    throw IngestError(csv_path + ": " + e.what());
  }
}

}  // namespace ebrl
