#pragma once

// On-disk formats.
//
// Sample log directory:
//   manifest.json    run metadata and hyperparameters
//   lambda.bin       little-endian uint32 latent indices, snapshots x N, row-major
//   diagnostics.csv  per sweep: n_distinct, singles, doubles, triples, the full
//                    multiplicity histogram (space separated) and beta traces
//
// Partitions: JSON {"n_records": N, "clusters": [[...], ...]} or CSV record,cluster.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ebrl/csv.hpp"
#include "ebrl/gibbs.hpp"
#include "ebrl/linkage.hpp"

namespace ebrl {

namespace fs = std::filesystem;

namespace detail {

inline std::string formatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void writeText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline void putU32(std::string& buf, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

inline std::uint32_t getU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace detail

inline nlohmann::ordered_json manifestJson(const SampleLog& log) {
  nlohmann::ordered_json m;
  m["format"] = "ebrl-sample-log";
  m["version"] = 1;
  m["N"] = log.num_records;
  m["n_pop"] = log.n_pop;
  m["k"] = log.num_lists;
  m["p"] = log.num_fields;
  m["sweeps"] = log.sweeps;
  m["thin"] = log.thin;
  m["seed"] = log.seed;
  m["snapshots"] = log.numSnapshots();
  m["hyperparams"] = {{"a", log.hp.a},
                      {"b", log.hp.b},
                      {"c", log.hp.c},
                      {"n_pop", log.hp.n_pop},
                      {"distance", toString(log.hp.distance)}};
  m["beta_traces"] = !log.beta_trace.empty();
  return m;
}

inline void writeSampleLog(const SampleLog& log, const fs::path& dir) {
  fs::create_directories(dir);
  detail::writeText(dir / "manifest.json", manifestJson(log).dump(2) + "\n");

  std::string bin;
  bin.reserve(log.lambda.size() * 4);
  for (Index v : log.lambda) detail::putU32(bin, v);
  detail::writeText(dir / "lambda.bin", bin);

  const std::size_t nb = log.num_lists * log.num_fields;
  const bool betas = !log.beta_trace.empty();
  std::ostringstream csv;
  csv << "sweep,n_distinct,singles,doubles,triples,multiplicity";
  if (betas)
    for (std::size_t i = 0; i < log.num_lists; ++i)
      for (std::size_t f = 0; f < log.num_fields; ++f) csv << ",beta_" << i << '_' << f;
  csv << '\n';
  for (std::size_t s = 0; s < log.n_distinct.size(); ++s) {
    csv << s + 1 << ',' << log.n_distinct[s] << ',' << log.multiplicityCount(s, 1) << ','
        << log.multiplicityCount(s, 2) << ',' << log.multiplicityCount(s, 3) << ',';
    const auto& hist = log.multiplicity[s];
    for (std::size_t m = 0; m < hist.size(); ++m) csv << (m ? " " : "") << hist[m];
    if (betas)
      for (std::size_t k = 0; k < nb; ++k) csv << ',' << detail::formatDouble(log.beta_trace[s * nb + k]);
    csv << '\n';
  }
  detail::writeText(dir / "diagnostics.csv", csv.str());
}

inline SampleLog readSampleLog(const fs::path& dir) {
  SampleLog log;
  nlohmann::json m;
  std::size_t snapshots = 0;
  try {
    m = nlohmann::json::parse(readFile((dir / "manifest.json").string()));
    if (m.value("format", "") != "ebrl-sample-log") throw Error("not a sample log manifest");
    log.num_records = m.at("N").get<std::size_t>();
    log.n_pop = m.at("n_pop").get<std::size_t>();
    log.num_lists = m.at("k").get<std::size_t>();
    log.num_fields = m.at("p").get<std::size_t>();
    log.sweeps = m.at("sweeps").get<std::size_t>();
    log.thin = m.at("thin").get<std::size_t>();
    log.seed = m.at("seed").get<std::uint64_t>();
    const auto& h = m.at("hyperparams");
    log.hp.a = h.at("a").get<double>();
    log.hp.b = h.at("b").get<double>();
    log.hp.c = h.at("c").get<double>();
    log.hp.n_pop = h.at("n_pop").get<std::size_t>();
    log.hp.distance = parseDistance(h.at("distance").get<std::string>());
    snapshots = m.at("snapshots").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt manifest in '" + dir.string() + "': " + e.what());
  }

  const std::string bin = readFile((dir / "lambda.bin").string());
  if (bin.size() != snapshots * log.num_records * 4)
    throw Error("lambda.bin holds " + std::to_string(bin.size()) + " bytes; manifest implies " +
                std::to_string(snapshots * log.num_records * 4));
  log.lambda.resize(bin.size() / 4);
  const auto* bytes = reinterpret_cast<const unsigned char*>(bin.data());
  for (std::size_t k = 0; k < log.lambda.size(); ++k) {
    log.lambda[k] = detail::getU32(bytes + 4 * k);
    if (log.lambda[k] >= log.n_pop) throw Error("lambda.bin entry " + std::to_string(k) + " exceeds n_pop");
  }

  const auto table = parseCsv(readFile((dir / "diagnostics.csv").string()));
  const std::size_t nb = log.num_lists * log.num_fields;
  const bool betas = m.value("beta_traces", false);
  if (table.header.size() != 6 + (betas ? nb : 0)) throw Error("diagnostics.csv has an unexpected header");
  if (table.rows.size() != log.sweeps) throw Error("diagnostics.csv row count differs from manifest sweeps");
  try {
    for (const auto& row : table.rows) {
      log.n_distinct.push_back(static_cast<std::uint32_t>(std::stoul(row[1])));
      std::vector<std::uint32_t> hist;
      std::istringstream hs(row[5]);
      std::uint32_t v;
      while (hs >> v) hist.push_back(v);
      log.multiplicity.push_back(std::move(hist));
      if (betas)
        for (std::size_t k = 0; k < nb; ++k) log.beta_trace.push_back(std::stod(row[6 + k]));
    }
  } catch (const std::logic_error&) {
    throw Error("diagnostics.csv holds a malformed number");
  }
  return log;
}

inline std::string partitionJson(const LinkagePartition& p) {
  nlohmann::ordered_json j;
  j["n_records"] = p.n_records;
  j["clusters"] = p.clusters;
  return j.dump() + "\n";
}

inline LinkagePartition parsePartitionJson(const std::string& text) {
  LinkagePartition p;
  try {
    const auto j = nlohmann::json::parse(text);
    p.n_records = j.at("n_records").get<std::size_t>();
    p.clusters = j.at("clusters").get<std::vector<RecordSet>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed partition JSON: ") + e.what());
  }
  p.canonicalize();
  if (auto err = p.validate()) throw Error("invalid partition: " + *err);
  return p;
}

inline std::string partitionCsv(const LinkagePartition& p) {
  std::ostringstream out;
  out << "record,cluster\n";
  const auto labels = p.labels();
  for (std::size_t r = 0; r < labels.size(); ++r) out << r << ',' << labels[r] << '\n';
  return out.str();
}

}  // namespace ebrl
