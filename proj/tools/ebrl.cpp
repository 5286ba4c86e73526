// ebrl: command-line front end for sampling, estimation and evaluation.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ebrl/ebrl.hpp"

namespace {

using nlohmann::ordered_json;
using namespace ebrl;

struct ModelFlags {
  std::string input;
  std::string schema;
  std::optional<std::string> truth_col;
  double a = 1.0;
  double b = 99.0;
  double c = 1.0;
  std::size_t npop = 0;  // 0: number of records
  std::string distance = "edit";
};

void addModelFlags(CLI::App* cmd, ModelFlags& m, bool hyper = true) {
  cmd->add_option("--input", m.input, "input CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--schema", m.schema, "schema file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--truth-col", m.truth_col, "column holding true entity ids");
  if (!hyper) return;
  cmd->add_option("--a", m.a, "Beta prior shape a");
  cmd->add_option("--b", m.b, "Beta prior shape b");
  cmd->add_option("--c", m.c, "distance steepness");
  cmd->add_option("--npop", m.npop, "latent population size (default: N)");
  cmd->add_option("--distance", m.distance, "string distance")->check(CLI::IsMember({"edit", "jw"}));
}

Hyperparams hyperparams(const ModelFlags& m, const Dataset& ds) {
  Hyperparams hp;
  hp.a = m.a;
  hp.b = m.b;
  hp.c = m.c;
  hp.n_pop = m.npop == 0 ? ds.numRecords() : m.npop;
  hp.distance = parseDistance(m.distance);
  hp.validate();
  return hp;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

std::string jsonText(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<double> parseList(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw Error("empty value list '" + s + "'");
  return out;
}

std::vector<std::string> splitCsvList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

ordered_json countsJson(const ConfusionCounts& c) {
  return {{"cl", c.cl}, {"fn", c.fn}, {"fp", c.fp}, {"cnl", c.cnl}, {"fnr", fnr(c)}, {"fdr", fdr(c)}};
}

std::vector<GenField> readPools(const std::string& path) {
  const auto j = nlohmann::json::parse(readFile(path));
  std::vector<GenField> fields;
  for (const auto& f : j.at("fields")) {
    GenField g;
    g.name = f.at("name").get<std::string>();
    const auto kind = f.at("kind").get<std::string>();
    if (kind != "string" && kind != "categorical") throw Error("pool kind must be string or categorical");
    g.kind = kind == "string" ? FieldKind::String : FieldKind::Categorical;
    g.pool = f.at("pool").get<std::vector<std::string>>();
    fields.push_back(std::move(g));
  }
  return fields;
}

int cmdRun(const ModelFlags& m, const SamplerConfig& cfg, const std::string& out, bool quiet) {
  const auto ds = loadInput(m.input, m.schema, m.truth_col);
  const auto hp = hyperparams(m, ds);
  if (!quiet) std::cerr << summarizeInput(ds).describe() << '\n';
  const auto tables = buildFieldTables(ds, hp);
  std::size_t next = 1;
  ProgressFn progress;
  if (!quiet)
    progress = [&](std::size_t done, std::size_t total) {
      if (done * 10 >= next * total) {
        std::cerr << "sweep " << done << "/" << total << '\n';
        ++next;
      }
    };
  const auto log = runSampler(ds, tables, hp, cfg, progress);
  writeSampleLog(log, out);
  return 0;
}

int cmdEstimate(const std::string& input, const std::string& out) {
  const auto log = readSampleLog(input);
  const auto p = sharedMPMMSLinkage(log);
  if (out.empty() || out == "-") {
    std::cout << partitionJson(p);
    return 0;
  }
  emit(out, partitionJson(p));
  fs::path csv = out;
  csv.replace_extension(".csv");
  if (csv != fs::path(out)) emit(csv.string(), partitionCsv(p));
  return 0;
}

int cmdEvaluate(const std::string& partition, const ModelFlags& m, bool baselines, const std::string& out) {
  const auto est = parsePartitionJson(readFile(partition));
  const auto ds = loadInput(m.input, m.schema, m.truth_col);
  const auto truth = truthPartition(ds);
  ordered_json j = countsJson(confusionCounts(est, truth));
  j["n_records"] = est.n_records;
  j["n_clusters"] = est.clusters.size();
  if (baselines) {
    j["exact_match"] = countsJson(confusionCounts(exactMatchBaseline(ds), truth));
    j["near_twin"] = countsJson(confusionCounts(nearTwinBaseline(ds), truth));
  }
  emit(out, jsonText(j));
  return 0;
}

int cmdPairs(const std::string& input, double min_prob, const std::string& out) {
  const auto log = readSampleLog(input);
  std::ostringstream csv;
  csv << "record_a,record_b,probability\n";
  for (const auto& [pair, pr] : pairwiseMatchProbs(log))
    if (pr >= min_prob) csv << pair.first << ',' << pair.second << ',' << fmt(pr) << '\n';
  emit(out, csv.str());
  return 0;
}

int cmdSummary(const std::string& input, const std::string& out) {
  const auto log = readSampleLog(input);
  const auto s = nDistinctSummary(log);
  std::ostringstream csv;
  csv << "n_distinct,count,density\n";
  for (const auto& [v, c] : s.histogram)
    csv << v << ',' << c << ',' << fmt(static_cast<double>(c) / static_cast<double>(log.n_distinct.size())) << '\n';
  ordered_json j{{"sweeps", log.n_distinct.size()}, {"mean", s.mean}, {"sd", s.sd}};
  if (out.empty() || out == "-") {
    std::cout << jsonText(j);
  } else {
    emit(out, csv.str());
    std::cout << jsonText(j);
  }
  return 0;
}

int cmdDiag(const std::string& input, const std::string& out) {
  const auto log = readSampleLog(input);
  ordered_json j;
  auto add = [&](const std::string& name, const std::vector<double>& series) {
    if (series.size() < 100) {
      j[name] = {{"error", "fewer than 100 sweeps"}};
      return;
    }
    const auto g = gewekeZ(series);
    j[name] = {{"z", g.z}, {"zero_variance", g.zero_variance}};
  };
  std::vector<double> nd(log.n_distinct.begin(), log.n_distinct.end());
  add("n_distinct", nd);
  const char* names[] = {"singles", "doubles", "triples"};
  std::vector<std::vector<std::uint32_t>> traces;
  for (std::size_t m = 1; m <= 3; ++m) {
    traces.push_back(multiplicityTrace(log, m));
    add(names[m - 1], std::vector<double>(traces.back().begin(), traces.back().end()));
  }
  const std::size_t nb = log.num_lists * log.num_fields;
  if (!log.beta_trace.empty())
    for (std::size_t k = 0; k < nb; ++k) {
      std::vector<double> series;
      for (std::size_t s = 0; s < log.n_distinct.size(); ++s) series.push_back(log.beta_trace[s * nb + k]);
      add("beta_" + std::to_string(k / log.num_fields) + "_" + std::to_string(k % log.num_fields), series);
    }
  std::cout << jsonText(j);
  if (!out.empty()) {
    std::ostringstream csv;
    csv << "sweep,n_distinct,singles,doubles,triples\n";
    for (std::size_t s = 0; s < log.n_distinct.size(); ++s)
      csv << s + 1 << ',' << log.n_distinct[s] << ',' << traces[0][s] << ',' << traces[1][s] << ','
          << traces[2][s] << '\n';
    emit(out, csv.str());
  }
  return 0;
}

struct SweepCell {
  Hyperparams hp;
  double mean = 0.0;
  double sd = 0.0;
};

int cmdSweep(const ModelFlags& m, const std::string& a_list, const std::string& b_list, const std::string& ab_list,
             const std::string& c_list, const std::string& npop_list, const std::string& dist_list,
             const SamplerConfig& cfg, std::size_t jobs, const std::string& out) {
  const auto ds = loadInput(m.input, m.schema, m.truth_col);
  std::vector<std::pair<double, double>> ab;
  if (!ab_list.empty()) {
    for (const auto& item : splitCsvList(ab_list)) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw Error("--ab entries look like a:b");
      ab.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    }
  } else {
    for (double a : parseList(a_list.empty() ? fmt(m.a) : a_list))
      for (double b : parseList(b_list.empty() ? fmt(m.b) : b_list)) ab.emplace_back(a, b);
  }
  std::vector<SweepCell> cells;
  const auto cs = parseList(c_list.empty() ? fmt(m.c) : c_list);
  const auto npops = npop_list.empty() ? std::vector<double>{static_cast<double>(m.npop)} : parseList(npop_list);
  const auto dists = splitCsvList(dist_list.empty() ? m.distance : dist_list);
  for (const auto& [a, b] : ab)
    for (double c : cs)
      for (double np : npops)
        for (const auto& d : dists) {
          SweepCell cell;
          cell.hp.a = a;
          cell.hp.b = b;
          cell.hp.c = c;
          cell.hp.n_pop = np <= 0 ? ds.numRecords() : static_cast<std::size_t>(np);
          cell.hp.distance = parseDistance(d);
          cell.hp.validate();
          cells.push_back(cell);
        }

  SamplerConfig run_cfg = cfg;
  run_cfg.record_lambda = false;
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(cells.size());
  auto worker = [&] {
    for (std::size_t k; (k = next++) < cells.size();) {
      try {
        const auto log = runSampler(ds, cells[k].hp, run_cfg);
        const auto s = nDistinctSummary(log);
        cells[k].mean = s.mean;
        cells[k].sd = s.sd;
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::max<std::size_t>(jobs, 1); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);

  std::ostringstream csv;
  csv << "a,b,c,n_pop,distance,mean_n_distinct,sd_n_distinct\n";
  for (const auto& cell : cells)
    csv << fmt(cell.hp.a) << ',' << fmt(cell.hp.b) << ',' << fmt(cell.hp.c) << ',' << cell.hp.n_pop << ','
        << toString(cell.hp.distance) << ',' << fmt(cell.mean) << ',' << fmt(cell.sd) << '\n';
  emit(out, csv.str());
  return 0;
}

int cmdGen(GenConfig cfg, const std::string& pools, const std::string& out, const std::string& schema_out) {
  if (!pools.empty()) cfg.fields = readPools(pools);
  const auto data = generateSynthetic(cfg);
  std::ostringstream csv;
  writeCsvRow(csv, data.table.header);
  for (const auto& row : data.table.rows) writeCsvRow(csv, row);
  emit(out, csv.str());
  if (!schema_out.empty()) emit(schema_out, data.schema);
  return 0;
}

int cmdKlcheck(std::uint64_t seed, std::size_t draws, const ModelFlags& m, const std::string& out) {
  ordered_json j;
  bool all_ok = true;
  ordered_json checks = ordered_json::array();
  for (const auto& s : categoricalBoundSweep(seed, draws)) {
    checks.push_back({{"name", s.name}, {"trials", s.trials}, {"passed", s.passed}, {"pass", s.ok()},
                      {"worst_margin", s.worst_margin}});
    all_ok = all_ok && s.ok();
  }

  CheckSummary pinsker{"pinsker_random_simplex"}, reverse{"reverse_pinsker_random_simplex"};
  for (std::size_t k = 0; k < draws; ++k) {
    StreamRng rng(seed, k, Block::Check, 1);
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 9);
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sp += (p[i] = -std::log(rng.uniformOpen()));
      sq += (q[i] = -std::log(rng.uniformOpen()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const auto a = pinskerCheck(p, q);
    pinsker.add(a.holds, a.margin);
    const auto b = reversePinskerCheck(p, q);
    reverse.add(b.holds, b.margin);
  }
  for (const auto* s : {&pinsker, &reverse}) {
    checks.push_back({{"name", s->name}, {"trials", s->trials}, {"passed", s->passed}, {"pass", s->ok()},
                      {"worst_margin", s->worst_margin}});
    all_ok = all_ok && s->ok();
  }

  struct FanoCase {
    double gamma;
    long r;
    double expected;
  };
  const FanoCase fano[] = {{0.0, 2, 0.0}, {std::log(2.0), 16, 0.5}, {1.0, 100, 1.0 - (1.0 + std::log(2.0)) / std::log(100.0)}};
  CheckSummary fano_sum{"fano_fixed_cases"};
  for (const auto& f : fano) {
    const double err = std::abs(fanoBound(f.gamma, f.r) - f.expected);
    fano_sum.add(err <= 1e-12, 1e-12 - err);
  }
  checks.push_back({{"name", fano_sum.name}, {"trials", fano_sum.trials}, {"passed", fano_sum.passed},
                    {"pass", fano_sum.ok()}, {"worst_margin", fano_sum.worst_margin}});
  all_ok = all_ok && fano_sum.ok();

  if (!m.input.empty()) {
    const auto ds = loadInput(m.input, m.schema, m.truth_col);
    Hyperparams hp;
    hp.c = m.c;
    hp.distance = parseDistance(m.distance);
    const auto tables = buildFieldTables(ds, hp);
    CheckSummary mgf{"mgf_times_h_equals_one"};
    for (std::size_t f = 0; f < ds.numFields(); ++f) {
      if (!tables.isString(f)) continue;
      for (std::size_t w = 0; w < ds.vocab[f].size(); ++w) {
        const double err = std::abs(distanceMGF(f, static_cast<Index>(w), tables) * tables.stringTable(f).h[w] - 1.0);
        mgf.add(err <= 1e-12, 1e-12 - err);
      }
    }
    checks.push_back({{"name", mgf.name}, {"trials", mgf.trials}, {"passed", mgf.passed}, {"pass", mgf.ok()},
                      {"worst_margin", mgf.worst_margin}});
    all_ok = all_ok && mgf.ok();

    // Informational: the separation factor as c grows, for the first string field.
    for (std::size_t f = 0; f < ds.numFields(); ++f) {
      if (!tables.isString(f) || ds.vocab[f].size() < 2) continue;
      const auto& st = tables.stringTable(f);
      std::vector<double> dist_to_t(st.dist.begin(), st.dist.begin() + static_cast<std::ptrdiff_t>(st.size));
      ordered_json trace = ordered_json::array();
      bool monotone = true;
      double prev = -1.0;
      for (double c : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double v = mgfSeparationFactor(tables.alpha[f].probs, dist_to_t, st.distance(0, 1), c);
        trace.push_back({{"c", c}, {"factor", v}});
        if (v < prev) monotone = false;
        prev = v;
      }
      j["mgf_separation_factor"] = {{"field", ds.fields[f].name}, {"trace", trace}, {"monotone", monotone}};
      break;
    }
  }

  j["seed"] = seed;
  j["draws"] = draws;
  j["checks"] = checks;
  j["all_pass"] = all_ok;
  emit(out, jsonText(j));
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical Bayes record linkage"};
  app.require_subcommand(1);

  ModelFlags model;
  SamplerConfig cfg;
  cfg.sweeps = 1000;
  cfg.seed = 1;
  std::string out, log_dir;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "sample the posterior; writes a sample log directory");
  addModelFlags(run, model);
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--iters", cfg.sweeps, "Gibbs sweeps");
  run->add_option("--seed", cfg.seed, "random seed");
  run->add_option("--thin", cfg.thin, "keep every n-th linkage snapshot");
  run->add_flag("--record-beta", cfg.record_beta, "store beta traces");
  run->add_flag("--quiet", quiet, "no progress output");

  auto* est = app.add_subcommand("estimate", "shared MPMMS point estimate from a sample log");
  est->add_option("--input", log_dir, "sample log directory")->required()->check(CLI::ExistingDirectory);
  est->add_option("--out", out, "partition JSON path (a .csv sibling is written too)");

  std::string partition;
  bool baselines = false;
  auto* eval = app.add_subcommand("evaluate", "FNR/FDR of a partition against the truth column");
  eval->add_option("--partition", partition, "partition JSON")->required()->check(CLI::ExistingFile);
  addModelFlags(eval, model, false);
  eval->add_flag("--baselines", baselines, "also score the exact-match and near-twin baselines");
  eval->add_option("--out", out, "metrics JSON path (default stdout)");

  double min_prob = 0.0;
  auto* pairs = app.add_subcommand("pairs", "posterior match probability of every co-linked pair");
  pairs->add_option("--input", log_dir, "sample log directory")->required()->check(CLI::ExistingDirectory);
  pairs->add_option("--min", min_prob, "drop pairs below this probability");
  pairs->add_option("--out", out, "CSV path (default stdout)");

  auto* summary = app.add_subcommand("summary", "posterior mean, sd and histogram of N_distinct");
  summary->add_option("--input", log_dir, "sample log directory")->required()->check(CLI::ExistingDirectory);
  summary->add_option("--out", out, "histogram CSV path");

  auto* diag = app.add_subcommand("diag", "Geweke z-scores and multiplicity traces");
  diag->add_option("--input", log_dir, "sample log directory")->required()->check(CLI::ExistingDirectory);
  diag->add_option("--out", out, "trace CSV path");

  std::string a_list, b_list, ab_list, c_list, npop_list, dist_list;
  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "N_distinct summaries over a hyperparameter grid");
  addModelFlags(sweep, model);
  sweep->add_option("--a-grid", a_list, "comma-separated a values");
  sweep->add_option("--b-grid", b_list, "comma-separated b values");
  sweep->add_option("--ab", ab_list, "comma-separated a:b pairs (overrides the a/b grids)");
  sweep->add_option("--c-grid", c_list, "comma-separated c values");
  sweep->add_option("--npop-grid", npop_list, "comma-separated n_pop values (0: N)");
  sweep->add_option("--distance-grid", dist_list, "comma-separated distances");
  sweep->add_option("--iters", cfg.sweeps, "Gibbs sweeps per cell");
  sweep->add_option("--seed", cfg.seed, "random seed (shared by all cells)");
  sweep->add_option("--jobs", jobs, "worker threads");
  sweep->add_option("--out", out, "CSV path (default stdout)");

  GenConfig gen_cfg;
  std::string pools, schema_out;
  auto* gen = app.add_subcommand("gen", "synthetic data with known duplicates");
  gen->add_option("--out", out, "CSV path (default stdout)");
  gen->add_option("--schema", schema_out, "write a matching schema file here");
  gen->add_option("--n-records", gen_cfg.n_records, "total records");
  gen->add_option("--n-duplicates", gen_cfg.n_duplicates, "perturbed copies among them");
  gen->add_option("--string-error", gen_cfg.string_error, "mean edits per duplicated string field");
  gen->add_option("--cat-error", gen_cfg.cat_error, "swap probability per duplicated categorical field");
  gen->add_option("--lists", gen_cfg.num_lists, "number of lists");
  gen->add_option("--seed", gen_cfg.seed, "random seed");
  gen->add_option("--pools", pools, "JSON value pools")->check(CLI::ExistingFile);

  std::size_t draws = 10000;
  std::uint64_t kl_seed = 1;
  auto* kl = app.add_subcommand("klcheck", "numerical check of the divergence bounds");
  kl->add_option("--seed", kl_seed, "random seed");
  kl->add_option("--draws", draws, "random parameter draws per check");
  kl->add_option("--input", model.input, "optional CSV for the MGF identity check")->check(CLI::ExistingFile);
  kl->add_option("--schema", model.schema, "schema for --input")->check(CLI::ExistingFile);
  kl->add_option("--c", model.c, "distance steepness");
  kl->add_option("--distance", model.distance, "string distance")->check(CLI::IsMember({"edit", "jw"}));
  kl->add_option("--out", out, "JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run) return cmdRun(model, cfg, out, quiet);
    if (*est) return cmdEstimate(log_dir, out);
    if (*eval) return cmdEvaluate(partition, model, baselines, out);
    if (*pairs) return cmdPairs(log_dir, min_prob, out);
    if (*summary) return cmdSummary(log_dir, out);
    if (*diag) return cmdDiag(log_dir, out);
    if (*sweep) return cmdSweep(model, a_list, b_list, ab_list, c_list, npop_list, dist_list, cfg, jobs, out);
    if (*gen) return cmdGen(gen_cfg, pools, out, schema_out);
    if (*kl) {
      if (!model.input.empty() && model.schema.empty()) throw Error("--input needs --schema");
      return cmdKlcheck(kl_seed, draws, model, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
