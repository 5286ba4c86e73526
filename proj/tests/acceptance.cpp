// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.
//
//   acceptance [--workdir DIR] [--only N]
//
// Criterion 4 needs the real benchmark CSV; point EBRL_RLDATA500 at it (with
// EBRL_RLDATA500_SCHEMA for its schema) to enable it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ebrl/ebrl.hpp"

namespace fs = std::filesystem;
using namespace ebrl;

namespace {

struct Outcome {
  enum Kind { Pass, Fail, Skip } kind;
  std::string detail;
};

fs::path workdir = fs::temp_directory_path() / "ebrl_acceptance";

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int sh(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string cli() { return std::string(EBRL_CLI_PATH); }

Dataset tinyDataset() {
  RawTable t;
  t.header = {"name", "kind", "list"};
  // two cross-list duplicate pairs
  t.rows = {{"ab", "x", "1"}, {"bcd", "y", "1"}, {"ab", "x", "2"}, {"bcd", "y", "2"}};
  Schema s;
  s.fields = {{"name", FieldKind::String, 0}, {"kind", FieldKind::Categorical, 1}};
  s.list_column = 2;
  return internDataset(t, s);
}

Hyperparams tinyHyper() {
  Hyperparams hp;
  hp.a = 1.0;
  hp.b = 3.0;
  hp.c = 1.0;
  hp.n_pop = 4;
  return hp;
}

LatentState randomValidState(const Dataset& ds, std::size_t n_pop, StreamRng& rng) {
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

// Recovers (A, B) of the Beta kernel (A-1) log b + (B-1) log(1-b) + C from
// three evaluations of the oracle joint.
std::pair<double, double> fitBetaKernel(const std::function<double(double)>& kernel) {
  const double xs[3] = {0.1, 0.4, 0.8};
  double m[3][3], y[3];
  for (int k = 0; k < 3; ++k) {
    m[k][0] = std::log(xs[k]);
    m[k][1] = std::log1p(-xs[k]);
    m[k][2] = 1.0;
    y[k] = kernel(xs[k]);
  }
  auto det = [](double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det(m);
  double sol[2];
  for (int c = 0; c < 2; ++c) {
    double t[3][3];
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) t[r][k] = k == c ? y[r] : m[r][k];
    sol[c] = det(t) / d;
  }
  return {sol[0] + 1.0, sol[1] + 1.0};
}

Outcome criterion1() {
  const auto ds = tinyDataset();
  const auto hp = tinyHyper();
  const auto tables = buildFieldTables(ds, hp);
  PosteriorOracle oracle(ds, hp);
  double worst = 0.0;
  std::size_t compared = 0;
  auto diff = [&](double a, double b) {
    worst = std::max(worst, std::abs(a - b));
    ++compared;
  };
  // Random valid states plus states visited by a chain.
  std::vector<LatentState> states;
  StreamRng rng(2024);
  for (int k = 0; k < 300; ++k) states.push_back(randomValidState(ds, hp.n_pop, rng));
  GibbsSampler chain(ds, tables, hp, 77, initState(ds, tables, hp, 77));
  for (int k = 0; k < 300; ++k) {
    chain.sweep();
    states.push_back(chain.state());
  }
  for (const auto& s : states) {
    GibbsSampler g(ds, tables, hp, 1, s);
    for (std::size_t i = 0; i < ds.numLists(); ++i)
      for (std::size_t f = 0; f < ds.numFields(); ++f) {
        const auto bp = g.betaConditional(i, f);
        const auto [A, B] = fitBetaKernel([&](double b) { return oracle.betaLogKernel(s, i, f, b); });
        diff(bp.shape_a, A);
        diff(bp.shape_b, B);
      }
    for (std::size_t r = 0; r < ds.numRecords(); ++r) {
      for (std::size_t f = 0; f < ds.numFields(); ++f) diff(g.zConditional(r, f), oracle.zConditional(s, r, f));
      const auto want = oracle.lambdaConditional(s, r);
      const auto got = g.lambdaConditional(r);
      std::vector<double> sparse(hp.n_pop, 0.0);
      for (const auto& [v, pr] : g.lambdaCandidates(r)) sparse[v] = pr;
      for (std::size_t v = 0; v < hp.n_pop; ++v) {
        diff(got[v], want[v]);
        diff(sparse[v], want[v]);
      }
    }
    for (std::size_t v = 0; v < hp.n_pop; ++v)
      for (std::size_t f = 0; f < ds.numFields(); ++f) {
        const auto want = oracle.yConditional(s, v, f);
        const auto got = g.yConditional(v, f);
        for (std::size_t w = 0; w < want.size(); ++w) diff(got[w], want[w]);
      }
  }
  const bool ok = worst <= 1e-9;
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::to_string(compared) + " conditional entries over " + std::to_string(states.size()) +
              " states, max |diff| = " + fmt("%.3g", worst)};
}

Outcome criterion2() {
  const auto ds = tinyDataset();
  const auto hp = tinyHyper();
  PosteriorOracle oracle(ds, hp);
  const auto exact = oracle.lambdaMarginal();
  SamplerConfig cfg;
  cfg.sweeps = 200000;
  cfg.seed = 2;
  const auto log = runSampler(ds, hp, cfg);
  std::vector<double> freq(exact.size(), 0.0);
  for (std::size_t s = 0; s < log.numSnapshots(); ++s)
    freq[PosteriorOracle::encodeLambda(log.snapshot(s), hp.n_pop)] += 1.0;
  double tv = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k)
    tv += 0.5 * std::abs(freq[k] / static_cast<double>(log.numSnapshots()) - exact[k]);
  return {tv <= 0.02 ? Outcome::Pass : Outcome::Fail,
          "TV over " + std::to_string(exact.size()) + " lambda configurations = " + fmt("%.4f", tv) + " (limit 0.02)"};
}

struct SyntheticPaths {
  fs::path csv, schema;
};

SyntheticPaths syntheticData() {
  SyntheticPaths p{workdir / "synthetic.csv", workdir / "synthetic.schema"};
  if (!fs::exists(p.csv)) {
    const int rc = sh(cli() + " gen --n-records 500 --n-duplicates 50 --string-error 1.0 --cat-error 0.05 --seed 1" +
                      " --out " + p.csv.string() + " --schema " + p.schema.string());
    if (rc != 0) throw Error("gen failed with status " + std::to_string(rc));
  }
  return p;
}

Outcome criterion3() {
  const auto data = syntheticData();
  const auto log_dir = workdir / "c3_log";
  const auto est = workdir / "c3_estimate.json";
  const auto metrics = workdir / "c3_metrics.json";
  int rc = sh(cli() + " run --quiet --input " + data.csv.string() + " --schema " + data.schema.string() +
              " --a 1 --b 99 --c 1 --distance edit --npop 500 --iters 100000 --thin 10 --seed 1 --out " +
              log_dir.string());
  if (rc == 0) rc = sh(cli() + " estimate --input " + log_dir.string() + " --out " + est.string());
  if (rc == 0)
    rc = sh(cli() + " evaluate --partition " + est.string() + " --input " + data.csv.string() + " --schema " +
            data.schema.string() + " --out " + metrics.string());
  if (rc != 0) return {Outcome::Fail, "pipeline exited with status " + std::to_string(rc)};
  const auto j = nlohmann::json::parse(readFile(metrics.string()));
  const double f_nr = j.at("fnr").get<double>(), f_dr = j.at("fdr").get<double>();
  const auto summary = nDistinctSummary(readSampleLog(log_dir));
  const bool ok = f_nr <= 0.10 && f_dr <= 0.10 && std::abs(summary.mean - 450.0) <= 15.0;
  return {ok ? Outcome::Pass : Outcome::Fail,
          "FNR " + fmt("%.3f", f_nr) + " (<= 0.10), FDR " + fmt("%.3f", f_dr) + " (<= 0.10), N_distinct mean " +
              fmt("%.1f", summary.mean) + " sd " + fmt("%.1f", summary.sd) + " (450 +/- 15)"};
}

Outcome criterion4() {
  const char* csv = std::getenv("EBRL_RLDATA500");
  const char* schema = std::getenv("EBRL_RLDATA500_SCHEMA");
  if (!csv || !schema) return {Outcome::Skip, "real data not supplied (set EBRL_RLDATA500 and EBRL_RLDATA500_SCHEMA)"};
  const auto log_dir = workdir / "c4_log";
  const auto est = workdir / "c4_estimate.json";
  const auto metrics = workdir / "c4_metrics.json";
  int rc = sh(cli() + " run --quiet --input " + csv + " --schema " + schema +
              " --a 1 --b 99 --c 1 --distance edit --iters 400000 --thin 10 --seed 1 --out " + log_dir.string());
  if (rc == 0) rc = sh(cli() + " estimate --input " + log_dir.string() + " --out " + est.string());
  if (rc == 0)
    rc = sh(cli() + " evaluate --partition " + est.string() + " --input " + csv + " --schema " + schema +
            " --out " + metrics.string());
  if (rc != 0) return {Outcome::Fail, "pipeline exited with status " + std::to_string(rc)};
  const auto j = nlohmann::json::parse(readFile(metrics.string()));
  const double f_nr = j.at("fnr").get<double>(), f_dr = j.at("fdr").get<double>();
  const auto s = nDistinctSummary(readSampleLog(log_dir));
  const bool ok = std::abs(f_nr - 0.02) <= 0.03 && std::abs(f_dr - 0.04) <= 0.04 && std::abs(s.mean - 449.0) <= 10.0 &&
                  std::abs(s.sd - 7.2) <= 4.0;
  return {ok ? Outcome::Pass : Outcome::Fail, "FNR " + fmt("%.3f", f_nr) + ", FDR " + fmt("%.3f", f_dr) +
                                                  ", N_distinct " + fmt("%.1f", s.mean) + " sd " + fmt("%.1f", s.sd)};
}

Outcome criterion5() {
  const auto data = syntheticData();
  const auto ds = loadInput(data.csv.string(), data.schema.string());
  std::ostringstream detail;
  bool ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    double means[2];
    const std::pair<double, double> ab[2] = {{1.0, 9.0}, {0.2, 99.8}};
    for (int k = 0; k < 2; ++k) {
      Hyperparams hp;
      hp.a = ab[k].first;
      hp.b = ab[k].second;
      hp.c = 1.0;
      hp.n_pop = ds.numRecords();
      SamplerConfig cfg;
      cfg.sweeps = 10000;
      cfg.seed = seed;
      cfg.record_lambda = false;
      means[k] = nDistinctSummary(runSampler(ds, hp, cfg)).mean;
    }
    ok = ok && means[0] < means[1];
    detail << (seed == 1 ? "" : "; ") << "seed " << seed << ": (1,9) " << fmt("%.1f", means[0]) << " vs (0.2,99.8) "
           << fmt("%.1f", means[1]);
  }
  return {ok ? Outcome::Pass : Outcome::Fail, detail.str()};
}

Outcome criterion6() {
  std::size_t valid = 0;
  const std::size_t logs = 1000;
  for (std::size_t k = 0; k < logs; ++k) {
    StreamRng rng(6, k, Block::Check, 0);
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 12);
    const std::size_t snaps = 1 + static_cast<std::size_t>(rng.uniform() * 50);
    const std::size_t labels = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    std::vector<std::vector<Index>> ss(snaps, std::vector<Index>(n));
    for (auto& s : ss)
      for (auto& v : s) v = static_cast<Index>(rng.uniform() * static_cast<double>(labels));
    const auto p = sharedMPMMSLinkage(SampleLog::fromSnapshots(n, ss));
    if (!p.validate() && p.n_records == n) ++valid;
  }
  // A/B/C: {AB}{C} x2, {A}{BC} x2, {ABC} x1.
  const auto log = SampleLog::fromSnapshots(3, {{0, 0, 1}, {0, 0, 1}, {0, 1, 1}, {0, 1, 1}, {0, 0, 0}});
  const auto links = thresholdLinks(pairwiseMatchProbs(log), 0.5);
  const std::set<RecordPair> linked(links.begin(), links.end());
  const bool naive_intransitive = linked.count({0, 1}) && linked.count({1, 2}) && !linked.count({0, 2});
  const auto est = sharedMPMMSLinkage(log);
  const auto lab = est.labels();
  bool est_transitive = true;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        if (lab[a] == lab[b] && lab[b] == lab[c] && lab[a] != lab[c]) est_transitive = false;
  const bool ok = valid == logs && naive_intransitive && est_transitive && !est.validate();
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::to_string(valid) + "/" + std::to_string(logs) + " random logs gave valid partitions; thresholding links " +
              (naive_intransitive ? "A-B and B-C but not A-C" : "transitively") + "; estimate has " +
              std::to_string(est.clusters.size()) + " clusters"};
}

Outcome criterion7() {
  bool ok = true;
  std::ostringstream detail;
  for (const auto& s : categoricalBoundSweep(7, 10000)) {
    ok = ok && s.ok();
    detail << s.name << " " << s.passed << "/" << s.trials << " (worst margin " << fmt("%.3g", s.worst_margin) << "); ";
  }
  const double f1 = fanoBound(0.0, 2), f2 = fanoBound(std::log(2.0), 16), f3 = fanoBound(1.0, 100);
  const double e3 = 1.0 - (1.0 + std::log(2.0)) / std::log(100.0);
  const bool fano = std::abs(f1) <= 1e-15 && std::abs(f2 - 0.5) <= 1e-15 && std::abs(f3 - e3) <= 1e-15;
  ok = ok && fano;
  detail << "fano " << (fano ? "3/3" : "mismatch");
  return {ok ? Outcome::Pass : Outcome::Fail, detail.str()};
}

Outcome criterion8() {
  const auto data = syntheticData();
  const auto ds = loadInput(data.csv.string(), data.schema.string());
  Hyperparams hp;
  hp.n_pop = ds.numRecords();
  const auto tables = buildFieldTables(ds, hp);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t f = 0; f < ds.numFields(); ++f) {
    if (!tables.isString(f)) continue;
    for (std::size_t w = 0; w < ds.vocab[f].size(); ++w, ++checked)
      worst = std::max(worst, std::abs(distanceMGF(f, static_cast<Index>(w), tables) * tables.stringTable(f).h[w] - 1.0));
  }
  return {worst <= 1e-12 && checked > 0 ? Outcome::Pass : Outcome::Fail,
          std::to_string(checked) + " vocabulary entries, max |MGF*h - 1| = " + fmt("%.3g", worst)};
}

Outcome criterion9() {
  std::vector<int> singles{0, 1, 2, 3, 4, 5}, truth{0, 0, 1, 1, 2, 3};
  const auto c = confusionCounts(LinkagePartition::fromLabels(singles), LinkagePartition::fromLabels(truth));
  const double v = fdr(c);
  return {v == 0.0 && c.cl + c.fp == 0 ? Outcome::Pass : Outcome::Fail, "FDR with no estimated links = " + fmt("%g", v)};
}

Outcome criterion10() {
  const auto data = syntheticData();
  std::string bins[2];
  for (int k = 0; k < 2; ++k) {
    const auto dir = workdir / ("c10_run" + std::to_string(k));
    const int rc = sh(cli() + " run --quiet --input " + data.csv.string() + " --schema " + data.schema.string() +
                      " --iters 300 --seed 12345 --out " + dir.string());
    if (rc != 0) return {Outcome::Fail, "run exited with status " + std::to_string(rc)};
    bins[k] = readFile((dir / "lambda.bin").string());
  }
  const bool ok = bins[0] == bins[1] && !bins[0].empty();
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::to_string(bins[0].size()) + "-byte snapshot files " + (ok ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--workdir" && k + 1 < argc) workdir = argv[++k];
    else if (a == "--only" && k + 1 < argc) only = std::stoi(argv[++k]);
    else {
      std::cerr << "usage: acceptance [--workdir DIR] [--only N]\n";
      return 2;
    }
  }
  fs::remove_all(workdir);
  fs::create_directories(workdir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact-conditional oracle equivalence", criterion1},
      {"stationarity on the tiny instance", criterion2},
      {"synthetic 500-record run", criterion3},
      {"real-data reproduction", criterion4},
      {"sensitivity ordering over (a,b)", criterion5},
      {"MPMMS partition properties", criterion6},
      {"KL bound suite", criterion7},
      {"MGF times h equals one", criterion8},
      {"FDR with no estimated links", criterion9},
      {"determinism of run", criterion10},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only && static_cast<int>(k + 1) != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.kind == Outcome::Pass ? "PASS" : o.kind == Outcome::Skip ? "SKIP" : "FAIL";
    if (o.kind == Outcome::Fail) ++failed;
    std::cout << "[" << tag << "] " << k + 1 << ". " << criteria[k].first << ": " << o.detail << " ("
              << fmt("%.1f", secs) << " s)" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
