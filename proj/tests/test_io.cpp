#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "ebrl/csv.hpp"
#include "ebrl/log_io.hpp"
#include "ebrl/schema.hpp"
#include "ebrl/strdist.hpp"
#include "ebrl/synthetic.hpp"

using namespace ebrl;
namespace fs = std::filesystem;

namespace {

fs::path scratchDir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = fs::temp_directory_path() / (std::string("ebrl_io_") + info->test_suite_name() + "_" + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void writeFile(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string expectIngestError(const std::string& csv) {
  try {
    parseCsv(csv);
  } catch (const IngestError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no error for: " << csv;
  return "";
}

}  // namespace

TEST(Csv, QuotingAndLineEndings) {
  const auto t = parseCsv("\xEF\xBB\xBF" "a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",\"two\nlines\"\r\n\n1,,3\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"x, y", "say \"hi\"", "two\nlines"}));
  EXPECT_EQ(t.rows[1], (std::vector<std::string>{"1", "", "3"}));
  EXPECT_EQ(parseCsv("a\n1").rows.size(), 1u);
}

TEST(Csv, ErrorsNameTheLine) {
  EXPECT_NE(expectIngestError("a,b\n1,2\n3\n").find("line 3"), std::string::npos);
  EXPECT_NE(expectIngestError("a,b\n1,\"open\n").find("line 2"), std::string::npos);
  EXPECT_NE(expectIngestError("a,b\n1,x\"y\n").find("line 2"), std::string::npos);
  EXPECT_FALSE(expectIngestError("").empty());
}

TEST(Csv, EscapeRoundTrip) {
  const std::vector<std::string> row{"plain", "with,comma", "q\"uote", "line\nbreak", ""};
  std::ostringstream out;
  writeCsvRow(out, {"a", "b", "c", "d", "e"});
  writeCsvRow(out, row);
  EXPECT_EQ(parseCsv(out.str()).rows.at(0), row);
  EXPECT_EQ(csvEscape("x"), "x");
  EXPECT_EQ(csvEscape("a\"b"), "\"a\"\"b\"");
}

TEST(Schema, ParsesKindsCommentsAndSections) {
  const auto spec = parseSchema("# fields\n[fields]\nfname = string\n\"by\" = 'categorical'  # year\n"
                                "src = list_id\nid = truth_id\n");
  ASSERT_EQ(spec.entries.size(), 4u);
  EXPECT_EQ(spec.entries[1].column, "by");
  EXPECT_EQ(spec.entries[1].role, ColumnRole::Categorical);
  EXPECT_EQ(spec.entries[3].line, 6u);
}

TEST(Schema, Errors) {
  auto err = [](const std::string& text) -> std::string {
    try {
      parseSchema(text);
    } catch (const IngestError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(err("a = string\nb = number\n").find("line 2"), std::string::npos);
  EXPECT_NE(err("a = string\na = categorical\n").find("already declared"), std::string::npos);
  EXPECT_NE(err("a = list_id\nb = list_id\n").find("list_id"), std::string::npos);
  EXPECT_NE(err("a = truth_id\nb = truth_id\n").find("truth_id"), std::string::npos);
  EXPECT_NE(err("just words\n").find("line 1"), std::string::npos);

  RawTable t = parseCsv("a,b\n1,2\n");
  try {
    resolveSchema(parseSchema("a = string\nzz = categorical\n"), t);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("'zz'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(resolveSchema(parseSchema("a = list_id\n"), t), IngestError);
}

TEST(Schema, RecordLinkageLayout) {
  const auto dir = scratchDir();
  writeFile(dir / "data.csv",
            "fname_c1,fname_c2,lname_c1,lname_c2,by,bm,bd,ent_id\n"
            "CARSTEN,,MEIER,,1949,7,22,34\n"
            "GERD,,BAUER,,1968,7,27,51\n"
            "ROBERT,,HARTMANN,,1930,4,30,115\n"
            "GERD,,BAUER,,1968,7,27,51\n");
  writeFile(dir / "data.schema",
            "fname_c1 = string\nlname_c1 = string\nby = categorical\nbm = categorical\nbd = categorical\n"
            "ent_id = truth_id\n");
  const auto ds = loadInput((dir / "data.csv").string(), (dir / "data.schema").string());
  const auto s = summarizeInput(ds);
  EXPECT_EQ(s.records, 4u);
  EXPECT_EQ(s.lists, 1u);
  EXPECT_EQ(s.string_fields, 2u);
  EXPECT_EQ(s.categorical_fields, 3u);
  EXPECT_NE(s.describe().find("p_s=2 p_c=3"), std::string::npos);
  EXPECT_TRUE(ds.hasTruth());
  EXPECT_EQ(ds.truth[3], "51");

  const auto other = loadInput((dir / "data.csv").string(), (dir / "data.schema").string(), "bm");
  EXPECT_EQ(other.truth[0], "7");
}

TEST(Schema, TwoListsAndMissingFiles) {
  const auto dir = scratchDir();
  writeFile(dir / "d.csv", "name,src\nA,x\nB,y\nC,x\n");
  writeFile(dir / "d.schema", "name = string\nsrc = list_id\n");
  EXPECT_EQ(loadInput((dir / "d.csv").string(), (dir / "d.schema").string()).numLists(), 2u);
  EXPECT_THROW(loadInput((dir / "nope.csv").string(), (dir / "d.schema").string()), IngestError);
  EXPECT_THROW(loadInput((dir / "d.csv").string(), (dir / "nope.schema").string()), IngestError);
}

TEST(Generator, ShapeAndTruth) {
  GenConfig cfg;
  const auto data = generateSynthetic(cfg);
  ASSERT_EQ(data.table.rows.size(), 500u);
  std::set<std::string> ids;
  for (const auto& row : data.table.rows) ids.insert(row.back());
  EXPECT_EQ(ids.size(), 450u);
  for (std::size_t r = 0; r < data.table.rows.size(); ++r) {
    const auto& row = data.table.rows[r];
    EXPECT_EQ(row.back(), data.table.rows[data.source[r]].back());
    if (data.source[r] != r) EXPECT_NE(row, data.table.rows[data.source[r]]);
  }
  RawTable t = data.table;
  auto schema = resolveSchema(parseSchema(data.schema), t);
  const auto ds = internDataset(t, schema);
  EXPECT_EQ(ds.numStringFields(), 2u);
  EXPECT_EQ(ds.numFields(), 5u);
  // names are mostly unique, so most alpha values sit near 1/500
  for (std::size_t f = 0; f < 2; ++f) {
    const auto alpha = buildEmpiricalDist(ds, f);
    std::size_t rare = 0;
    for (double a : alpha.probs) rare += a <= 3.0 / 500.0 ? 1 : 0;
    EXPECT_GT(static_cast<double>(rare), 0.95 * static_cast<double>(alpha.size())) << f;
  }

  cfg.num_lists = 2;
  const auto two = generateSynthetic(cfg);
  t = two.table;
  schema = resolveSchema(parseSchema(two.schema), t);
  EXPECT_EQ(internDataset(t, schema).numLists(), 2u);
}

TEST(Generator, DeterministicPerSeed) {
  GenConfig cfg;
  cfg.seed = 42;
  EXPECT_EQ(generateSynthetic(cfg).table.rows, generateSynthetic(cfg).table.rows);
  auto other = cfg;
  other.seed = 43;
  EXPECT_NE(generateSynthetic(cfg).table.rows, generateSynthetic(other).table.rows);
}

TEST(Generator, ValidatesConfig) {
  GenConfig cfg;
  cfg.string_error = 0.0;
  cfg.cat_error = 0.0;
  EXPECT_THROW(generateSynthetic(cfg), Error);
  cfg = GenConfig{};
  cfg.n_duplicates = 500;
  EXPECT_THROW(generateSynthetic(cfg), Error);
  cfg = GenConfig{};
  cfg.cat_error = 1.5;
  EXPECT_THROW(generateSynthetic(cfg), Error);
  cfg = GenConfig{};
  cfg.fields[0].pool.clear();
  EXPECT_THROW(generateSynthetic(cfg), Error);
}

TEST(Generator, PerturbationDistance) {
  std::poisson_distribution<std::size_t> edits(1.0);
  double total = 0.0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    StreamRng rng(99, static_cast<std::uint64_t>(k));
    const std::string base = "SCHMIDT";
    const std::size_t e = edits(rng);
    const auto s = perturbString(base, e, rng);
    const auto d = editDistance(base, s);
    ASSERT_LE(d, e);
    total += static_cast<double>(d);
    StreamRng one(7, static_cast<std::uint64_t>(k));
    ASSERT_EQ(editDistance(base, perturbString(base, 1, one)), 1u);
  }
  const double mean = total / draws;
  EXPECT_GT(mean, 0.85);
  EXPECT_LE(mean, 1.0);
  StreamRng rng(1);
  EXPECT_EQ(perturbString("A", 1, rng).empty(), false);
}

namespace {

SampleLog sampleLog() {
  auto log = SampleLog::fromSnapshots(4, {{0, 0, 2, 3}, {1, 1, 1, 3}, {0, 1, 2, 3}});
  log.n_pop = 5;
  log.hp = Hyperparams{2.0, 50.0, 1.5, 5, Distance::JaroWinkler};
  log.num_lists = 2;
  log.num_fields = 2;
  log.thin = 3;
  log.seed = 77;
  log.beta_trace = {0.1, 0.2, 0.3, 1.0 / 3.0, 0.5, 0.6, 0.7, 0.8, 0.9, 0.01, 0.02, 1e-300};
  return log;
}

}  // namespace

TEST(SampleLogIO, RoundTrip) {
  const auto dir = scratchDir() / "log";
  const auto log = sampleLog();
  writeSampleLog(log, dir);
  EXPECT_EQ(fs::file_size(dir / "lambda.bin"), log.numSnapshots() * log.num_records * 4);
  const auto back = readSampleLog(dir);
  EXPECT_EQ(back, log);

  auto plain = log;
  plain.beta_trace.clear();
  writeSampleLog(plain, dir);
  EXPECT_EQ(readSampleLog(dir), plain);
}

TEST(SampleLogIO, CorruptionIsDetected) {
  const auto dir = scratchDir() / "log";
  writeSampleLog(sampleLog(), dir);
  const auto bin = readFile((dir / "lambda.bin").string());
  writeFile(dir / "lambda.bin", bin.substr(0, bin.size() - 4));
  EXPECT_THROW(readSampleLog(dir), Error);

  writeSampleLog(sampleLog(), dir);
  writeFile(dir / "manifest.json", "{\"format\": \"ebrl-sample-log\", \"N\": 4");
  EXPECT_THROW(readSampleLog(dir), Error);
  writeFile(dir / "manifest.json", "{\"format\": \"something-else\"}");
  EXPECT_THROW(readSampleLog(dir), Error);
  writeFile(dir / "manifest.json", "{\"format\": \"ebrl-sample-log\", \"N\": 4}");
  EXPECT_THROW(readSampleLog(dir), Error);

  writeSampleLog(sampleLog(), dir);
  auto big = readFile((dir / "lambda.bin").string());
  big[0] = '\x09';
  writeFile(dir / "lambda.bin", big);
  EXPECT_THROW(readSampleLog(dir), Error);

  writeSampleLog(sampleLog(), dir);
  auto diag = readFile((dir / "diagnostics.csv").string());
  diag.replace(diag.find("\n1,") + 3, 1, "x");
  writeFile(dir / "diagnostics.csv", diag);
  EXPECT_THROW(readSampleLog(dir), Error);
  EXPECT_THROW(readSampleLog(dir / "missing"), Error);
}

TEST(PartitionIO, JsonRoundTripAndValidation) {
  const auto p = LinkagePartition::fromLabels(std::vector<int>{3, 1, 3, 2, 1});
  EXPECT_EQ(parsePartitionJson(partitionJson(p)), p);
  EXPECT_EQ(partitionJson(p), "{\"n_records\":5,\"clusters\":[[0,2],[1,4],[3]]}\n");
  EXPECT_EQ(partitionCsv(p), "record,cluster\n0,0\n1,1\n2,0\n3,2\n4,1\n");
  EXPECT_THROW(parsePartitionJson("{\"n_records\":3,\"clusters\":[[0,1]]}"), Error);
  EXPECT_THROW(parsePartitionJson("{\"n_records\":2,\"clusters\":[[0,1],[1]]}"), Error);
  EXPECT_THROW(parsePartitionJson("[1,2"), Error);
}
