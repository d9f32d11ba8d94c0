#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ttpc/cli.hpp"
#include "ttpc/dataset.hpp"
#include "ttpc/predictions.hpp"
#include "ttpc/tactics.hpp"

using namespace ttpc;
namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"ttpc"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  return cli::run(int(argv.size()), argv.data());
}

fs::path work_dir() {
  fs::path dir = fs::temp_directory_path() / "ttpc_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::vector<DescriptionRecord> tiny_records() {
  std::vector<DescriptionRecord> records;
  for (int i = 0; i < 8; ++i) {
    DescriptionRecord r;
    r.id = "T" + std::to_string(100 + i);
    r.source = Source::Attack;
    r.text = "Synthetic behavior " + std::to_string(i) + ".";
    r.gold.set(tactic_at(i % kTacticCount));
    records.push_back(r);
  }
  return records;
}

}  // namespace

TEST_CASE("cli: exit codes") {
  // validation error: nonexistent dataset
  CHECK(run_cli({"split", "--dataset", "/nonexistent/x.jsonl"}) != 0);
  // parse error: bad subcommand
  CHECK(run_cli({"frobnicate"}) == 2);
  // ok: help-free basic flow below returns 0
}

TEST_CASE("cli: split writes a deterministic assignment") {
  fs::path dir = work_dir();
  fs::path ds = dir / "ds.jsonl";
  save_dataset(tiny_records(), ds);

  fs::path out1 = dir / "folds1.json";
  fs::path out2 = dir / "folds2.json";
  CHECK(run_cli({"split", "--dataset", ds.string(), "--k", "2", "--seed",
                 "42", "--out", out1.string()}) == 0);
  CHECK(run_cli({"split", "--dataset", ds.string(), "--k", "2", "--seed",
                 "42", "--out", out2.string()}) == 0);

  std::ifstream f1(out1), f2(out2);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  CHECK(run_cli({"split", "--dataset", ds.string(), "--k", "9999", "--out",
                 (dir / "bad.json").string()}) == 2);
}

TEST_CASE("cli: score and overlap on hand-made predictions") {
  fs::path dir = work_dir();
  fs::path ds = dir / "score_ds.jsonl";
  auto records = tiny_records();
  save_dataset(records, ds);

  // perfect predictions
  std::vector<PredictionRecord> preds;
  for (const auto& r : records) {
    PredictionRecord p;
    p.record_id = r.id;
    p.model_id = "oracle";
    p.predicted = r.gold;
    preds.push_back(p);
  }
  fs::path pp = dir / "preds.jsonl";
  save_predictions(preds, pp);

  CHECK(run_cli({"score", "--dataset", ds.string(), "--preds", pp.string(),
                 "--out", (dir / "metrics").string()}) == 0);
  std::ifstream mf(dir / "metrics.json");
  std::string metrics((std::istreambuf_iterator<char>(mf)), {});
  CHECK(metrics.find("\"micro_f1\": 1.0") != std::string::npos);

  CHECK(run_cli({"overlap", "--dataset", ds.string(), "--csv",
                 (dir / "ov.csv").string(), "--svg",
                 (dir / "ov.svg").string()}) == 0);
  CHECK(fs::exists(dir / "ov.csv"));
  CHECK(fs::exists(dir / "ov.svg"));

  SUBCASE("coverage gap names the missing ids") {
    preds.pop_back();
    fs::path short_preds = dir / "short.jsonl";
    save_predictions(preds, short_preds);
    CHECK(run_cli({"score", "--dataset", ds.string(), "--preds",
                   short_preds.string(), "--out",
                   (dir / "m2").string()}) == 2);
  }

  SUBCASE("compare of identical prediction files has no disagreements") {
    CHECK(run_cli({"compare", "--dataset", ds.string(), "--a", pp.string(),
                   "--b", pp.string(), "--out-dir",
                   (dir / "cmp").string()}) == 0);
    std::ifstream cf(dir / "cmp" / "compare.json");
    std::string cmp((std::istreambuf_iterator<char>(cf)), {});
    CHECK(cmp.find("\"disagreements\": []") != std::string::npos);
  }
}

TEST_CASE("cli: predict-llm with the mock provider") {
  fs::path dir = work_dir();
  fs::path ds = dir / "llm_ds.jsonl";
  save_dataset(tiny_records(), ds);
  fs::path out = dir / "llm_preds.jsonl";
  CHECK(run_cli({"predict-llm", "--provider", "mock", "--model", "mock-1",
                 "--dataset", ds.string(), "--batch", "3", "--out",
                 out.string()}) == 0);
  auto preds = load_predictions(out);
  REQUIRE(preds.size() == 8);
  for (const auto& p : preds) CHECK(p.predicted.none());
  CHECK(fs::exists(dir / "llm_preds.jsonl.manifest.json"));
}
