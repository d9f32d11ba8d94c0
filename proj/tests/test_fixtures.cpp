// Tests pinned to the May-2023 fixture snapshots shipped under fixtures/.

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ttpc/capec.hpp"
#include "ttpc/dataset.hpp"
#include "ttpc/generic.hpp"
#include "ttpc/metrics.hpp"
#include "ttpc/prompt.hpp"
#include "ttpc/sft.hpp"
#include "ttpc/stix.hpp"
#include "ttpc/tokenizer.hpp"

using namespace ttpc;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(TTPC_SOURCE_DIR) / "fixtures";

const AttackParseResult& attack_fixture() {
  static AttackParseResult res =
      parse_attack_bundle_file(kFixtures / "attack_bundle_2023_05.json");
  return res;
}

}  // namespace

TEST_CASE("attack fixture: 618 records with the reference per-tactic supports") {
  const auto& res = attack_fixture();
  REQUIRE(res.records.size() == 618);

  // supports over all records (gold positives per tactic)
  std::array<int, kTacticCount> supports{};
  for (const auto& r : res.records)
    for (int t = 0; t < kTacticCount; ++t)
      if (r.gold.get(tactic_at(t))) supports[t]++;

  CHECK(supports[int(Tactic::Collection)] == 38);
  CHECK(supports[int(Tactic::CommandAndControl)] == 40);
  CHECK(supports[int(Tactic::CredentialAccess)] == 64);
  CHECK(supports[int(Tactic::DefenseEvasion)] == 185);
  CHECK(supports[int(Tactic::Discovery)] == 45);
  CHECK(supports[int(Tactic::Execution)] == 37);
  CHECK(supports[int(Tactic::Exfiltration)] == 19);
  CHECK(supports[int(Tactic::Impact)] == 26);
  CHECK(supports[int(Tactic::InitialAccess)] == 20);
  CHECK(supports[int(Tactic::LateralMovement)] == 23);
  CHECK(supports[int(Tactic::Persistence)] == 114);
  CHECK(supports[int(Tactic::PrivilegeEscalation)] == 97);
  CHECK(supports[int(Tactic::Reconnaissance)] == 43);
  CHECK(supports[int(Tactic::ResourceDevelopment)] == 45);

  SUBCASE("impact never overlaps another tactic") {
    for (const auto& r : res.records)
      if (r.gold.get(Tactic::Impact)) CHECK(r.gold.count() == 1);
  }

  SUBCASE("privilege escalation: sole tactic in 3 of 97") {
    std::vector<LabelVector> gold;
    for (const auto& r : res.records) gold.push_back(r.gold);
    OverlapMatrix m = overlap_matrix(gold);
    const int pe = int(Tactic::PrivilegeEscalation);
    CHECK(m.counts[pe][pe] == 3);
    CHECK(m.totals[pe] == 97);
  }
}

TEST_CASE("attack fixture: exactly six descriptions exceed the 512-token budget") {
  const auto& res = attack_fixture();
  std::vector<std::string> texts;
  for (const auto& r : res.records) texts.push_back(r.text);
  Tokenizer tk = Tokenizer::build(texts, 12000);

  int truncated = 0;
  for (const auto& r : res.records) {
    Tokenized t = prepare_inputs(r, tk, 512);
    if (t.truncated) ++truncated;
  }
  CHECK(truncated == 6);
}

TEST_CASE("capec fixture: 177 mapped patterns out of 593") {
  const auto& attack = attack_fixture();
  CapecParseResult res = parse_capec_catalog_file(
      kFixtures / "capec_catalog_2023_05.xml", attack.technique_index);
  CHECK(res.records.size() == 177);
  CHECK(res.total_patterns == 593);

  // every gold set is the union of the referenced techniques' tactics
  for (const auto& trace : res.report.trace) {
    std::set<Tactic> expected;
    for (const auto& tid : trace.evidence) {
      auto it = attack.technique_index.find(tid);
      REQUIRE(it != attack.technique_index.end());
      expected.insert(it->second.begin(), it->second.end());
    }
    const auto* rec = [&]() -> const DescriptionRecord* {
      for (const auto& r : res.records)
        if (r.id == trace.record_id) return &r;
      return nullptr;
    }();
    REQUIRE(rec != nullptr);
    CHECK(tactics_from_vector(rec->gold) == expected);
  }
}

TEST_CASE("generic fixture: 100 reviews in both encodings, identical records") {
  auto txt = load_generic_corpus(kFixtures / "generic_reviews.txt");
  auto jsonl = load_generic_corpus(kFixtures / "generic_reviews.jsonl");
  REQUIRE(txt.records.size() == 100);
  REQUIRE(jsonl.records.size() == 100);
  for (size_t i = 0; i < 100; ++i) {
    CHECK(txt.records[i].id == jsonl.records[i].id);
    CHECK(txt.records[i].text == jsonl.records[i].text);
    CHECK(txt.records[i].gold.none());
  }
}

TEST_CASE("shipped template files match the built-in defaults") {
  PromptTemplate from_file =
      PromptTemplate::from_file(kFixtures / "templates" / "default_prompt.txt");
  CHECK(from_file.skeleton == PromptTemplate::default_template().skeleton);
  CHECK_FALSE(from_file.strict);

  PromptTemplate strict =
      PromptTemplate::from_file(kFixtures / "templates" / "strict_prompt.txt");
  CHECK(strict.skeleton == PromptTemplate::strict_template().skeleton);
  CHECK(strict.strict);
}

TEST_CASE("threshold rule: probability exactly 0.5 maps to 0") {
  float probs[kTacticCount] = {};
  probs[0] = 0.5f;
  probs[1] = 0.500001f;
  probs[2] = 0.4999f;
  LabelVector v = binarize_probs(probs, 0.5);
  CHECK_FALSE(v.get(tactic_at(0)));  // exactly 0.5 -> 0
  CHECK(v.get(tactic_at(1)));
  CHECK_FALSE(v.get(tactic_at(2)));

  SUBCASE("monotone: raising one probability never clears a set bit") {
    LabelVector before = binarize_probs(probs, 0.5);
    probs[5] = 0.9f;
    LabelVector after = binarize_probs(probs, 0.5);
    CHECK((before.mask() & after.mask()) == before.mask());
  }
}

TEST_CASE("replay manifests agree with the parsed dataset order") {
  const auto& attack = attack_fixture();
  std::ifstream mf(kFixtures / "llm_replay" / "gpt35_attack" / "manifest.json");
  REQUIRE(mf.good());
  auto manifest = nlohmann::json::parse(mf);
  CHECK(manifest.at("record_count").get<size_t>() == attack.records.size());
  CHECK(manifest.at("batch_size").get<int>() == 20);
  CHECK(manifest.at("expected").at("micro_f1_2dp").get<std::string>() == "0.67");
  CHECK(manifest.at("expected").at("accuracy_2dp").get<std::string>() == "0.44");
}
