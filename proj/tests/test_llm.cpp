#include <doctest.h>

#include <filesystem>

#include "ttpc/errors.hpp"
#include "ttpc/llm_run.hpp"
#include "ttpc/prompt.hpp"
#include "ttpc/provider.hpp"
#include "ttpc/rng.hpp"

using namespace ttpc;
namespace fs = std::filesystem;

namespace {

std::vector<DescriptionRecord> small_dataset(int n) {
  std::vector<DescriptionRecord> out;
  for (int i = 0; i < n; ++i) {
    DescriptionRecord r;
    r.id = "T" + std::to_string(7000 + i);
    r.source = Source::Attack;
    r.text = "Synthetic description number " + std::to_string(i) +
             " about adversary behavior.";
    r.gold.set(tactic_at(i % kTacticCount));
    out.push_back(r);
  }
  return out;
}

RetryPolicy fast_retry() {
  RetryPolicy rp;
  rp.sleep = false;
  return rp;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("build_prompt structure") {
  PromptTemplate tmpl = PromptTemplate::default_template();
  RenderedPrompt p = build_prompt(tmpl, {"First description."});

  // the NONE instruction and the format line are part of the contract
  CHECK(p.text.find("If a description does not relate") != std::string::npos);
  CHECK(p.text.find("Tactic(s):") != std::string::npos);
  CHECK(p.text.find("1. ```First description.```") != std::string::npos);

  // all 14 tactic names listed
  for (const auto& name : tactic_canonical_names())
    CHECK(p.text.find("- " + name) != std::string::npos);

  SUBCASE("two descriptions get two numbered blocks") {
    RenderedPrompt p2 = build_prompt(tmpl, {"First one.", "Second one."});
    CHECK(p2.text.find("1. ```First one.```") != std::string::npos);
    CHECK(p2.text.find("2. ```Second one.```") != std::string::npos);
  }

  SUBCASE("strict template ends with the ONLY-print sentence") {
    PromptTemplate strict = PromptTemplate::strict_template();
    RenderedPrompt ps = build_prompt(strict, {"One."});
    const std::string suffix =
        "Do NOT add any other information in your answer and ONLY print the "
        "tactics' names.";
    const size_t at = ps.text.rfind(suffix);
    REQUIRE(at != std::string::npos);
    // nothing but whitespace after it
    for (size_t i = at + suffix.size(); i < ps.text.size(); ++i)
      CHECK(std::isspace(static_cast<unsigned char>(ps.text[i])));
  }

  SUBCASE("embedded triple backticks are escaped with a warning") {
    RenderedPrompt pe = build_prompt(tmpl, {"bad ``` fence inside"});
    CHECK(pe.warnings.size() == 1);
    CHECK(pe.text.find("bad ``` fence") == std::string::npos);
  }

  SUBCASE("empty input is invalid") {
    CHECK_THROWS_AS(build_prompt(tmpl, {}), Error);
    CHECK_THROWS_AS(build_prompt(tmpl, {""}), Error);
  }

  SUBCASE("deterministic rendering") {
    RenderedPrompt again = build_prompt(tmpl, {"First description."});
    CHECK(again.text == p.text);
  }
}

TEST_CASE("parse_response") {
  SUBCASE("known labels") {
    auto slots =
        parse_response("Tactic(s): LATERAL_MOVEMENT, DEFENSE_EVASION", 1);
    REQUIRE(slots.size() == 1);
    CHECK(slots[0].tactics ==
          std::set<Tactic>{Tactic::LateralMovement, Tactic::DefenseEvasion});
    CHECK(slots[0].unknowns.empty());
    CHECK(slots[0].conforming);
  }

  SUBCASE("NONE") {
    auto slots = parse_response("Tactic(s): NONE", 1);
    REQUIRE(slots.size() == 1);
    CHECK(slots[0].tactics.empty());
    CHECK(slots[0].unknowns.empty());
  }

  SUBCASE("unknown label carried through") {
    auto slots = parse_response("Tactic(s): Remote-Access", 1);
    REQUIRE(slots.size() == 1);
    CHECK(slots[0].tactics.empty());
    REQUIRE(slots[0].unknowns.size() == 1);
    CHECK(slots[0].unknowns[0] == "Remote-Access");
  }

  SUBCASE("numbered multi-line answers in order") {
    auto slots = parse_response(
        "1. Tactic(s): IMPACT\n2. Tactic(s): NONE\n3. Tactic(s): DISCOVERY, "
        "RECONNAISSANCE\n",
        3);
    REQUIRE(slots.size() == 3);
    CHECK(slots[0].tactics == std::set<Tactic>{Tactic::Impact});
    CHECK(slots[1].tactics.empty());
    CHECK(slots[2].tactics ==
          std::set<Tactic>{Tactic::Discovery, Tactic::Reconnaissance});
  }

  SUBCASE("missing lines flagged non-conforming, never padded silently") {
    auto slots = parse_response("Tactic(s): IMPACT\n", 3);
    REQUIRE(slots.size() == 3);
    CHECK(slots[0].conforming);
    CHECK_FALSE(slots[1].conforming);
    CHECK_FALSE(slots[2].conforming);
  }

  SUBCASE("prose-wrapped answers still parse (Bard-style)") {
    auto slots = parse_response(
        "Sure! Here is my analysis.\n"
        "The first description maps as follows.\n"
        "Tactic(s): PERSISTENCE\n"
        "Some trailing commentary.\n",
        1);
    REQUIRE(slots.size() == 1);
    CHECK(slots[0].tactics == std::set<Tactic>{Tactic::Persistence});
  }

  SUBCASE("zero parseable lines is a parse error carrying the raw text") {
    try {
      parse_response("I cannot help with that.", 1);
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.kind == ErrKind::Parse);
      CHECK(std::string(e.what()).find("I cannot help with that.") !=
            std::string::npos);
    }
  }

  SUBCASE("round trip: format then parse recovers the answer") {
    Rng rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
      std::set<Tactic> s;
      const int n = int(rng.bounded(4));
      for (int i = 0; i < n; ++i) s.insert(tactic_at(int(rng.bounded(14))));
      LabelVector v = vector_from_tactics(s);
      auto slots = parse_response(format_answer_line(v), 1);
      REQUIRE(slots.size() == 1);
      CHECK(slots[0].tactics == s);
      CHECK(slots[0].unknowns.empty());
    }
  }
}

TEST_CASE("query: cache contract and retries") {
  SUBCASE("mock echoes and cache turns the second call into a hit") {
    auto cache_dir = fresh_dir("ttpc_cache_test");
    ScriptedProvider provider({"Tactic(s): IMPACT"});
    ResponseCache cache(cache_dir);
    LlmRunStats stats;

    QueryResult r1 = query(provider, "m1", "prompt text", &cache, fast_retry(), &stats);
    CHECK(r1.text == "Tactic(s): IMPACT");
    CHECK_FALSE(r1.cache_hit);
    CHECK(stats.api_calls == 1);

    QueryResult r2 = query(provider, "m1", "prompt text", &cache, fast_retry(), &stats);
    CHECK(r2.cache_hit);
    CHECK(r2.text == r1.text);
    CHECK(stats.api_calls == 1);  // no new provider call
    CHECK(provider.calls_made() == 1);
  }

  SUBCASE("429 twice then success, retry count logged") {
    ScriptedProvider provider({"Tactic(s): NONE"});
    provider.inject_transient_failures(0, 2);
    LlmRunStats stats;
    QueryResult r = query(provider, "m1", "p", nullptr, fast_retry(), &stats);
    CHECK(r.text == "Tactic(s): NONE");
    CHECK(r.retries == 2);
    CHECK(stats.retries == 2);
  }

  SUBCASE("retries exhausted surfaces the transient error") {
    ScriptedProvider provider({"never reached"});
    provider.inject_transient_failures(0, 99);
    RetryPolicy rp = fast_retry();
    rp.max_attempts = 3;
    CHECK_THROWS_AS(query(provider, "m", "p", nullptr, rp, nullptr), Error);
  }

  SUBCASE("context overflow rejected before dispatch") {
    class TinyContext : public ScriptedProvider {
     public:
      TinyContext() : ScriptedProvider({"x"}) {}
      int context_tokens() const override { return 4; }
    } provider;
    CHECK_THROWS_AS(
        query(provider, "m", std::string(4000, 'a'), nullptr, fast_retry(), nullptr),
        Error);
    CHECK(provider.calls_made() == 0);
  }
}

TEST_CASE("predict_llm") {
  PromptTemplate tmpl = PromptTemplate::default_template();

  SUBCASE("full coverage in input order") {
    auto records = small_dataset(7);
    // 7 records, batch 3 -> 3 prompts
    std::vector<std::string> responses = {
        "Tactic(s): IMPACT\nTactic(s): NONE\nTactic(s): DISCOVERY\n",
        "Tactic(s): NONE\nTactic(s): NONE\nTactic(s): NONE\n",
        "Tactic(s): PERSISTENCE\n",
    };
    ScriptedProvider provider(responses);
    LlmRunOptions opts;
    opts.model = "test-model";
    opts.batch_size = 3;
    opts.retry = fast_retry();
    LlmRunResult res = predict_llm(provider, tmpl, records, opts);
    REQUIRE(res.records.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i)
      CHECK(res.records[i].record_id == records[i].id);
    CHECK(res.records[0].predicted == vector_from_tactics({Tactic::Impact}));
    CHECK(res.records[1].predicted.none());
    CHECK(res.stats.api_calls == 3);
  }

  SUBCASE("Bard-like prose with non-conforming slots") {
    auto records = small_dataset(10);
    std::vector<std::string> responses = {
        // batch of 10; only 7 parseable answers -> 3 non-conforming
        "Here is what I think about these fascinating descriptions.\n"
        "1. Tactic(s): IMPACT\n"
        "2. Tactic(s): Exploitation\n"           // unknown label
        "3. Tactic(s): DISCOVERY, Defacement\n"  // known + unknown
        "4. Tactic(s): NONE\n"
        "5. Tactic(s): PERSISTENCE\n"
        "6. Tactic(s): DOS\n"                    // unknown label
        "7. Tactic(s): EXECUTION\n",
    };
    ScriptedProvider provider(responses);
    LlmRunOptions opts;
    opts.model = "bard-like";
    opts.batch_size = 10;
    opts.retry = fast_retry();
    LlmRunResult res = predict_llm(provider, tmpl, records, opts);
    REQUIRE(res.records.size() == 10);
    CHECK(res.stats.nonconforming == 3);
    CHECK(res.records[7].conforming == false);
    CHECK(res.records[7].predicted.none());

    // unknown-only answers map to NONE under the default policy, with the
    // unknowns preserved in diagnostics
    CHECK(res.records[1].predicted.none());
    CHECK(res.records[1].mapped_to_none);
    REQUIRE(res.records[1].unknown_labels.size() == 1);
    CHECK(res.records[1].unknown_labels[0] == "Exploitation");

    // mixed answers keep the known labels under both policies
    CHECK(res.records[2].predicted == vector_from_tactics({Tactic::Discovery}));
    CHECK(res.records[2].unknown_labels ==
          std::vector<std::string>{"Defacement"});
    CHECK_FALSE(res.records[2].mapped_to_none);
  }

  SUBCASE("fully cached rerun: zero provider calls, bit-identical records") {
    auto cache_dir = fresh_dir("ttpc_llm_cache");
    auto records = small_dataset(6);
    std::vector<std::string> responses = {
        "Tactic(s): IMPACT\nTactic(s): NONE\nTactic(s): DISCOVERY\n",
        "Tactic(s): COLLECTION\nTactic(s): NONE\nTactic(s): EXECUTION\n",
    };
    LlmRunOptions opts;
    opts.model = "cached-model";
    opts.batch_size = 3;
    opts.cache_dir = cache_dir;
    opts.retry = fast_retry();

    ScriptedProvider first(responses);
    LlmRunResult run1 = predict_llm(first, tmpl, records, opts);
    CHECK(first.calls_made() == 2);

    FailingProvider second("cached-model-rerun");
    // the cache key includes the provider id, so reuse the original id
    class SameId : public FailingProvider {
     public:
      std::string id() const override { return "scripted"; }
    } same_id;
    LlmRunResult run2 = predict_llm(same_id, tmpl, records, opts);
    CHECK(same_id.calls_made() == 0);
    REQUIRE(run2.records.size() == run1.records.size());
    for (size_t i = 0; i < run1.records.size(); ++i) {
      CHECK(prediction_line(run2.records[i]) ==
            prediction_line(run1.records[i]));
    }
  }

  SUBCASE("abort persists a checkpoint; resume queries only the rest") {
    auto dir = fresh_dir("ttpc_llm_ckpt");
    auto records = small_dataset(10);
    LlmRunOptions opts;
    opts.model = "resum";
    opts.batch_size = 5;
    opts.checkpoint = dir / "ckpt.jsonl";
    opts.retry = fast_retry();
    opts.retry.max_attempts = 1;

    // first batch succeeds, second fails hard
    ScriptedProvider failing(
        {"Tactic(s): IMPACT\nTactic(s): NONE\nTactic(s): NONE\nTactic(s): "
         "NONE\nTactic(s): NONE\n"});
    CHECK_THROWS_AS(predict_llm(failing, tmpl, records, opts), Error);
    CHECK(fs::exists(opts.checkpoint));

    // resume: only the second batch is queried
    ScriptedProvider resumed(
        {"Tactic(s): DISCOVERY\nTactic(s): NONE\nTactic(s): NONE\nTactic(s): "
         "NONE\nTactic(s): EXECUTION\n"});
    LlmRunResult res = predict_llm(resumed, tmpl, records, opts);
    CHECK(resumed.calls_made() == 1);
    REQUIRE(res.records.size() == 10);
    CHECK(res.stats.resumed == 5);
    CHECK(res.records[0].predicted == vector_from_tactics({Tactic::Impact}));
    CHECK(res.records[5].predicted == vector_from_tactics({Tactic::Discovery}));
    CHECK(res.records[9].predicted == vector_from_tactics({Tactic::Execution}));
  }

  SUBCASE("concurrent batches emit in input order regardless of completion") {
    // answers derived from the prompt content, so scheduling cannot change
    // which record gets which label
    class ContentProvider : public ChatProvider {
     public:
      std::string id() const override { return "content"; }
      int context_tokens() const override { return 1 << 20; }
      std::string complete(const std::string&, const std::string& prompt) override {
        ++calls_;
        std::string out;
        size_t at = 0;
        while ((at = prompt.find("Synthetic description number ", at)) !=
               std::string::npos) {
          at += 29;
          const int k = std::atoi(prompt.c_str() + at);
          out += "Tactic(s): " + canonical_name(tactic_at(k % kTacticCount)) +
                 "\n";
        }
        return out;
      }
    } provider;

    auto records = small_dataset(23);
    LlmRunOptions opts;
    opts.model = "content-model";
    opts.batch_size = 4;  // 6 batches in flight across 3 workers
    opts.concurrency = 3;
    opts.min_dispatch_interval_ms = 1;
    opts.retry = fast_retry();
    LlmRunResult res = predict_llm(provider, tmpl, records, opts);
    REQUIRE(res.records.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
      CHECK(res.records[i].record_id == records[i].id);
      CHECK(res.records[i].predicted ==
            vector_from_tactics({tactic_at(int(i) % kTacticCount)}));
    }
    CHECK(provider.calls_made() == 6);
  }

  SUBCASE("drop-keep-known policy never marks mapped_to_none") {
    auto records = small_dataset(1);
    ScriptedProvider provider({"Tactic(s): Social-Engineering"});
    LlmRunOptions opts;
    opts.model = "m";
    opts.batch_size = 1;
    opts.policy = UnknownLabelPolicy::DropKeepKnown;
    opts.retry = fast_retry();
    LlmRunResult res = predict_llm(provider, tmpl, records, opts);
    CHECK(res.records[0].predicted.none());
    CHECK_FALSE(res.records[0].mapped_to_none);
    CHECK(res.records[0].unknown_labels ==
          std::vector<std::string>{"Social-Engineering"});
  }
}

TEST_CASE("prediction jsonl round trip") {
  auto dir = fresh_dir("ttpc_pred_io");
  std::vector<PredictionRecord> records(2);
  records[0].record_id = "T1";
  records[0].model_id = "m";
  records[0].predicted = vector_from_tactics({Tactic::Impact});
  records[0].raw_response = "Tactic(s): IMPACT";
  records[0].prompt_hash = "abc";
  records[1].record_id = "T2";
  records[1].model_id = "m";
  records[1].unknown_labels = {"Defacement"};
  records[1].conforming = false;

  fs::path p = dir / "preds.jsonl";
  save_predictions(records, p);
  auto loaded = load_predictions(p);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].predicted == records[0].predicted);
  CHECK(loaded[0].raw_response == records[0].raw_response);
  CHECK(loaded[1].unknown_labels == records[1].unknown_labels);
  CHECK_FALSE(loaded[1].conforming);
}
