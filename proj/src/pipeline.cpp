#include <fstream>
#include <iostream>

#include <json.hpp>

#include "cli_common.hpp"
#include "ttpc/dataset.hpp"
#include "ttpc/errors.hpp"
#include "ttpc/report.hpp"
#include "ttpc/sha256.hpp"

namespace ttpc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pipeline state: one entry per completed stage keyed by an input hash, so
// unchanged re-runs skip the work and a failed run resumes after its last
// good stage.
class StageState {
 public:
  explicit StageState(fs::path path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (in) {
      try {
        state_ = json::parse(in);
      } catch (const json::parse_error&) {
        state_ = json::object();  // corrupt state restarts the pipeline
      }
    } else {
      state_ = json::object();
    }
  }

  bool completed(const std::string& stage, const std::string& hash,
                 const std::vector<fs::path>& artifacts) const {
    if (!state_.contains(stage)) return false;
    const auto& s = state_[stage];
    if (s.value("input_hash", "") != hash) return false;
    for (const auto& a : artifacts)
      if (!fs::exists(a)) return false;
    return true;
  }

  void mark(const std::string& stage, const std::string& hash,
            const std::vector<fs::path>& artifacts) {
    json arts = json::array();
    for (const auto& a : artifacts) arts.push_back(a.string());
    state_[stage] = json{{"input_hash", hash},
                         {"artifacts", arts},
                         {"completed_at", iso8601_now()}};
    fs::path tmp = path_;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << state_.dump(2) << '\n';
    out.close();
    fs::rename(tmp, path_);
  }

 private:
  fs::path path_;
  json state_;
};

std::string stage_hash(const std::string& name, const json& params,
                       const std::vector<fs::path>& inputs) {
  Sha256 h;
  h.update(name);
  h.update("\x1f");
  h.update(params.dump());
  for (const auto& p : inputs) {
    h.update("\x1f");
    h.update(fs::exists(p) ? sha256_file_hex(p) : "missing");
  }
  return h.hex_digest();
}

}  // namespace

int run_pipeline(const fs::path& config_path, bool force) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) raise(ErrKind::Io, "cannot open pipeline config: " + config_path.string());
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    raise(ErrKind::Parse,
          "bad pipeline config " + config_path.string() + ": " + e.what());
  }

  const fs::path run_dir = cfg.value("run_dir", "pipeline_run");
  fs::create_directories(run_dir);
  StageState state(run_dir / "state.json");

  RunManifest manifest;
  manifest.command = "pipeline";
  manifest.config = cfg;
  manifest.started_at = iso8601_now();

  auto stage_done = [&](const std::string& name) {
    std::printf("[pipeline] %-12s cache hit, skipped\n", name.c_str());
  };
  auto stage_run = [&](const std::string& name) {
    std::printf("[pipeline] %-12s running\n", name.c_str());
  };

  // ---------- stage: ingest ----------
  const json& ds_cfg = cfg.at("dataset");
  fs::path dataset = run_dir / "dataset.jsonl";
  {
    std::vector<fs::path> inputs;
    const std::string kind = ds_cfg.at("kind").get<std::string>();
    if (kind == "attack")
      inputs.push_back(ds_cfg.at("bundle").get<std::string>());
    else if (kind == "capec") {
      inputs.push_back(ds_cfg.at("catalog").get<std::string>());
      inputs.push_back(ds_cfg.at("attack").get<std::string>());
    } else if (kind == "jsonl")
      inputs.push_back(ds_cfg.at("path").get<std::string>());
    else
      raise(ErrKind::Config, "dataset.kind must be attack, capec or jsonl");

    const std::string h = stage_hash("ingest", ds_cfg, inputs);
    if (!force && state.completed("ingest", h, {dataset})) {
      stage_done("ingest");
    } else {
      stage_run("ingest");
      if (kind == "attack")
        run_ingest_attack(inputs[0], dataset, run_dir / "ingest_report.json");
      else if (kind == "capec")
        run_ingest_capec(inputs[0], inputs[1], dataset,
                         run_dir / "ingest_report.json");
      else
        save_dataset(load_dataset(inputs[0]), dataset);
      state.mark("ingest", h, {dataset});
    }
    manifest.dataset_path = dataset.string();
    manifest.dataset_sha256 = sha256_file_hex(dataset);
  }

  // ---------- stage: split ----------
  {
    const json sp = cfg.value("split", json{{"k", 5}, {"seed", 42}});
    const fs::path folds = run_dir / "folds.json";
    const std::string h = stage_hash("split", sp, {dataset});
    if (!force && state.completed("split", h, {folds})) {
      stage_done("split");
    } else {
      stage_run("split");
      run_split(dataset, sp.value("k", 5), sp.value("seed", uint64_t{42}),
                folds);
      state.mark("split", h, {folds});
    }
  }

  // ---------- stage: train ----------
  fs::path model_dir = run_dir / "model";
  fs::path best_dir = model_dir / "best";
  {
    const json tr = cfg.value("train", json::object());
    TrainingConfig tc = config_from_spec(tr.value("config", "miniature"));
    if (tr.contains("base")) tc.base_model = tr["base"].get<std::string>();
    const int subset = tr.value("subset", 0);
    json params = tr;
    params["_resolved_base"] = tc.base_model;
    const std::string h = stage_hash("train", params, {dataset});
    if (!force && state.completed("train", h, {best_dir / "weights.bin"})) {
      stage_done("train");
    } else {
      stage_run("train");
      run_train(dataset, tc, model_dir, subset, /*quiet=*/true);
      state.mark("train", h, {best_dir / "weights.bin"});
    }
  }

  // ---------- stage: predict-sft ----------
  fs::path sft_preds = run_dir / "preds_sft.jsonl";
  {
    const std::string h =
        stage_hash("predict_sft", json::object(), {dataset, best_dir / "weights.bin"});
    if (!force && state.completed("predict_sft", h, {sft_preds})) {
      stage_done("predict_sft");
    } else {
      stage_run("predict_sft");
      run_predict_sft(best_dir, dataset, sft_preds);
      state.mark("predict_sft", h, {sft_preds});
    }
  }

  // ---------- stage: predict-llm ----------
  fs::path llm_preds = run_dir / "preds_llm.jsonl";
  {
    const json lc = cfg.value("predict_llm", json{{"provider", "mock"}});
    const std::string h = stage_hash("predict_llm", lc, {dataset});
    if (!force && state.completed("predict_llm", h, {llm_preds})) {
      stage_done("predict_llm");
    } else {
      stage_run("predict_llm");
      auto provider = provider_from_spec(lc.value("provider", "mock"));
      PromptTemplate tmpl = template_from_spec(lc.value("template", "default"));
      LlmRunOptions opts;
      opts.model = lc.value("model", "mock-model");
      opts.batch_size = lc.value("batch", 20);
      opts.policy = lc.value("policy", "map-none") == std::string("drop-known")
                        ? UnknownLabelPolicy::DropKeepKnown
                        : UnknownLabelPolicy::MapToNone;
      if (lc.contains("cache"))
        opts.cache_dir = lc["cache"].get<std::string>();
      opts.checkpoint = run_dir / "llm_checkpoint.jsonl";
      run_predict_llm(*provider, tmpl, dataset, opts, llm_preds);
      state.mark("predict_llm", h, {llm_preds});
    }
  }

  // ---------- stage: compare ----------
  {
    const json cc = cfg.value("compare", json::object());
    const fs::path cmp_dir = run_dir / "compare";
    const std::string h =
        stage_hash("compare", cc, {dataset, sft_preds, llm_preds});
    if (!force && state.completed("compare", h, {cmp_dir / "compare.json"})) {
      stage_done("compare");
    } else {
      stage_run("compare");
      run_compare(dataset, sft_preds, llm_preds, cmp_dir,
                  cc.value("rule", "exact"));
      state.mark("compare", h, {cmp_dir / "compare.json"});
    }
    manifest.artifacts = {dataset.string(), sft_preds.string(),
                          llm_preds.string(),
                          (cmp_dir / "compare.json").string(),
                          (cmp_dir / "compare.md").string()};
  }

  manifest.finished_at = iso8601_now();
  manifest.save(run_dir / "manifest.json");
  std::printf("[pipeline] complete; artifacts under %s\n",
              run_dir.string().c_str());
  return 0;
}

}  // namespace ttpc::cli
