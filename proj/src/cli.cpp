#include "ttpc/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_common.hpp"
#include "ttpc/capec.hpp"
#include "ttpc/dataset.hpp"
#include "ttpc/errors.hpp"
#include "ttpc/generic.hpp"
#include "ttpc/kernels.hpp"
#include "ttpc/kfold.hpp"
#include "ttpc/metrics.hpp"
#include "ttpc/report.hpp"
#include "ttpc/sha256.hpp"
#include "ttpc/stix.hpp"

namespace ttpc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json report_to_json(const IngestReport& rep) {
  json rejects = json::array();
  for (const auto& r : rep.rejects)
    rejects.push_back(json{{"object", r.object_id}, {"reason", r.reason}});
  json trace = json::array();
  for (const auto& t : rep.trace)
    trace.push_back(json{{"record", t.record_id},
                         {"source_object", t.source_object},
                         {"evidence", t.evidence}});
  return json{{"rejects", rejects},
              {"trace", trace},
              {"skipped_references", rep.skipped_references}};
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrKind::Io, "cannot write " + path.string());
  out << content;
  out.close();
  fs::rename(tmp, path);
}

}  // namespace

IngestOutcome run_ingest_attack(const fs::path& bundle, const fs::path& out,
                                const fs::path& report_path) {
  AttackParseResult parsed = parse_attack_bundle_file(bundle);
  save_dataset(parsed.records, out);
  if (!report_path.empty())
    write_text(report_path, report_to_json(parsed.report).dump(2) + "\n");
  return {out, int(parsed.records.size()), int(parsed.report.rejects.size())};
}

IngestOutcome run_ingest_capec(const fs::path& catalog,
                               const fs::path& attack_bundle,
                               const fs::path& out,
                               const fs::path& report_path) {
  AttackParseResult attack = parse_attack_bundle_file(attack_bundle);
  CapecParseResult parsed =
      parse_capec_catalog_file(catalog, attack.technique_index);
  save_dataset(parsed.records, out);
  if (!report_path.empty())
    write_text(report_path, report_to_json(parsed.report).dump(2) + "\n");
  return {out, int(parsed.records.size()), int(parsed.report.rejects.size())};
}

IngestOutcome run_ingest_generic(const fs::path& input, const fs::path& out) {
  GenericParseResult parsed = load_generic_corpus(input);
  if (parsed.empty_input_warning)
    std::cerr << "warning: generic corpus " << input << " is empty\n";
  save_dataset(parsed.records, out);
  return {out, int(parsed.records.size()), 0};
}

void run_split(const fs::path& dataset, int k, uint64_t seed,
               const fs::path& out) {
  auto records = load_dataset(dataset);
  FoldAssignment fa = kfold_split(records, k, seed);
  json o;
  o["k"] = fa.k;
  o["seed"] = fa.seed;
  o["fold_sizes"] = fa.fold_sizes();
  json assign;
  for (const auto& [id, fold] : fa.assignment) assign[id] = fold;
  o["assignment"] = assign;
  write_text(out, o.dump(2) + "\n");
}

TrainingConfig config_from_spec(const std::string& spec) {
  if (spec == "table1") return TrainingConfig::table1();
  if (spec == "miniature") return TrainingConfig::miniature();
  std::ifstream in(spec, std::ios::binary);
  if (!in)
    raise(ErrKind::Config,
          "unknown config profile or unreadable file: " + spec);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    raise(ErrKind::Parse, "bad training config " + spec + ": " + e.what());
  }
  TrainingConfig c;
  c.optimizer = j.value("optimizer", c.optimizer);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.loss = j.value("loss", c.loss);
  c.activation = j.value("activation", c.activation);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.scheduler = j.value("scheduler", c.scheduler);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.threshold = j.value("threshold", c.threshold);
  c.folds = j.value("folds", c.folds);
  c.split_seed = j.value("split_seed", c.split_seed);
  c.train_seed = j.value("train_seed", c.train_seed);
  c.base_model = j.value("base_model", c.base_model);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  return c;
}

TrainOutcome run_train(const fs::path& dataset, const TrainingConfig& config,
                       const fs::path& out_dir, int subset, bool quiet) {
  RunManifest manifest;
  manifest.command = "train";
  manifest.started_at = iso8601_now();
  manifest.dataset_path = dataset.string();
  manifest.dataset_sha256 = sha256_file_hex(dataset);

  auto records = load_dataset(dataset);
  if (subset > 0 && size_t(subset) < records.size())
    records = sample_records(records, size_t(subset), config.split_seed);

  TrainProgress progress = nullptr;
  if (!quiet)
    progress = [](int fold, int epoch, double loss) {
      std::fprintf(stderr, "fold %d epoch %02d train_loss %.4f\n", fold,
                   epoch + 1, loss);
    };

  CrossValResult cv = train_crossval(records, config, progress);

  fs::create_directories(out_dir);
  TrainOutcome outcome;
  outcome.avg_micro_f1 = cv.avg_micro_f1;
  outcome.avg_accuracy = cv.avg_accuracy;
  outcome.avg_train_loss = cv.avg_train_loss;
  outcome.avg_test_loss = cv.avg_test_loss;

  json folds = json::array();
  for (const auto& clf : cv.folds) {
    fs::path dir = out_dir / ("fold" + std::to_string(clf->fold_index()));
    save_model(*clf, dir);
    outcome.fold_dirs.push_back(dir);
    folds.push_back(json{
        {"fold", clf->fold_index()},
        {"dir", dir.string()},
        {"train_loss", clf->metrics().train_loss},
        {"test_loss", clf->metrics().test_loss},
        {"micro_f1", clf->metrics().report.micro_f1},
        {"accuracy", clf->metrics().report.exact_match_accuracy},
        {"truncated_records", clf->metrics().truncated_records},
    });
  }

  const TrainedClassifier& best = select_best(cv.folds);
  outcome.best_fold = best.fold_index();
  outcome.best_dir = out_dir / "best";
  save_model(best, outcome.best_dir);

  json summary;
  summary["folds"] = folds;
  summary["avg_train_loss"] = cv.avg_train_loss;
  summary["avg_test_loss"] = cv.avg_test_loss;
  summary["avg_accuracy"] = cv.avg_accuracy;
  summary["avg_micro_f1"] = cv.avg_micro_f1;
  summary["best_fold"] = best.fold_index();
  summary["n_records"] = records.size();
  write_text(out_dir / "crossval.json", summary.dump(2) + "\n");

  manifest.config = json::parse(
      std::ifstream(outcome.best_dir / "config.json"), nullptr, true);
  manifest.model_ids = {best.model_id()};
  for (const auto& d : outcome.fold_dirs) manifest.artifacts.push_back(d.string());
  manifest.artifacts.push_back(outcome.best_dir.string());
  manifest.artifacts.push_back((out_dir / "crossval.json").string());
  manifest.finished_at = iso8601_now();
  manifest.save(out_dir / "manifest.json");
  return outcome;
}

void run_predict_sft(const fs::path& model_dir, const fs::path& dataset,
                     const fs::path& out) {
  auto clf = load_model(model_dir);
  auto records = load_dataset(dataset);
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(r.text);
  auto preds = clf->predict_batch(texts);

  std::vector<PredictionRecord> out_records;
  out_records.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    PredictionRecord pr;
    pr.record_id = records[i].id;
    pr.model_id = clf->model_id();
    pr.predicted = preds[i].labels;
    pr.probs.assign(preds[i].probs.begin(), preds[i].probs.end());
    out_records.push_back(std::move(pr));
  }
  save_predictions(out_records, out);

  RunManifest manifest;
  manifest.command = "predict-sft";
  manifest.started_at = manifest.finished_at = iso8601_now();
  manifest.dataset_path = dataset.string();
  manifest.dataset_sha256 = sha256_file_hex(dataset);
  manifest.model_ids = {clf->model_id()};
  manifest.artifacts = {out.string()};
  fs::path mpath = out;
  mpath += ".manifest.json";
  manifest.save(mpath);
}

std::unique_ptr<ChatProvider> provider_from_spec(const std::string& spec) {
  if (spec == "mock") return make_none_mock_provider();
  if (spec.rfind("replay:", 0) == 0)
    return make_replay_provider(spec.substr(7));
  return make_http_provider(ProviderConfig::from_file(spec));
}

PromptTemplate template_from_spec(const std::string& spec) {
  if (spec == "default") return PromptTemplate::default_template();
  if (spec == "strict") return PromptTemplate::strict_template();
  return PromptTemplate::from_file(spec);
}

PredictLlmOutcome run_predict_llm(ChatProvider& provider,
                                  const PromptTemplate& tmpl,
                                  const fs::path& dataset,
                                  const LlmRunOptions& opts,
                                  const fs::path& out) {
  RunManifest manifest;
  manifest.command = "predict-llm";
  manifest.started_at = iso8601_now();
  manifest.dataset_path = dataset.string();
  manifest.dataset_sha256 = sha256_file_hex(dataset);

  auto records = load_dataset(dataset);
  LlmRunResult result = predict_llm(provider, tmpl, records, opts);
  save_predictions(result.records, out);

  PredictLlmOutcome outcome;
  outcome.predictions = out;
  outcome.stats = result.stats;
  outcome.template_hash = result.template_hash;
  outcome.model_id = opts.model;
  outcome.nondeterministic = result.nondeterministic;

  manifest.model_ids = {opts.model};
  manifest.template_hash = result.template_hash;
  manifest.artifacts = {out.string()};
  manifest.config = json{{"provider", provider.id()},
                         {"batch_size", opts.batch_size},
                         {"temperature", 0},
                         {"policy", opts.policy == UnknownLabelPolicy::MapToNone
                                        ? "map-none"
                                        : "drop-known"},
                         {"nondeterministic", result.nondeterministic}};
  manifest.extra = json{{"api_calls", result.stats.api_calls},
                        {"cache_hits", result.stats.cache_hits},
                        {"retries", result.stats.retries},
                        {"nonconforming", result.stats.nonconforming},
                        {"unknown_records", result.stats.unknown_records},
                        {"resumed", result.stats.resumed},
                        {"warnings", result.warnings}};
  manifest.finished_at = iso8601_now();
  fs::path mpath = out;
  mpath += ".manifest.json";
  manifest.save(mpath);
  return outcome;
}

ScoreOutcome run_score(const fs::path& dataset, const fs::path& preds,
                       const fs::path& out_json, const fs::path& out_csv,
                       const fs::path& out_md, bool leakage_banner) {
  auto records = load_dataset(dataset);
  auto predictions = load_predictions(preds);
  std::vector<LabelVector> gold, pred;
  align_predictions(records, predictions, &gold, &pred);
  MetricsReport rep = score(gold, pred);
  rep.leakage_banner = leakage_banner;

  const std::string model =
      predictions.empty() ? "model" : predictions.front().model_id;
  if (!out_json.empty()) write_text(out_json, metrics_to_json(rep).dump(2) + "\n");
  if (!out_csv.empty()) write_text(out_csv, metrics_to_csv(rep));
  if (!out_md.empty()) write_text(out_md, metrics_to_markdown(rep, model));
  return {rep.micro_f1, rep.exact_match_accuracy};
}

void run_overlap(const fs::path& dataset_or_preds, bool is_preds,
                 const fs::path& out_csv, const fs::path& out_svg,
                 const std::string& title) {
  std::vector<LabelVector> labels;
  if (is_preds) {
    for (const auto& p : load_predictions(dataset_or_preds))
      labels.push_back(p.predicted);
  } else {
    for (const auto& r : load_dataset(dataset_or_preds))
      labels.push_back(r.gold);
  }
  if (labels.empty()) raise(ErrKind::InvalidInput, "overlap input is empty");
  OverlapMatrix m = overlap_matrix(labels);
  if (!out_csv.empty()) write_text(out_csv, overlap_to_csv(m));
  if (!out_svg.empty()) write_text(out_svg, overlap_to_svg(m, title));
}

CompareOutcome run_compare(const fs::path& dataset, const fs::path& preds_a,
                           const fs::path& preds_b, const fs::path& out_dir,
                           const std::string& rule) {
  AgreementRule r;
  if (rule == "exact")
    r = AgreementRule::ExactEquality;
  else if (rule == "full-recall")
    r = AgreementRule::FullRecall;
  else
    raise(ErrKind::Config, "unknown agreement rule: " + rule);

  auto records = load_dataset(dataset);
  CompareReport rep = make_compare_report(records, load_predictions(preds_a),
                                          load_predictions(preds_b), r);
  fs::create_directories(out_dir);
  CompareOutcome outcome;
  outcome.json_path = out_dir / "compare.json";
  outcome.md_path = out_dir / "compare.md";
  write_text(outcome.json_path, compare_to_json(rep).dump(2) + "\n");
  write_text(outcome.md_path, compare_to_markdown(rep));
  outcome.micro_f1_a = rep.metrics_a.micro_f1;
  outcome.micro_f1_b = rep.metrics_b.micro_f1;
  outcome.accuracy_a = rep.metrics_a.exact_match_accuracy;
  outcome.accuracy_b = rep.metrics_b.exact_match_accuracy;

  RunManifest manifest;
  manifest.command = "compare";
  manifest.started_at = manifest.finished_at = iso8601_now();
  manifest.dataset_path = dataset.string();
  manifest.dataset_sha256 = sha256_file_hex(dataset);
  manifest.model_ids = {rep.model_a, rep.model_b};
  manifest.config = json{{"rule", rule}};
  manifest.artifacts = {outcome.json_path.string(), outcome.md_path.string()};
  manifest.save(out_dir / "manifest.json");
  return outcome;
}

int run(int argc, const char* const* argv) {
  CLI::App app{
      "ttpc: interpret ambiguous attack descriptions with a fine-tuned "
      "encoder or a prompted LLM, and evaluate both"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  std::string format = "json";
  app.add_option("--out-dir", out_dir, "Base directory for artifacts");
  app.add_option("--format", format, "Report format emphasis: json, csv, md")
      ->check(CLI::IsMember({"json", "csv", "md"}));

  auto resolve = [&out_dir](const std::string& p) {
    fs::path path(p);
    if (path.is_absolute() || out_dir == ".") return path;
    return fs::path(out_dir) / path;
  };

  // ---------- ingest ----------
  auto* ingest = app.add_subcommand("ingest", "Parse source corpora into dataset JSONL");
  ingest->require_subcommand(1);

  std::string in_path, out_path, report_path, attack_path;

  auto* ing_attack = ingest->add_subcommand("attack", "ATT&CK STIX bundle");
  ing_attack->add_option("bundle", in_path, "STIX 2.1 JSON bundle")->required();
  ing_attack->add_option("--out", out_path, "Dataset JSONL output")->required();
  ing_attack->add_option("--report", report_path, "Rejects/trace report JSON");
  ing_attack->callback([&]() {
    auto res = run_ingest_attack(in_path, resolve(out_path),
                                 report_path.empty() ? fs::path{}
                                                     : resolve(report_path));
    std::printf("ingested %d records -> %s (%d rejects)\n", res.record_count,
                res.dataset.string().c_str(), res.reject_count);
  });

  auto* ing_capec = ingest->add_subcommand("capec", "CAPEC XML catalog");
  ing_capec->add_option("catalog", in_path, "CAPEC v3.x XML catalog")->required();
  ing_capec->add_option("--attack", attack_path, "ATT&CK bundle for the technique index")
      ->required();
  ing_capec->add_option("--out", out_path, "Dataset JSONL output")->required();
  ing_capec->add_option("--report", report_path, "Rejects/trace report JSON");
  ing_capec->callback([&]() {
    auto res = run_ingest_capec(in_path, attack_path, resolve(out_path),
                                report_path.empty() ? fs::path{}
                                                    : resolve(report_path));
    std::printf("ingested %d records -> %s (%d rejects)\n", res.record_count,
                res.dataset.string().c_str(), res.reject_count);
  });

  auto* ing_generic = ingest->add_subcommand("generic", "Generic text corpus");
  ing_generic->add_option("input", in_path, "Plain-text or JSONL file")->required();
  ing_generic->add_option("--out", out_path, "Dataset JSONL output")->required();
  ing_generic->callback([&]() {
    auto res = run_ingest_generic(in_path, resolve(out_path));
    std::printf("ingested %d records -> %s\n", res.record_count,
                res.dataset.string().c_str());
  });

  // ---------- split ----------
  auto* split = app.add_subcommand("split", "Deterministic k-fold assignment");
  std::string ds_path, split_out = "folds.json";
  int split_k = 5;
  uint64_t seed = 42;
  split->add_option("--dataset", ds_path, "Dataset JSONL")->required();
  split->add_option("--k", split_k, "Fold count");
  split->add_option("--seed", seed, "Shuffle seed");
  split->add_option("--out", split_out, "Assignment JSON output");
  split->callback([&]() {
    run_split(ds_path, split_k, seed, resolve(split_out));
    std::printf("wrote %s\n", resolve(split_out).string().c_str());
  });

  // ---------- train ----------
  auto* train = app.add_subcommand("train", "Cross-validated fine-tuning");
  std::string base, config_spec = "table1", model_out = "model";
  int subset = 0, threads = 0;
  bool quiet = false;
  train->add_option("--dataset", ds_path, "Dataset JSONL")->required();
  train->add_option("--base", base, "Encoder id (miniature, miniature-wide)");
  train->add_option("--config", config_spec,
                    "Profile (table1, miniature) or config JSON path");
  train->add_option("--out-dir", model_out, "Model artifact directory");
  train->add_option("--subset", subset, "Train on a deterministic n-record subset");
  train->add_option("--threads", threads, "Kernel threads (0 = default)");
  train->add_option("--seed", seed, "Override split seed")->capture_default_str();
  train->add_flag("--quiet", quiet, "Suppress per-epoch progress");
  train->callback([&]() {
    TrainingConfig cfg = config_from_spec(config_spec);
    if (!base.empty()) cfg.base_model = base;
    if (split->count("--seed") || train->count("--seed")) cfg.split_seed = seed;
    if (threads > 0) kern::set_threads(threads);
    auto res = run_train(ds_path, cfg, resolve(model_out), subset, quiet);
    std::printf(
        "cross-validation done: avg micro-F1 %.4f, avg accuracy %.4f, avg "
        "train loss %.4f, avg test loss %.4f; best fold %d -> %s\n",
        res.avg_micro_f1, res.avg_accuracy, res.avg_train_loss,
        res.avg_test_loss, res.best_fold, res.best_dir.string().c_str());
  });

  // ---------- predict-sft ----------
  auto* psft = app.add_subcommand("predict-sft", "Predict with a trained encoder");
  std::string model_dir, preds_out = "preds.jsonl";
  psft->add_option("--model", model_dir, "Model artifact directory")->required();
  psft->add_option("--dataset", ds_path, "Dataset JSONL")->required();
  psft->add_option("--out", preds_out, "Predictions JSONL output");
  psft->callback([&]() {
    run_predict_sft(model_dir, ds_path, resolve(preds_out));
    std::printf("wrote %s\n", resolve(preds_out).string().c_str());
  });

  // ---------- predict-llm ----------
  auto* pllm = app.add_subcommand("predict-llm", "Predict with a remote LLM");
  std::string provider_spec, llm_model = "gpt-3.5-turbo", template_spec = "default";
  std::string cache_dir, checkpoint, policy = "map-none";
  int batch = 20, concurrency = 1, rate_ms = 0;
  pllm->add_option("--provider", provider_spec,
                   "mock, replay:<dir>, or provider config JSON")
      ->required();
  pllm->add_option("--model", llm_model, "Model id sent to the provider");
  pllm->add_option("--template", template_spec,
                   "default, strict, or template file");
  pllm->add_option("--dataset", ds_path, "Dataset JSONL")->required();
  pllm->add_option("--batch", batch, "Descriptions per prompt");
  pllm->add_option("--cache", cache_dir, "Response cache directory");
  pllm->add_option("--checkpoint", checkpoint, "Resumable checkpoint path");
  pllm->add_option("--policy", policy, "Unknown-label policy")
      ->check(CLI::IsMember({"map-none", "drop-known"}));
  pllm->add_option("--concurrency", concurrency, "In-flight prompt batches");
  pllm->add_option("--rate-ms", rate_ms,
                   "Minimum milliseconds between provider calls");
  pllm->add_option("--out", preds_out, "Predictions JSONL output");
  pllm->callback([&]() {
    auto provider = provider_from_spec(provider_spec);
    PromptTemplate tmpl = template_from_spec(template_spec);
    LlmRunOptions opts;
    opts.model = llm_model;
    opts.batch_size = batch;
    opts.policy = policy == "map-none" ? UnknownLabelPolicy::MapToNone
                                       : UnknownLabelPolicy::DropKeepKnown;
    opts.concurrency = concurrency;
    opts.min_dispatch_interval_ms = rate_ms;
    if (!cache_dir.empty()) opts.cache_dir = cache_dir;
    if (!checkpoint.empty()) opts.checkpoint = checkpoint;
    auto res = run_predict_llm(*provider, tmpl, ds_path, opts, resolve(preds_out));
    std::printf(
        "wrote %s (api_calls %d, cache_hits %d, retries %d, nonconforming "
        "%d)\n",
        res.predictions.string().c_str(), res.stats.api_calls,
        res.stats.cache_hits, res.stats.retries, res.stats.nonconforming);
  });

  // ---------- score ----------
  auto* sc = app.add_subcommand("score", "Score predictions against gold labels");
  std::string score_preds, score_out = "metrics";
  bool leakage = false;
  sc->add_option("--dataset", ds_path, "Dataset JSONL")->required();
  sc->add_option("--preds", score_preds, "Predictions JSONL")->required();
  sc->add_option("--out", score_out, "Output basename (writes .json/.csv/.md)");
  sc->add_flag("--leakage-banner", leakage,
               "Mark the report as a leakage-acknowledged re-evaluation");
  sc->callback([&]() {
    fs::path base = resolve(score_out);
    fs::path j = base, c = base, m = base;
    j += ".json";
    c += ".csv";
    m += ".md";
    // the chosen format always lands next to the JSON source of truth
    auto res = run_score(ds_path, score_preds, j, format == "csv" ? c : fs::path{},
                         format == "md" ? m : fs::path{}, leakage);
    std::printf("micro_f1 %.4f accuracy %.4f -> %s\n", res.micro_f1,
                res.accuracy, j.string().c_str());
  });

  // ---------- overlap ----------
  auto* ov = app.add_subcommand("overlap", "Pair-wise tactic overlap matrix");
  std::string ov_dataset, ov_preds, ov_csv = "overlap.csv", ov_svg, ov_title = "Tactic overlap";
  ov->add_option("--dataset", ov_dataset, "Dataset JSONL (gold labels)");
  ov->add_option("--preds", ov_preds, "Predictions JSONL (predicted labels)");
  ov->add_option("--csv", ov_csv, "CSV output");
  ov->add_option("--svg", ov_svg, "Annotated heatmap SVG output");
  ov->add_option("--title", ov_title, "Heatmap title");
  ov->callback([&]() {
    if (ov_dataset.empty() == ov_preds.empty())
      raise(ErrKind::InvalidInput,
            "overlap needs exactly one of --dataset or --preds");
    const bool is_preds = !ov_preds.empty();
    run_overlap(is_preds ? ov_preds : ov_dataset, is_preds, resolve(ov_csv),
                ov_svg.empty() ? fs::path{} : resolve(ov_svg), ov_title);
    std::printf("wrote %s\n", resolve(ov_csv).string().c_str());
  });

  // ---------- compare ----------
  auto* cmp = app.add_subcommand("compare", "Two-model comparison report");
  std::string preds_a, preds_b, cmp_out = "compare", rule = "exact";
  cmp->add_option("--dataset", ds_path, "Dataset JSONL")->required();
  cmp->add_option("--a", preds_a, "Predictions JSONL for model A")->required();
  cmp->add_option("--b", preds_b, "Predictions JSONL for model B")->required();
  cmp->add_option("--out-dir", cmp_out, "Report directory");
  cmp->add_option("--rule", rule, "Agreement rule")
      ->check(CLI::IsMember({"exact", "full-recall"}));
  cmp->callback([&]() {
    auto res = run_compare(ds_path, preds_a, preds_b, resolve(cmp_out), rule);
    std::printf("micro-F1 %.2f vs %.2f, accuracy %.2f vs %.2f -> %s\n",
                res.micro_f1_a, res.micro_f1_b, res.accuracy_a, res.accuracy_b,
                res.md_path.string().c_str());
  });

  // ---------- pipeline ----------
  auto* pipe = app.add_subcommand("pipeline", "End-to-end run from a config file");
  std::string pipe_config;
  bool force = false;
  pipe->add_option("config", pipe_config, "Pipeline config JSON")->required();
  pipe->add_flag("--force", force, "Re-run every stage regardless of state");
  pipe->callback([&]() {
    int rc = run_pipeline(pipe_config, force);
    if (rc != 0) throw CLI::RuntimeError(rc);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_validation_error(e.kind) ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace ttpc::cli
