#include "ttpc/sft.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "ttpc/errors.hpp"
#include "ttpc/kfold.hpp"
#include "ttpc/optim.hpp"
#include "ttpc/rng.hpp"
#include "ttpc/sha256.hpp"

namespace ttpc {

using nlohmann::json;
namespace fs = std::filesystem;

void TrainingConfig::validate() const {
  if (learning_rate <= 0) raise(ErrKind::Config, "learning_rate must be > 0");
  if (!(threshold > 0.0 && threshold < 1.0))
    raise(ErrKind::Config, "threshold must be in (0, 1)");
  if (max_tokens < 1) raise(ErrKind::Config, "max_tokens must be >= 1");
  if (batch_size < 1) raise(ErrKind::Config, "batch_size must be >= 1");
  if (epochs < 1) raise(ErrKind::Config, "epochs must be >= 1");
  if (folds < 2) raise(ErrKind::Config, "folds must be >= 2");
  if (optimizer != "adamw") raise(ErrKind::Config, "unsupported optimizer: " + optimizer);
  if (loss != "bce") raise(ErrKind::Config, "unsupported loss: " + loss);
  if (activation != "sigmoid")
    raise(ErrKind::Config, "unsupported activation: " + activation);
  if (scheduler != "linear")
    raise(ErrKind::Config, "unsupported scheduler: " + scheduler);
  if (warmup_steps != 0)
    raise(ErrKind::Config, "only zero warm-up steps are supported");
}

TrainingConfig TrainingConfig::table1() { return TrainingConfig{}; }

TrainingConfig TrainingConfig::miniature() {
  TrainingConfig c;
  c.base_model = "miniature";
  c.learning_rate = 2e-3;  // from-scratch training needs more than the
                           // fine-tuning rate
  c.max_tokens = 96;
  return c;
}

ArchConfig arch_for_base(const std::string& base_model, int max_tokens) {
  ArchConfig a;
  a.max_positions = max_tokens;
  if (base_model == "miniature") {
    a.dim = 32;
    a.heads = 2;
    a.layers = 1;
    a.ffn_mult = 4;
    return a;
  }
  if (base_model == "miniature-wide") {
    a.dim = 64;
    a.heads = 4;
    a.layers = 2;
    a.ffn_mult = 4;
    return a;
  }
  raise(ErrKind::Config,
        "unknown base model '" + base_model +
            "' (bundled encoders: miniature, miniature-wide; external "
            "pretrained checkpoints are not part of this build)");
}

namespace {

constexpr int kVocabCap = 8000;
constexpr int kEvalBatch = 32;

json arch_to_json(const ArchConfig& a) {
  return json{{"vocab_size", a.vocab_size}, {"dim", a.dim},
              {"heads", a.heads},           {"layers", a.layers},
              {"ffn_mult", a.ffn_mult},     {"max_positions", a.max_positions}};
}

ArchConfig arch_from_json(const json& j) {
  ArchConfig a;
  a.vocab_size = j.at("vocab_size").get<int>();
  a.dim = j.at("dim").get<int>();
  a.heads = j.at("heads").get<int>();
  a.layers = j.at("layers").get<int>();
  a.ffn_mult = j.at("ffn_mult").get<int>();
  a.max_positions = j.at("max_positions").get<int>();
  return a;
}

json config_to_json(const TrainingConfig& c) {
  return json{{"optimizer", c.optimizer},
              {"learning_rate", c.learning_rate},
              {"loss", c.loss},
              {"activation", c.activation},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"scheduler", c.scheduler},
              {"warmup_steps", c.warmup_steps},
              {"max_tokens", c.max_tokens},
              {"threshold", c.threshold},
              {"folds", c.folds},
              {"split_seed", c.split_seed},
              {"train_seed", c.train_seed},
              {"base_model", c.base_model},
              {"weight_decay", c.weight_decay}};
}

TrainingConfig config_from_json(const json& j) {
  TrainingConfig c;
  c.optimizer = j.at("optimizer").get<std::string>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.loss = j.at("loss").get<std::string>();
  c.activation = j.at("activation").get<std::string>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.scheduler = j.at("scheduler").get<std::string>();
  c.warmup_steps = j.at("warmup_steps").get<int>();
  c.max_tokens = j.at("max_tokens").get<int>();
  c.threshold = j.at("threshold").get<double>();
  c.folds = j.at("folds").get<int>();
  c.split_seed = j.at("split_seed").get<uint64_t>();
  c.train_seed = j.at("train_seed").get<uint64_t>();
  c.base_model = j.at("base_model").get<std::string>();
  c.weight_decay = j.at("weight_decay").get<double>();
  return c;
}

// Pads a set of tokenized rows into one batch; sequences are already
// capped at max_tokens.
EncoderBatch make_batch(const std::vector<const Tokenized*>& rows) {
  EncoderBatch b;
  b.batch = int(rows.size());
  b.seq = 1;
  for (const auto* r : rows)
    b.seq = std::max(b.seq, int(r->ids.size()));
  b.ids.assign(size_t(b.batch) * b.seq, Tokenizer::kPad);
  b.lens.resize(b.batch);
  for (int i = 0; i < b.batch; ++i) {
    const auto& ids = rows[i]->ids;
    b.lens[i] = std::max<int32_t>(1, int32_t(ids.size()));
    std::copy(ids.begin(), ids.end(), b.ids.begin() + size_t(i) * b.seq);
  }
  return b;
}

}  // namespace

LabelVector binarize_probs(const float* probs, double threshold) {
  LabelVector v;
  for (int i = 0; i < kTacticCount; ++i)
    if (probs[i] > threshold) v.set(tactic_at(i));
  return v;
}

Tokenized prepare_inputs(const DescriptionRecord& record, const Tokenizer& tk,
                         int max_tokens) {
  if (record.text.empty())
    raise(ErrKind::InvalidInput, "record " + record.id + " has empty text");
  return tk.encode(record.text, max_tokens);
}

TrainedClassifier::TrainedClassifier(std::string base_model,
                                     TrainingConfig config, Tokenizer tokenizer,
                                     MiniEncoder model, int fold_index,
                                     FoldMetrics metrics)
    : base_model_(std::move(base_model)),
      config_(std::move(config)),
      tokenizer_(std::move(tokenizer)),
      model_(std::move(model)),
      fold_index_(fold_index),
      metrics_(std::move(metrics)) {}

std::string TrainedClassifier::model_id() const {
  return base_model_ + "-sft-fold" + std::to_string(fold_index_);
}

SftPrediction TrainedClassifier::predict(const std::string& text) const {
  return predict_batch({text})[0];
}

std::vector<SftPrediction> TrainedClassifier::predict_batch(
    const std::vector<std::string>& texts) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<SftPrediction> out(texts.size());
  std::vector<Tokenized> toks(texts.size());
  for (size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty())
      raise(ErrKind::InvalidInput, "predict on empty text");
    toks[i] = tokenizer_.encode(texts[i], config_.max_tokens);
    out[i].truncated = toks[i].truncated;
  }
  for (size_t at = 0; at < texts.size(); at += kEvalBatch) {
    const size_t end = std::min(texts.size(), at + kEvalBatch);
    std::vector<const Tokenized*> rows;
    for (size_t i = at; i < end; ++i) rows.push_back(&toks[i]);
    EncoderBatch b = make_batch(rows);
    model_.forward(b, nullptr, false);
    const auto& probs = model_.probs();
    for (size_t i = at; i < end; ++i) {
      const float* p = probs.data() + (i - at) * kTacticCount;
      std::copy(p, p + kTacticCount, out[i].probs.begin());
      out[i].labels = binarize_probs(p, config_.threshold);
    }
  }
  return out;
}

CrossValResult train_crossval(const std::vector<DescriptionRecord>& records,
                              const TrainingConfig& config,
                              const TrainProgress& progress) {
  config.validate();
  if (records.empty())
    raise(ErrKind::InvalidInput, "train_crossval on empty dataset");
  for (const auto& r : records) r.validate();

  CrossValResult result;
  result.assignment = kfold_split(records, config.folds, config.split_seed);

  for (int fold = 0; fold < config.folds; ++fold) {
    std::vector<const DescriptionRecord*> train, test;
    for (const auto& r : records) {
      if (result.assignment.assignment.at(r.id) == fold)
        test.push_back(&r);
      else
        train.push_back(&r);
    }
    if (train.empty() || test.empty())
      raise(ErrKind::InvalidInput, "fold " + std::to_string(fold) +
                                       " leaves an empty train or test split");

    std::vector<std::string> train_texts;
    train_texts.reserve(train.size());
    for (auto* r : train) train_texts.push_back(r->text);
    Tokenizer tk = Tokenizer::build(train_texts, kVocabCap);

    ArchConfig arch = arch_for_base(config.base_model, config.max_tokens);
    arch.vocab_size = tk.vocab_size();
    MiniEncoder model(arch);
    // One stream per fold; the train seed governs init and batch order.
    Rng rng(config.train_seed + uint64_t(fold) * 0x9e3779b97f4a7c15ull);
    model.init_params(rng);

    FoldMetrics fm;
    fm.fold = fold;

    std::vector<Tokenized> train_tok(train.size()), test_tok(test.size());
    for (size_t i = 0; i < train.size(); ++i) {
      train_tok[i] = prepare_inputs(*train[i], tk, config.max_tokens);
      if (train_tok[i].truncated) fm.truncated_records += 1;
    }
    for (size_t i = 0; i < test.size(); ++i) {
      test_tok[i] = prepare_inputs(*test[i], tk, config.max_tokens);
      if (test_tok[i].truncated) fm.truncated_records += 1;
    }

    const int n_batches =
        int((train.size() + config.batch_size - 1) / size_t(config.batch_size));
    AdamW opt(model.param_count(), config.learning_rate, config.weight_decay);
    LinearSchedule sched(int64_t(n_batches) * config.epochs);
    int64_t step = 0;

    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      rng.shuffle(order);
      double epoch_loss = 0.0;
      size_t seen = 0;
      for (int bi = 0; bi < n_batches; ++bi) {
        const size_t at = size_t(bi) * config.batch_size;
        const size_t end = std::min(train.size(), at + config.batch_size);
        std::vector<const Tokenized*> rows;
        std::vector<float> targets;
        for (size_t i = at; i < end; ++i) {
          rows.push_back(&train_tok[order[i]]);
          for (int t = 0; t < kTacticCount; ++t)
            targets.push_back(
                train[order[i]]->gold.get(tactic_at(t)) ? 1.0f : 0.0f);
        }
        EncoderBatch b = make_batch(rows);
        model.zero_grads();
        double loss = model.forward(b, targets.data(), true);
        model.backward();
        opt.step(model.params(), model.grads(), sched.scale(step));
        ++step;
        epoch_loss += loss * double(rows.size());
        seen += rows.size();
      }
      fm.epoch_train_loss.push_back(epoch_loss / double(seen));
      if (progress) progress(fold, epoch, fm.epoch_train_loss.back());
    }
    fm.train_loss = fm.epoch_train_loss.back();

    // held-out evaluation
    std::vector<LabelVector> gold, pred;
    double test_loss = 0.0;
    for (size_t at = 0; at < test.size(); at += kEvalBatch) {
      const size_t end = std::min(test.size(), at + kEvalBatch);
      std::vector<const Tokenized*> rows;
      std::vector<float> targets;
      for (size_t i = at; i < end; ++i) {
        rows.push_back(&test_tok[i]);
        for (int t = 0; t < kTacticCount; ++t)
          targets.push_back(test[i]->gold.get(tactic_at(t)) ? 1.0f : 0.0f);
      }
      EncoderBatch b = make_batch(rows);
      test_loss += model.forward(b, targets.data(), false) * double(rows.size());
      const auto& probs = model.probs();
      for (size_t i = at; i < end; ++i) {
        gold.push_back(test[i]->gold);
        pred.push_back(binarize_probs(
            probs.data() + (i - at) * kTacticCount, config.threshold));
      }
    }
    fm.test_loss = test_loss / double(test.size());
    fm.report = score(gold, pred);

    result.avg_train_loss += fm.train_loss;
    result.avg_test_loss += fm.test_loss;
    result.avg_accuracy += fm.report.exact_match_accuracy;
    result.avg_micro_f1 += fm.report.micro_f1;

    result.folds.push_back(std::make_unique<TrainedClassifier>(
        config.base_model, config, std::move(tk), std::move(model), fold,
        std::move(fm)));
  }

  const double k = double(config.folds);
  result.avg_train_loss /= k;
  result.avg_test_loss /= k;
  result.avg_accuracy /= k;
  result.avg_micro_f1 /= k;
  return result;
}

const TrainedClassifier& select_best(
    const std::vector<std::unique_ptr<TrainedClassifier>>& folds) {
  if (folds.empty())
    raise(ErrKind::InvalidInput, "select_best on an empty classifier list");
  size_t best = 0;
  for (size_t i = 1; i < folds.size(); ++i) {
    if (folds[i]->metrics().report.micro_f1 >
        folds[best]->metrics().report.micro_f1)
      best = i;  // strict: ties keep the lowest fold index
  }
  return *folds[best];
}

void save_model(const TrainedClassifier& clf, const fs::path& dir) {
  fs::create_directories(dir);
  clf.tokenizer().save_vocab(dir / "vocab.txt");

  const auto& params = clf.model().params();
  {
    fs::path tmp = dir / "weights.bin.tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrKind::Io, "cannot write weights: " + tmp.string());
    const char magic[8] = {'T', 'T', 'P', 'C', 'M', 'D', 'L', '1'};
    out.write(magic, 8);
    uint64_t count = params.size();
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(params.data()),
              std::streamsize(params.size() * sizeof(float)));
    if (!out) raise(ErrKind::Io, "short write to " + tmp.string());
    out.close();
    fs::rename(tmp, dir / "weights.bin");
  }

  json meta;
  meta["format_version"] = 1;
  meta["base_model"] = clf.base_model();
  meta["fold_index"] = clf.fold_index();
  meta["arch"] = arch_to_json(clf.model().arch());
  meta["training"] = config_to_json(clf.config());
  meta["tactic_order"] = tactic_canonical_names();
  meta["vocab_fingerprint"] = clf.tokenizer().fingerprint();
  meta["weights_sha256"] = sha256_file_hex(dir / "weights.bin");
  meta["metrics"] = json{{"train_loss", clf.metrics().train_loss},
                         {"test_loss", clf.metrics().test_loss},
                         {"micro_f1", clf.metrics().report.micro_f1},
                         {"accuracy", clf.metrics().report.exact_match_accuracy}};
  fs::path tmp = dir / "config.json.tmp";
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  out << meta.dump(2) << '\n';
  out.close();
  fs::rename(tmp, dir / "config.json");
}

std::unique_ptr<TrainedClassifier> load_model(const fs::path& dir) {
  std::ifstream mf(dir / "config.json", std::ios::binary);
  if (!mf) raise(ErrKind::Io, "cannot open model config: " + (dir / "config.json").string());
  json meta;
  try {
    meta = json::parse(mf);
  } catch (const json::parse_error& e) {
    raise(ErrKind::Parse, "bad model config.json: " + std::string(e.what()));
  }
  if (meta.value("format_version", -1) != 1)
    raise(ErrKind::Version, "unsupported model format_version");

  const auto& names = tactic_canonical_names();
  const auto& order = meta.at("tactic_order");
  if (order.size() != names.size())
    raise(ErrKind::Version, "model tactic_order does not list 14 tactics");
  for (size_t i = 0; i < names.size(); ++i)
    if (order[i].get<std::string>() != names[i])
      raise(ErrKind::Version,
            "model tactic_order mismatch at position " + std::to_string(i) +
                "; refusing to reinterpret label indices");

  Tokenizer tk = Tokenizer::from_vocab_file(dir / "vocab.txt");
  if (tk.fingerprint() != meta.at("vocab_fingerprint").get<std::string>())
    raise(ErrKind::Config, "vocab.txt does not match the recorded fingerprint");

  ArchConfig arch = arch_from_json(meta.at("arch"));
  if (arch.vocab_size != tk.vocab_size())
    raise(ErrKind::Config, "vocab size mismatch between config and vocab.txt");

  const fs::path wpath = dir / "weights.bin";
  if (sha256_file_hex(wpath) != meta.at("weights_sha256").get<std::string>())
    raise(ErrKind::Config, "weights.bin does not match the recorded hash");

  std::ifstream wf(wpath, std::ios::binary);
  if (!wf) raise(ErrKind::Io, "cannot open weights: " + wpath.string());
  char magic[8];
  wf.read(magic, 8);
  if (std::string_view(magic, 8) != "TTPCMDL1")
    raise(ErrKind::Version, "weights.bin has an unknown magic");
  uint64_t count = 0;
  wf.read(reinterpret_cast<char*>(&count), 8);

  MiniEncoder model(arch);
  if (count != model.param_count())
    raise(ErrKind::Schema, "weights.bin parameter count mismatch");
  wf.read(reinterpret_cast<char*>(model.params().data()),
          std::streamsize(count * sizeof(float)));
  if (!wf) raise(ErrKind::Io, "weights.bin is truncated");

  FoldMetrics fm;
  fm.fold = meta.value("fold_index", 0);
  if (meta.contains("metrics")) {
    const auto& m = meta["metrics"];
    fm.train_loss = m.value("train_loss", 0.0);
    fm.test_loss = m.value("test_loss", 0.0);
    fm.report.micro_f1 = m.value("micro_f1", 0.0);
    fm.report.exact_match_accuracy = m.value("accuracy", 0.0);
  }

  return std::make_unique<TrainedClassifier>(
      meta.at("base_model").get<std::string>(),
      config_from_json(meta.at("training")), std::move(tk), std::move(model),
      fm.fold, std::move(fm));
}

}  // namespace ttpc
