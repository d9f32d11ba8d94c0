#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ttpc/encoder.hpp"
#include "ttpc/metrics.hpp"
#include "ttpc/records.hpp"
#include "ttpc/tokenizer.hpp"

namespace ttpc {

// Hyperparameters; the defaults are the paper protocol (AdamW, lr 2e-5,
// BCE, sigmoid, batch 8, 25 epochs, linear schedule with zero warm-up,
// 512 tokens, threshold 0.5, 5 folds, split seed 42, train seed 519).
struct TrainingConfig {
  std::string optimizer = "adamw";
  double learning_rate = 2e-5;
  std::string loss = "bce";
  std::string activation = "sigmoid";
  int batch_size = 8;
  int epochs = 25;
  std::string scheduler = "linear";
  int warmup_steps = 0;
  int max_tokens = 512;
  double threshold = 0.5;
  int folds = 5;
  uint64_t split_seed = 42;
  uint64_t train_seed = 519;
  std::string base_model = "miniature";
  double weight_decay = 0.01;

  void validate() const;
  static TrainingConfig table1();
  // From-scratch profile for the bundled miniature encoder: higher learning
  // rate and a shorter context; everything else stays at the paper values.
  static TrainingConfig miniature();
};

// Registry of bundled encoder shapes. Unknown ids raise a configuration
// error (external pretrained checkpoints are not part of this build).
ArchConfig arch_for_base(const std::string& base_model, int max_tokens);

struct FoldMetrics {
  int fold = 0;
  double train_loss = 0.0;  // running-average loss of the final epoch
  double test_loss = 0.0;   // BCE on the held-out fold
  MetricsReport report;     // held-out scores
  std::vector<double> epoch_train_loss;
  int truncated_records = 0;
};

struct SftPrediction {
  std::array<float, kTacticCount> probs{};
  LabelVector labels;
  bool truncated = false;
};

// A fine-tuned encoder + head with its tokenizer and provenance.
class TrainedClassifier {
 public:
  TrainedClassifier(std::string base_model, TrainingConfig config,
                    Tokenizer tokenizer, MiniEncoder model, int fold_index,
                    FoldMetrics metrics);

  const std::string& base_model() const { return base_model_; }
  const TrainingConfig& config() const { return config_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }
  const MiniEncoder& model() const { return model_; }
  int fold_index() const { return fold_index_; }
  const FoldMetrics& metrics() const { return metrics_; }
  std::string model_id() const;

  // Thread-safe (serialized on an internal mutex); parameters are never
  // modified. Bit i is set iff probability i is strictly above threshold.
  SftPrediction predict(const std::string& text) const;
  std::vector<SftPrediction> predict_batch(
      const std::vector<std::string>& texts) const;

 private:
  std::string base_model_;
  TrainingConfig config_;
  Tokenizer tokenizer_;
  mutable MiniEncoder model_;  // forward() uses internal scratch
  int fold_index_;
  FoldMetrics metrics_;
  mutable std::mutex mu_;
};

// Tokenizes one record under the model's tokenizer contract; empty text is
// an invalid-input error. Truncation (tail-only) is reported on the result.
Tokenized prepare_inputs(const DescriptionRecord& record, const Tokenizer& tk,
                         int max_tokens);

// Threshold rule: bit i set iff probs[i] > threshold, so a probability of
// exactly 0.5 stays 0 under the default threshold.
LabelVector binarize_probs(const float* probs, double threshold);

using TrainProgress =
    std::function<void(int fold, int epoch, double train_loss)>;

struct CrossValResult {
  std::vector<std::unique_ptr<TrainedClassifier>> folds;
  FoldAssignment assignment;
  double avg_train_loss = 0.0;
  double avg_test_loss = 0.0;
  double avg_accuracy = 0.0;
  double avg_micro_f1 = 0.0;
};

// K-fold cross-validated fine-tuning: for each fold f, trains on the other
// folds and evaluates on f. Deterministic given the config seeds.
CrossValResult train_crossval(const std::vector<DescriptionRecord>& records,
                              const TrainingConfig& config,
                              const TrainProgress& progress = nullptr);

// Highest held-out micro-F1; ties go to the lowest fold index.
const TrainedClassifier& select_best(
    const std::vector<std::unique_ptr<TrainedClassifier>>& folds);

// Model artifact directory: config.json + vocab.txt + weights.bin.
// Round-trips preserve bitwise-identical predictions.
void save_model(const TrainedClassifier& clf,
                const std::filesystem::path& dir);
std::unique_ptr<TrainedClassifier> load_model(
    const std::filesystem::path& dir);

}  // namespace ttpc
