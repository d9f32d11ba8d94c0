#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttpc/rng.hpp"
#include "ttpc/tactics.hpp"

namespace ttpc {

// Transformer encoder shape. The classification head (width 14, one logit
// per tactic) is part of the parameter block.
struct ArchConfig {
  int vocab_size = 0;  // filled in once the tokenizer is built
  int dim = 32;
  int heads = 2;
  int layers = 1;
  int ffn_mult = 4;
  int max_positions = 96;

  int ffn_dim() const { return dim * ffn_mult; }
  void validate() const;
};

// A tokenized minibatch, padded to the longest sequence in the batch.
struct EncoderBatch {
  int batch = 0;
  int seq = 0;
  std::vector<int32_t> ids;   // batch*seq, pad id 0
  std::vector<int32_t> lens;  // true length per row, >= 1
};

// Pre-LN transformer encoder with mean pooling over non-pad positions and a
// dense sigmoid head of width 14. Parameters live in one flat float block so
// the optimizer and the artifact writer can treat them uniformly.
class MiniEncoder {
 public:
  explicit MiniEncoder(ArchConfig arch);

  const ArchConfig& arch() const { return arch_; }
  size_t param_count() const { return params_.size(); }
  std::vector<float>& params() { return params_; }
  const std::vector<float>& params() const { return params_; }
  std::vector<float>& grads() { return grads_; }

  void init_params(Rng& rng);

  // Runs the forward pass. When targets (batch x 14, row-major) is non-null
  // the mean BCE-with-logits loss is returned, otherwise 0. Activations are
  // kept when keep_for_backward is set.
  double forward(const EncoderBatch& b, const float* targets,
                 bool keep_for_backward);
  // Accumulates parameter gradients for the last forward pass.
  void backward();
  void zero_grads();

  const std::vector<float>& logits() const { return logits_; }
  // Sigmoid probabilities for the last forward pass, batch x 14.
  const std::vector<float>& probs() const { return probs_; }

 private:
  struct LayerParams {
    size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    size_t ln2_g, ln2_b, w1, b1, w2, b2;
  };
  struct LayerActs {
    std::vector<float> ln1_out, ln1_mean, ln1_rstd;
    std::vector<float> q, k, v, attn, ctx, attn_out;
    std::vector<float> x_mid;  // input + attention, feeds LN2
    std::vector<float> ln2_out, ln2_mean, ln2_rstd;
    std::vector<float> ffn_pre, ffn_act;
  };

  void attention_forward(LayerActs& a, const EncoderBatch& b);
  void attention_backward(LayerActs& a, const EncoderBatch& b,
                          const float* d_ctx, float* d_q, float* d_k,
                          float* d_v);

  float* p(size_t off) { return params_.data() + off; }
  const float* p(size_t off) const { return params_.data() + off; }
  float* g(size_t off) { return grads_.data() + off; }

  ArchConfig arch_;
  std::vector<float> params_, grads_;

  size_t tok_emb_, pos_emb_;
  std::vector<LayerParams> layer_off_;
  size_t lnf_g_, lnf_b_, head_w_, head_b_;

  // Forward-pass stashes (sized per batch).
  EncoderBatch batch_;
  std::vector<float> x_;  // (layers+1) slabs of batch*seq*dim
  std::vector<LayerActs> acts_;
  std::vector<float> lnf_out_, lnf_mean_, lnf_rstd_;
  std::vector<float> pooled_, logits_, probs_;
  std::vector<float> d_logits_;
  bool have_acts_ = false;
};

}  // namespace ttpc
