#include "ttpc/encoder.hpp"

#include <cmath>
#include <cstring>

#include "ttpc/errors.hpp"
#include "ttpc/kernels.hpp"

namespace ttpc {

using namespace kern;

void ArchConfig::validate() const {
  if (vocab_size < 2) raise(ErrKind::Config, "vocab_size must be >= 2");
  if (dim < 2 || dim % heads != 0)
    raise(ErrKind::Config, "dim must be a positive multiple of heads");
  if (layers < 0) raise(ErrKind::Config, "layers must be >= 0");
  if (ffn_mult < 1) raise(ErrKind::Config, "ffn_mult must be >= 1");
  if (max_positions < 1) raise(ErrKind::Config, "max_positions must be >= 1");
}

MiniEncoder::MiniEncoder(ArchConfig arch) : arch_(arch) {
  arch_.validate();
  const size_t d = arch_.dim, f = arch_.ffn_dim();
  size_t off = 0;
  auto take = [&off](size_t n) {
    size_t at = off;
    off += n;
    return at;
  };
  tok_emb_ = take(size_t(arch_.vocab_size) * d);
  pos_emb_ = take(size_t(arch_.max_positions) * d);
  layer_off_.resize(arch_.layers);
  for (auto& L : layer_off_) {
    L.ln1_g = take(d);
    L.ln1_b = take(d);
    L.wq = take(d * d);
    L.bq = take(d);
    L.wk = take(d * d);
    L.bk = take(d);
    L.wv = take(d * d);
    L.bv = take(d);
    L.wo = take(d * d);
    L.bo = take(d);
    L.ln2_g = take(d);
    L.ln2_b = take(d);
    L.w1 = take(d * f);
    L.b1 = take(f);
    L.w2 = take(f * d);
    L.b2 = take(d);
  }
  lnf_g_ = take(d);
  lnf_b_ = take(d);
  head_w_ = take(d * size_t(kTacticCount));
  head_b_ = take(kTacticCount);
  params_.assign(off, 0.0f);
  grads_.assign(off, 0.0f);
}

void MiniEncoder::init_params(Rng& rng) {
  const double std = 0.02;
  for (auto& v : params_) v = static_cast<float>(rng.normal(0.0, std));
  const size_t d = arch_.dim;
  auto ones = [&](size_t at, size_t n) {
    for (size_t i = 0; i < n; ++i) params_[at + i] = 1.0f;
  };
  auto zeros = [&](size_t at, size_t n) {
    for (size_t i = 0; i < n; ++i) params_[at + i] = 0.0f;
  };
  for (auto& L : layer_off_) {
    ones(L.ln1_g, d);
    zeros(L.ln1_b, d);
    ones(L.ln2_g, d);
    zeros(L.ln2_b, d);
    zeros(L.bq, d);
    zeros(L.bk, d);
    zeros(L.bv, d);
    zeros(L.bo, d);
    zeros(L.b1, arch_.ffn_dim());
    zeros(L.b2, d);
  }
  ones(lnf_g_, d);
  zeros(lnf_b_, d);
  zeros(head_b_, kTacticCount);
  // Pad embedding starts at zero; it is masked out of pooling anyway.
  zeros(tok_emb_, d);
}

void MiniEncoder::zero_grads() { fill_zero(grads_.data(), grads_.size()); }

void MiniEncoder::attention_forward(LayerActs& a, const EncoderBatch& b) {
  const int d = arch_.dim, h = arch_.heads, dh = d / h;
  const int B = b.batch, S = b.seq;
  const float inv_sqrt = 1.0f / std::sqrt(float(dh));
  a.attn.assign(size_t(B) * h * S * S, 0.0f);
#pragma omp parallel for schedule(static) collapse(2) if (active_backend() == Backend::OpenMP)
  for (int bi = 0; bi < B; ++bi) {
    for (int hi = 0; hi < h; ++hi) {
      const int len = b.lens[bi];
      float* attn = a.attn.data() + (size_t(bi) * h + hi) * S * S;
      for (int s1 = 0; s1 < S; ++s1) {
        const float* qrow = a.q.data() + (size_t(bi) * S + s1) * d + hi * dh;
        float* arow = attn + size_t(s1) * S;
        for (int s2 = 0; s2 < S; ++s2) {
          if (s2 >= len) {
            arow[s2] = -1e30f;
            continue;
          }
          const float* krow = a.k.data() + (size_t(bi) * S + s2) * d + hi * dh;
          float acc = 0.0f;
          for (int e = 0; e < dh; ++e) acc += qrow[e] * krow[e];
          arow[s2] = acc * inv_sqrt;
        }
        // softmax in place
        float mx = arow[0];
        for (int s2 = 1; s2 < S; ++s2) mx = std::max(mx, arow[s2]);
        float sum = 0.0f;
        for (int s2 = 0; s2 < S; ++s2) {
          arow[s2] = std::exp(arow[s2] - mx);
          sum += arow[s2];
        }
        const float inv = 1.0f / sum;
        for (int s2 = 0; s2 < S; ++s2) arow[s2] *= inv;
        // context = attn * v
        float* crow = a.ctx.data() + (size_t(bi) * S + s1) * d + hi * dh;
        for (int e = 0; e < dh; ++e) crow[e] = 0.0f;
        for (int s2 = 0; s2 < len; ++s2) {
          const float w = arow[s2];
          const float* vrow = a.v.data() + (size_t(bi) * S + s2) * d + hi * dh;
          for (int e = 0; e < dh; ++e) crow[e] += w * vrow[e];
        }
      }
    }
  }
}

void MiniEncoder::attention_backward(LayerActs& a, const EncoderBatch& b,
                                     const float* d_ctx, float* d_q,
                                     float* d_k, float* d_v) {
  const int d = arch_.dim, h = arch_.heads, dh = d / h;
  const int B = b.batch, S = b.seq;
  const float inv_sqrt = 1.0f / std::sqrt(float(dh));
#pragma omp parallel for schedule(static) collapse(2) if (active_backend() == Backend::OpenMP)
  for (int bi = 0; bi < B; ++bi) {
    for (int hi = 0; hi < h; ++hi) {
      const int len = b.lens[bi];
      const float* attn = a.attn.data() + (size_t(bi) * h + hi) * S * S;
      std::vector<float> dscore(static_cast<size_t>(S), 0.0f);
      for (int s1 = 0; s1 < S; ++s1) {
        const float* dcrow = d_ctx + (size_t(bi) * S + s1) * d + hi * dh;
        const float* arow = attn + size_t(s1) * S;
        // d_attn and softmax jacobian, then dq/dk/dv
        float dot = 0.0f;
        for (int s2 = 0; s2 < len; ++s2) {
          const float* vrow = a.v.data() + (size_t(bi) * S + s2) * d + hi * dh;
          float da = 0.0f;
          for (int e = 0; e < dh; ++e) da += dcrow[e] * vrow[e];
          dscore[s2] = da;
          dot += da * arow[s2];
        }
        for (int s2 = 0; s2 < len; ++s2)
          dscore[s2] = arow[s2] * (dscore[s2] - dot) * inv_sqrt;
        float* dqrow = d_q + (size_t(bi) * S + s1) * d + hi * dh;
        const float* qrow = a.q.data() + (size_t(bi) * S + s1) * d + hi * dh;
        for (int e = 0; e < dh; ++e) dqrow[e] = 0.0f;
        for (int s2 = 0; s2 < len; ++s2) {
          const float ds = dscore[s2];
          const float w = arow[s2];
          const float* krow = a.k.data() + (size_t(bi) * S + s2) * d + hi * dh;
          float* dkrow = d_k + (size_t(bi) * S + s2) * d + hi * dh;
          float* dvrow = d_v + (size_t(bi) * S + s2) * d + hi * dh;
          for (int e = 0; e < dh; ++e) {
            dqrow[e] += ds * krow[e];
            dkrow[e] += ds * qrow[e];
            dvrow[e] += w * dcrow[e];
          }
        }
      }
    }
  }
}

double MiniEncoder::forward(const EncoderBatch& b, const float* targets,
                            bool keep_for_backward) {
  if (b.batch <= 0 || b.seq <= 0 || b.seq > arch_.max_positions)
    raise(ErrKind::InvalidInput, "bad encoder batch shape");
  const int d = arch_.dim, f = arch_.ffn_dim();
  const int B = b.batch, S = b.seq;
  const size_t rows = size_t(B) * S;

  batch_ = b;
  x_.assign(size_t(arch_.layers + 1) * rows * d, 0.0f);
  acts_.assign(arch_.layers, LayerActs{});

  // embeddings
  float* x0 = x_.data();
  for (size_t r = 0; r < rows; ++r) {
    const int32_t id = b.ids[r];
    if (id < 0 || id >= arch_.vocab_size)
      raise(ErrKind::InvalidInput, "token id out of vocab range");
    const int pos = int(r % S);
    const float* te = p(tok_emb_) + size_t(id) * d;
    const float* pe = p(pos_emb_) + size_t(pos) * d;
    float* xr = x0 + r * d;
    for (int j = 0; j < d; ++j) xr[j] = te[j] + pe[j];
  }

  for (int li = 0; li < arch_.layers; ++li) {
    LayerActs& a = acts_[li];
    const LayerParams& L = layer_off_[li];
    const float* x_in = x_.data() + size_t(li) * rows * d;
    float* x_out = x_.data() + size_t(li + 1) * rows * d;

    a.ln1_out.resize(rows * d);
    a.ln1_mean.resize(rows);
    a.ln1_rstd.resize(rows);
    layer_norm(x_in, p(L.ln1_g), p(L.ln1_b), a.ln1_out.data(),
               a.ln1_mean.data(), a.ln1_rstd.data(), int(rows), d);

    a.q.resize(rows * d);
    a.k.resize(rows * d);
    a.v.resize(rows * d);
    matmul(a.ln1_out.data(), p(L.wq), a.q.data(), int(rows), d, d);
    add_bias(a.q.data(), p(L.bq), int(rows), d);
    matmul(a.ln1_out.data(), p(L.wk), a.k.data(), int(rows), d, d);
    add_bias(a.k.data(), p(L.bk), int(rows), d);
    matmul(a.ln1_out.data(), p(L.wv), a.v.data(), int(rows), d, d);
    add_bias(a.v.data(), p(L.bv), int(rows), d);

    a.ctx.assign(rows * d, 0.0f);
    attention_forward(a, b);

    a.attn_out.resize(rows * d);
    matmul(a.ctx.data(), p(L.wo), a.attn_out.data(), int(rows), d, d);
    add_bias(a.attn_out.data(), p(L.bo), int(rows), d);

    a.x_mid.resize(rows * d);
    copy(x_in, a.x_mid.data(), int64_t(rows) * d);
    add_inplace(a.x_mid.data(), a.attn_out.data(), int64_t(rows) * d);

    a.ln2_out.resize(rows * d);
    a.ln2_mean.resize(rows);
    a.ln2_rstd.resize(rows);
    layer_norm(a.x_mid.data(), p(L.ln2_g), p(L.ln2_b), a.ln2_out.data(),
               a.ln2_mean.data(), a.ln2_rstd.data(), int(rows), d);

    a.ffn_pre.resize(rows * f);
    a.ffn_act.resize(rows * f);
    matmul(a.ln2_out.data(), p(L.w1), a.ffn_pre.data(), int(rows), d, f);
    add_bias(a.ffn_pre.data(), p(L.b1), int(rows), f);
    gelu(a.ffn_pre.data(), a.ffn_act.data(), int64_t(rows) * f);

    matmul(a.ffn_act.data(), p(L.w2), x_out, int(rows), f, d);
    add_bias(x_out, p(L.b2), int(rows), d);
    add_inplace(x_out, a.x_mid.data(), int64_t(rows) * d);
  }

  const float* x_top = x_.data() + size_t(arch_.layers) * rows * d;
  lnf_out_.resize(rows * d);
  lnf_mean_.resize(rows);
  lnf_rstd_.resize(rows);
  layer_norm(x_top, p(lnf_g_), p(lnf_b_), lnf_out_.data(), lnf_mean_.data(),
             lnf_rstd_.data(), int(rows), d);

  pooled_.assign(size_t(B) * d, 0.0f);
  for (int bi = 0; bi < B; ++bi) {
    const int len = batch_.lens[bi];
    float* pr = pooled_.data() + size_t(bi) * d;
    for (int s = 0; s < len; ++s) {
      const float* xr = lnf_out_.data() + (size_t(bi) * S + s) * d;
      for (int j = 0; j < d; ++j) pr[j] += xr[j];
    }
    const float inv = 1.0f / float(len);
    for (int j = 0; j < d; ++j) pr[j] *= inv;
  }

  logits_.resize(size_t(B) * kTacticCount);
  matmul(pooled_.data(), p(head_w_), logits_.data(), B, d, kTacticCount);
  add_bias(logits_.data(), p(head_b_), B, kTacticCount);
  probs_.resize(logits_.size());
  sigmoid(logits_.data(), probs_.data(), int64_t(logits_.size()));

  double loss = 0.0;
  if (targets) {
    d_logits_.resize(logits_.size());
    loss = bce_with_logits(logits_.data(), targets, d_logits_.data(),
                           int64_t(logits_.size()));
  }
  have_acts_ = keep_for_backward;
  if (!keep_for_backward) {
    x_.clear();
    acts_.clear();
  }
  return loss;
}

void MiniEncoder::backward() {
  if (!have_acts_)
    raise(ErrKind::InvalidInput, "backward() without a kept forward pass");
  const int d = arch_.dim, f = arch_.ffn_dim();
  const int B = batch_.batch, S = batch_.seq;
  const size_t rows = size_t(B) * S;

  // head
  std::vector<float> d_pooled(size_t(B) * d, 0.0f);
  matmul_nt(d_logits_.data(), p(head_w_), d_pooled.data(), B, kTacticCount, d);
  matmul_tn(pooled_.data(), d_logits_.data(), g(head_w_), B, d, kTacticCount,
            true);
  {
    std::vector<float> db(kTacticCount);
    bias_grad(d_logits_.data(), db.data(), B, kTacticCount);
    add_inplace(g(head_b_), db.data(), kTacticCount);
  }

  // un-pool into the final LN output rows
  std::vector<float> d_lnf(rows * d, 0.0f);
  for (int bi = 0; bi < B; ++bi) {
    const int len = batch_.lens[bi];
    const float inv = 1.0f / float(len);
    const float* dp = d_pooled.data() + size_t(bi) * d;
    for (int s = 0; s < len; ++s) {
      float* dr = d_lnf.data() + (size_t(bi) * S + s) * d;
      for (int j = 0; j < d; ++j) dr[j] = dp[j] * inv;
    }
  }

  std::vector<float> d_x(rows * d, 0.0f);
  const float* x_top = x_.data() + size_t(arch_.layers) * rows * d;
  layer_norm_grad(x_top, p(lnf_g_), lnf_mean_.data(), lnf_rstd_.data(),
                  d_lnf.data(), d_x.data(), g(lnf_g_), g(lnf_b_), int(rows),
                  d);

  std::vector<float> d_ffn_act(rows * f), d_ffn_pre(rows * f);
  std::vector<float> d_ln2(rows * d), d_mid(rows * d), d_ctx(rows * d);
  std::vector<float> d_q(rows * d), d_k(rows * d), d_v(rows * d);
  std::vector<float> d_ln1(rows * d), scratch(rows * d);

  for (int li = arch_.layers - 1; li >= 0; --li) {
    LayerActs& a = acts_[li];
    const LayerParams& L = layer_off_[li];
    const float* x_in = x_.data() + size_t(li) * rows * d;

    // FFN: x_out = x_mid + W2(gelu(W1 ln2 + b1)) + b2; d_x holds d(x_out).
    matmul_nt(d_x.data(), p(L.w2), d_ffn_act.data(), int(rows), d, f);
    matmul_tn(a.ffn_act.data(), d_x.data(), g(L.w2), int(rows), f, d, true);
    {
      std::vector<float> db(d);
      bias_grad(d_x.data(), db.data(), int(rows), d);
      add_inplace(g(L.b2), db.data(), d);
    }
    gelu_grad(a.ffn_pre.data(), d_ffn_act.data(), d_ffn_pre.data(),
              int64_t(rows) * f);
    matmul_nt(d_ffn_pre.data(), p(L.w1), d_ln2.data(), int(rows), f, d);
    matmul_tn(a.ln2_out.data(), d_ffn_pre.data(), g(L.w1), int(rows), d, f,
              true);
    {
      std::vector<float> db(f);
      bias_grad(d_ffn_pre.data(), db.data(), int(rows), f);
      add_inplace(g(L.b1), db.data(), f);
    }

    // d_mid = residual path + LN2 backward
    copy(d_x.data(), d_mid.data(), int64_t(rows) * d);
    layer_norm_grad(a.x_mid.data(), p(L.ln2_g), a.ln2_mean.data(),
                    a.ln2_rstd.data(), d_ln2.data(), scratch.data(),
                    g(L.ln2_g), g(L.ln2_b), int(rows), d);
    add_inplace(d_mid.data(), scratch.data(), int64_t(rows) * d);

    // attention output projection
    matmul_nt(d_mid.data(), p(L.wo), d_ctx.data(), int(rows), d, d);
    matmul_tn(a.ctx.data(), d_mid.data(), g(L.wo), int(rows), d, d, true);
    {
      std::vector<float> db(d);
      bias_grad(d_mid.data(), db.data(), int(rows), d);
      add_inplace(g(L.bo), db.data(), d);
    }

    fill_zero(d_k.data(), int64_t(rows) * d);
    fill_zero(d_v.data(), int64_t(rows) * d);
    attention_backward(a, batch_, d_ctx.data(), d_q.data(), d_k.data(),
                       d_v.data());

    // back through the q/k/v projections into LN1 output
    matmul_nt(d_q.data(), p(L.wq), d_ln1.data(), int(rows), d, d);
    matmul_nt(d_k.data(), p(L.wk), scratch.data(), int(rows), d, d);
    add_inplace(d_ln1.data(), scratch.data(), int64_t(rows) * d);
    matmul_nt(d_v.data(), p(L.wv), scratch.data(), int(rows), d, d);
    add_inplace(d_ln1.data(), scratch.data(), int64_t(rows) * d);

    matmul_tn(a.ln1_out.data(), d_q.data(), g(L.wq), int(rows), d, d, true);
    matmul_tn(a.ln1_out.data(), d_k.data(), g(L.wk), int(rows), d, d, true);
    matmul_tn(a.ln1_out.data(), d_v.data(), g(L.wv), int(rows), d, d, true);
    {
      std::vector<float> db(d);
      bias_grad(d_q.data(), db.data(), int(rows), d);
      add_inplace(g(L.bq), db.data(), d);
      bias_grad(d_k.data(), db.data(), int(rows), d);
      add_inplace(g(L.bk), db.data(), d);
      bias_grad(d_v.data(), db.data(), int(rows), d);
      add_inplace(g(L.bv), db.data(), d);
    }

    // d(x_in) = d_mid (residual) + LN1 backward
    layer_norm_grad(x_in, p(L.ln1_g), a.ln1_mean.data(), a.ln1_rstd.data(),
                    d_ln1.data(), scratch.data(), g(L.ln1_g), g(L.ln1_b),
                    int(rows), d);
    copy(d_mid.data(), d_x.data(), int64_t(rows) * d);
    add_inplace(d_x.data(), scratch.data(), int64_t(rows) * d);
  }

  // embedding gradients; serial scatter keeps accumulation deterministic
  float* d_tok = g(tok_emb_);
  float* d_pos = g(pos_emb_);
  for (size_t r = 0; r < rows; ++r) {
    const int32_t id = batch_.ids[r];
    const int pos = int(r % S);
    const float* dr = d_x.data() + r * d;
    float* dt = d_tok + size_t(id) * d;
    float* dp = d_pos + size_t(pos) * d;
    for (int j = 0; j < d; ++j) {
      dt[j] += dr[j];
      dp[j] += dr[j];
    }
  }
  have_acts_ = false;
}

}  // namespace ttpc
