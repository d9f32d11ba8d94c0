#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace ttpc {

// Decoupled weight decay Adam. Weight decay is applied to every parameter,
// matching the PyTorch AdamW default.
class AdamW {
 public:
  AdamW(size_t n, double lr, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8)
      : m_(n, 0.0f),
        v_(n, 0.0f),
        lr_(lr),
        wd_(weight_decay),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps) {}

  // lr_scale comes from the scheduler; one call per optimizer step.
  void step(std::vector<float>& params, const std::vector<float>& grads,
            double lr_scale) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    const double lr = lr_ * lr_scale;
    for (size_t i = 0; i < params.size(); ++i) {
      const double gi = grads[i];
      const double m = beta1_ * m_[i] + (1.0 - beta1_) * gi;
      const double v = beta2_ * v_[i] + (1.0 - beta2_) * gi * gi;
      m_[i] = static_cast<float>(m);
      v_[i] = static_cast<float>(v);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      const double upd = mhat / (std::sqrt(vhat) + eps_) + wd_ * params[i];
      params[i] = static_cast<float>(params[i] - lr * upd);
    }
  }

  int64_t steps_taken() const { return t_; }

 private:
  std::vector<float> m_, v_;
  double lr_, wd_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

// Linear decay to zero over the total step budget, no warm-up.
class LinearSchedule {
 public:
  explicit LinearSchedule(int64_t total_steps) : total_(total_steps) {}
  double scale(int64_t step) const {
    if (total_ <= 0) return 1.0;
    if (step >= total_) return 0.0;
    return double(total_ - step) / double(total_);
  }

 private:
  int64_t total_;
};

}  // namespace ttpc
