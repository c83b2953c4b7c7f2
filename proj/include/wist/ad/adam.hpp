#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "wist/ad/tensor.hpp"

namespace wist::ad {

struct AdamConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double eps = 1e-12;
  // Learning rate is lr * decay^(step / decay_steps).
  double decay = 0.75;
  double decay_steps = 5000;
};

template <class T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  std::size_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

  double current_lr() const {
    return cfg_.lr * std::pow(cfg_.decay, static_cast<double>(step_) / cfg_.decay_steps);
  }

  // One bias-corrected update over every trainable parameter, then zeroes
  // their gradients. Throws NumericError on a non-finite gradient before
  // touching anything.
  void step(const std::vector<Parameter<T>*>& params) {
    for (auto* p : params) {
      if (!p->trainable || p->grad.data.empty()) continue;
      for (T g : p->grad.data) {
        if (!std::isfinite(static_cast<double>(g))) throw NumericError("non-finite gradient in parameter '" + p->name + "'");
      }
    }
    const double lr = current_lr();
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (auto* p : params) {
      if (!p->trainable || p->grad.data.empty()) continue;
      auto& st = state_[p->name];
      if (st.m.size() != p->value.data.size()) {
        st.m.assign(p->value.data.size(), 0.0);
        st.v.assign(p->value.data.size(), 0.0);
      }
      for (std::size_t i = 0; i < p->value.data.size(); ++i) {
        const double g = static_cast<double>(p->grad.data[i]);
        st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
        st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        p->value.data[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
      p->zero_grad();
    }
  }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  std::size_t step_ = 0;
  std::map<std::string, Moments> state_;
};

// Rescales gradients so their global L2 norm is at most max_norm. Returns the pre-clip norm.
template <class T>
double clip_grad_norm(const std::vector<Parameter<T>*>& params, double max_norm) {
  double sq = 0;
  for (auto* p : params) {
    for (T g : p->grad.data) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const T f = static_cast<T>(max_norm / (norm + 1e-6));
    for (auto* p : params) {
      for (T& g : p->grad.data) g *= f;
    }
  }
  return norm;
}

}  // namespace wist::ad
