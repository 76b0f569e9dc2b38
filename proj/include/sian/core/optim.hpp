// Copyright 2026 The SIAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SIAN_CORE_OPTIM_HPP_
#define SIAN_CORE_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "sian/core/autograd.hpp"

namespace sian {

template <typename T>
struct AdamConfig {
  T lr = T(1e-4);
  T beta1 = T(0);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

// Adam with bias correction. Parameters that carry no gradient when step() is
// called are skipped without touching their moment estimates, so freezing a
// network and stepping only the other optimizer is safe.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Var<T>> params, AdamConfig<T> cfg)
      : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.push_back(Array<T>::zeros(p.shape()));
      v_.push_back(Array<T>::zeros(p.shape()));
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++t_;
    const T c1 = T(1) - std::pow(cfg_.beta1, static_cast<T>(t_));
    const T c2 = T(1) - std::pow(cfg_.beta2, static_cast<T>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      if (!p.has_grad()) continue;
      const T* g = p.grad().data();
      T* w = p.value().data();
      T* m = m_[i].data();
      T* v = v_[i].data();
      const int64_t n = p.value().size();
      for (int64_t j = 0; j < n; ++j) {
        m[j] = cfg_.beta1 * m[j] + (T(1) - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (T(1) - cfg_.beta2) * g[j] * g[j];
        const T mhat = m[j] / c1;
        const T vhat = v[j] / c2;
        w[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  size_t size() const { return params_.size(); }
  const std::vector<Var<T>>& params() const { return params_; }
  Array<T>& moment1(size_t i) { return m_[i]; }
  Array<T>& moment2(size_t i) { return v_[i]; }
  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  AdamConfig<T>& config() { return cfg_; }

 private:
  std::vector<Var<T>> params_;
  std::vector<Array<T>> m_, v_;
  AdamConfig<T> cfg_;
  int64_t t_ = 0;
};

}  // namespace sian

#endif  // SIAN_CORE_OPTIM_HPP_
