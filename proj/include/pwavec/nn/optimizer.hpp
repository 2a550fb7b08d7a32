// Copyright 2026 The pwavec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PWAVEC_NN_OPTIMIZER_HPP_
#define PWAVEC_NN_OPTIMIZER_HPP_

#include <map>
#include <string>

#include "pwavec/nn/modules.hpp"

namespace pwavec {
namespace nn {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// Decoupled-weight-decay Adam. Parameters whose gradient contains a
// non-finite value are skipped for that step and counted.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  const AdamWConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }

  int Step(ParamStore& params) {
    ++t_;
    int skipped = 0;
    double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (const auto& [name, p] : params.All()) {
      Tensor4& g = p->EnsureGrad();
      if (!g.AllFinite()) {
        ++skipped;
        continue;
      }
      Tensor4& m = Moment(&m_, name, p->value.shape());
      Tensor4& v = Moment(&v_, name, p->value.shape());
      for (int64_t i = 0; i < g.numel(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        double mh = m[i] / bc1;
        double vh = v[i] / bc2;
        p->value[i] -= cfg_.lr * (mh / (std::sqrt(vh) + cfg_.eps) +
                                  cfg_.weight_decay * p->value[i]);
      }
    }
    return skipped;
  }

  void Reset() {
    t_ = 0;
    m_.clear();
    v_.clear();
  }

  // State export/import for checkpoints.
  std::map<std::string, Tensor4> ExportState() const {
    std::map<std::string, Tensor4> out;
    for (const auto& [name, t] : m_) out["adamw/m/" + name] = t;
    for (const auto& [name, t] : v_) out["adamw/v/" + name] = t;
    Tensor4 step(Shape4{1, 1, 1, 1});
    step[0] = double(t_);
    out["adamw/t"] = step;
    return out;
  }

  void ImportState(const std::map<std::string, Tensor4>& state) {
    Reset();
    for (const auto& [name, t] : state) {
      if (name == "adamw/t") {
        t_ = int64_t(t[0]);
      } else if (name.rfind("adamw/m/", 0) == 0) {
        m_[name.substr(8)] = t;
      } else if (name.rfind("adamw/v/", 0) == 0) {
        v_[name.substr(8)] = t;
      }
    }
  }

 private:
  static Tensor4& Moment(std::map<std::string, Tensor4>* store,
                         const std::string& name, Shape4 shape) {
    auto it = store->find(name);
    if (it == store->end()) it = store->emplace(name, Tensor4(shape)).first;
    Require(it->second.shape() == shape, "optimizer moment shape mismatch");
    return it->second;
  }

  AdamWConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, Tensor4> m_, v_;
};

}  // namespace nn
}  // namespace pwavec

#endif  // PWAVEC_NN_OPTIMIZER_HPP_
