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

#ifndef PWAVEC_NN_AUTODIFF_HPP_
#define PWAVEC_NN_AUTODIFF_HPP_

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pwavec/nn/kernels.hpp"

namespace pwavec {
namespace nn {

// Reverse-mode tape over Tensor4 values. Forward passes reuse the exact same
// kernels as inference, so a value computed under the tape is bit-identical
// to the plain evaluation path.
struct Var {
  Tensor4 value;
  Tensor4 grad;
  bool needs_grad = false;
  std::vector<std::shared_ptr<Var>> parents;
  std::function<void(Var&)> backprop;

  explicit Var(Tensor4 v, bool ng = false)
      : value(std::move(v)), needs_grad(ng) {}

  Tensor4& EnsureGrad() {
    if (grad.shape() != value.shape()) grad = Tensor4(value.shape());
    return grad;
  }
  void ZeroGrad() {
    if (grad.shape() == value.shape()) grad.Fill(0.0);
  }
};

using VarPtr = std::shared_ptr<Var>;

inline VarPtr Constant(Tensor4 v) {
  return std::make_shared<Var>(std::move(v), false);
}

inline VarPtr Leaf(Tensor4 v) {
  auto n = std::make_shared<Var>(std::move(v), true);
  n->EnsureGrad();
  return n;
}

inline VarPtr MakeNode(Tensor4 v, std::vector<VarPtr> parents,
                       std::function<void(Var&)> backprop) {
  auto n = std::make_shared<Var>(std::move(v));
  for (const VarPtr& p : parents) n->needs_grad |= p->needs_grad;
  n->parents = std::move(parents);
  if (n->needs_grad) n->backprop = std::move(backprop);
  return n;
}

inline void AccumulateGrad(Var& target, const Tensor4& g) {
  Tensor4& dst = target.EnsureGrad();
  for (int64_t i = 0; i < g.numel(); ++i) dst[i] += g[i];
}

// Runs the reverse pass from a scalar root. Gradients accumulate into the
// `grad` field of every reachable node with needs_grad set.
inline void Backward(const VarPtr& root) {
  Require(root->value.numel() == 1, "backward root must be scalar");
  std::vector<Var*> order;
  std::unordered_set<Var*> visited;
  std::vector<std::pair<Var*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Var* p = node->parents[idx++].get();
      if (p->needs_grad && visited.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->EnsureGrad().Fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

// ---------------------------------------------------------------------------
// Operations. Each op computes its value with the plain kernel and registers
// a closure that routes the upstream gradient to its parents.

inline VarPtr Conv(const VarPtr& x, const VarPtr& w, const VarPtr& b,
                   const ConvSpec& spec) {
  Tensor4 val = Conv2dForward(x->value, w->value, b->value, spec);
  return MakeNode(std::move(val), {x, w, b}, [x, w, b, spec](Var& self) {
    Tensor4 dx, dw, db;
    Conv2dBackward(x->value, w->value, spec, self.grad,
                   x->needs_grad ? &dx : nullptr,
                   w->needs_grad ? &dw : nullptr,
                   b->needs_grad ? &db : nullptr);
    if (x->needs_grad) AccumulateGrad(*x, dx);
    if (w->needs_grad) AccumulateGrad(*w, dw);
    if (b->needs_grad) AccumulateGrad(*b, db);
  });
}

inline VarPtr LeakyRelu(const VarPtr& x) {
  Tensor4 val = PointwiseMap(x->value, [](double v) { return LRelu(v); });
  return MakeNode(std::move(val), {x}, [x](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int64_t i = 0; i < dx.numel(); ++i) {
      dx[i] = self.grad[i] * LReluGrad(x->value[i]);
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr SigmoidV(const VarPtr& x) {
  Tensor4 val = PointwiseMap(x->value, [](double v) { return Sigmoid(v); });
  return MakeNode(std::move(val), {x}, [x](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int64_t i = 0; i < dx.numel(); ++i) {
      double s = self.value[i];
      dx[i] = self.grad[i] * s * (1.0 - s);
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr TanhV(const VarPtr& x) {
  Tensor4 val = PointwiseMap(x->value, [](double v) { return std::tanh(v); });
  return MakeNode(std::move(val), {x}, [x](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int64_t i = 0; i < dx.numel(); ++i) {
      double t = self.value[i];
      dx[i] = self.grad[i] * (1.0 - t * t);
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr ExpV(const VarPtr& x) {
  Tensor4 val = PointwiseMap(x->value, [](double v) { return std::exp(v); });
  return MakeNode(std::move(val), {x}, [x](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int64_t i = 0; i < dx.numel(); ++i) {
      dx[i] = self.grad[i] * self.value[i];
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr ClampConst(const VarPtr& x, double lo, double hi) {
  Tensor4 val = PointwiseMap(
      x->value, [lo, hi](double v) { return std::min(hi, std::max(lo, v)); });
  return MakeNode(std::move(val), {x}, [x, lo, hi](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int64_t i = 0; i < dx.numel(); ++i) {
      double v = x->value[i];
      dx[i] = (v > lo && v < hi) ? self.grad[i] : 0.0;
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr Add(const VarPtr& a, const VarPtr& b) {
  Require(a->value.shape() == b->value.shape(), "add shape mismatch");
  Tensor4 val(a->value.shape());
  for (int64_t i = 0; i < val.numel(); ++i) val[i] = a->value[i] + b->value[i];
  return MakeNode(std::move(val), {a, b}, [a, b](Var& self) {
    if (a->needs_grad) AccumulateGrad(*a, self.grad);
    if (b->needs_grad) AccumulateGrad(*b, self.grad);
  });
}

inline VarPtr Sub(const VarPtr& a, const VarPtr& b) {
  Require(a->value.shape() == b->value.shape(), "sub shape mismatch");
  Tensor4 val(a->value.shape());
  for (int64_t i = 0; i < val.numel(); ++i) val[i] = a->value[i] - b->value[i];
  return MakeNode(std::move(val), {a, b}, [a, b](Var& self) {
    if (a->needs_grad) AccumulateGrad(*a, self.grad);
    if (b->needs_grad) {
      Tensor4 neg(self.grad.shape());
      for (int64_t i = 0; i < neg.numel(); ++i) neg[i] = -self.grad[i];
      AccumulateGrad(*b, neg);
    }
  });
}

inline VarPtr Mul(const VarPtr& a, const VarPtr& b) {
  Require(a->value.shape() == b->value.shape(), "mul shape mismatch");
  Tensor4 val(a->value.shape());
  for (int64_t i = 0; i < val.numel(); ++i) val[i] = a->value[i] * b->value[i];
  return MakeNode(std::move(val), {a, b}, [a, b](Var& self) {
    if (a->needs_grad) {
      Tensor4 da(a->value.shape());
      for (int64_t i = 0; i < da.numel(); ++i) {
        da[i] = self.grad[i] * b->value[i];
      }
      AccumulateGrad(*a, da);
    }
    if (b->needs_grad) {
      Tensor4 db(b->value.shape());
      for (int64_t i = 0; i < db.numel(); ++i) {
        db[i] = self.grad[i] * a->value[i];
      }
      AccumulateGrad(*b, db);
    }
  });
}

inline VarPtr Scale(const VarPtr& x, double c) {
  Tensor4 val = PointwiseMap(x->value, [c](double v) { return c * v; });
  return MakeNode(std::move(val), {x}, [x, c](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int64_t i = 0; i < dx.numel(); ++i) dx[i] = c * self.grad[i];
    AccumulateGrad(*x, dx);
  });
}

// Multiply a tensor by a 1-element scalar variable (used for step sizes).
inline VarPtr MulScalarVar(const VarPtr& x, const VarPtr& s) {
  Require(s->value.numel() == 1, "scalar var must have one element");
  double sv = s->value[0];
  Tensor4 val = PointwiseMap(x->value, [sv](double v) { return v * sv; });
  return MakeNode(std::move(val), {x, s}, [x, s](Var& self) {
    double sv = s->value[0];
    if (x->needs_grad) {
      Tensor4 dx(x->value.shape());
      for (int64_t i = 0; i < dx.numel(); ++i) dx[i] = self.grad[i] * sv;
      AccumulateGrad(*x, dx);
    }
    if (s->needs_grad) {
      double acc = 0.0;
      for (int64_t i = 0; i < x->value.numel(); ++i) {
        acc += self.grad[i] * x->value[i];
      }
      Tensor4 ds(s->value.shape());
      ds[0] = acc;
      AccumulateGrad(*s, ds);
    }
  });
}

// Reciprocal of a 1-element scalar variable.
inline VarPtr RecipScalar(const VarPtr& s) {
  Require(s->value.numel() == 1, "scalar var must have one element");
  Tensor4 val(s->value.shape());
  val[0] = 1.0 / s->value[0];
  return MakeNode(std::move(val), {s}, [s](Var& self) {
    double inv = self.value[0];
    Tensor4 ds(s->value.shape());
    ds[0] = -self.grad[0] * inv * inv;
    AccumulateGrad(*s, ds);
  });
}

// Straight-through rounding: forward rounds to nearest integer with ties
// away from zero, backward is the identity on gradients.
inline VarPtr SteRound(const VarPtr& x) {
  Tensor4 val = PointwiseMap(x->value, [](double v) { return RoundAway(v); });
  return MakeNode(std::move(val), {x}, [x](Var& self) {
    AccumulateGrad(*x, self.grad);
  });
}

inline VarPtr MulConstTensor(const VarPtr& x, Tensor4 m) {
  Require(x->value.shape() == m.shape(), "const mul shape mismatch");
  Tensor4 val(x->value.shape());
  for (int64_t i = 0; i < val.numel(); ++i) val[i] = x->value[i] * m[i];
  auto mask = std::make_shared<Tensor4>(std::move(m));
  return MakeNode(std::move(val), {x}, [x, mask](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int64_t i = 0; i < dx.numel(); ++i) {
      dx[i] = self.grad[i] * (*mask)[i];
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr ConcatC(const std::vector<VarPtr>& parts) {
  std::vector<const Tensor4*> vals;
  vals.reserve(parts.size());
  for (const VarPtr& p : parts) vals.push_back(&p->value);
  Tensor4 val = ConcatChannels(vals);
  std::vector<VarPtr> parents(parts.begin(), parts.end());
  return MakeNode(std::move(val), parents, [parts](Var& self) {
    int c0 = 0;
    for (const VarPtr& p : parts) {
      int c1 = c0 + p->value.c();
      if (p->needs_grad) {
        AccumulateGrad(*p, SliceChannels(self.grad, c0, c1));
      }
      c0 = c1;
    }
  });
}

inline VarPtr SliceC(const VarPtr& x, int c0, int c1) {
  Tensor4 val = SliceChannels(x->value, c0, c1);
  return MakeNode(std::move(val), {x}, [x, c0, c1](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int n = 0; n < dx.n(); ++n) {
      for (int c = c0; c < c1; ++c) {
        for (int y = 0; y < dx.h(); ++y) {
          for (int xx = 0; xx < dx.w(); ++xx) {
            dx.At(n, c, y, xx) = self.grad.At(n, c - c0, y, xx);
          }
        }
      }
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr Upsample2(const VarPtr& x) {
  Tensor4 val = UpsampleNearest2(x->value);
  return MakeNode(std::move(val), {x}, [x](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int n = 0; n < dx.n(); ++n) {
      for (int c = 0; c < dx.c(); ++c) {
        for (int y = 0; y < self.grad.h(); ++y) {
          for (int xx = 0; xx < self.grad.w(); ++xx) {
            dx.At(n, c, y / 2, xx / 2) += self.grad.At(n, c, y, xx);
          }
        }
      }
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr EvenPart(const VarPtr& x, Axis axis) {
  Tensor4 even, odd;
  SplitEvenOdd(x->value, axis, &even, &odd);
  return MakeNode(std::move(even), {x}, [x, axis](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int n = 0; n < self.grad.n(); ++n) {
      for (int c = 0; c < self.grad.c(); ++c) {
        for (int y = 0; y < self.grad.h(); ++y) {
          for (int xx = 0; xx < self.grad.w(); ++xx) {
            if (axis == Axis::kW) {
              dx.At(n, c, y, 2 * xx) = self.grad.At(n, c, y, xx);
            } else {
              dx.At(n, c, 2 * y, xx) = self.grad.At(n, c, y, xx);
            }
          }
        }
      }
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr OddPart(const VarPtr& x, Axis axis) {
  Tensor4 even, odd;
  SplitEvenOdd(x->value, axis, &even, &odd);
  return MakeNode(std::move(odd), {x}, [x, axis](Var& self) {
    Tensor4 dx(x->value.shape());
    for (int n = 0; n < self.grad.n(); ++n) {
      for (int c = 0; c < self.grad.c(); ++c) {
        for (int y = 0; y < self.grad.h(); ++y) {
          for (int xx = 0; xx < self.grad.w(); ++xx) {
            if (axis == Axis::kW) {
              dx.At(n, c, y, 2 * xx + 1) = self.grad.At(n, c, y, xx);
            } else {
              dx.At(n, c, 2 * y + 1, xx) = self.grad.At(n, c, y, xx);
            }
          }
        }
      }
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr MergeEO(const VarPtr& even, const VarPtr& odd, Axis axis) {
  Tensor4 val = MergeEvenOdd(even->value, odd->value, axis);
  return MakeNode(std::move(val), {even, odd}, [even, odd, axis](Var& self) {
    Tensor4 ge, go;
    SplitEvenOdd(self.grad, axis, &ge, &go);
    if (even->needs_grad) AccumulateGrad(*even, ge);
    if (odd->needs_grad) AccumulateGrad(*odd, go);
  });
}

inline VarPtr ShiftSymV(const VarPtr& x, Axis axis, int delta) {
  Tensor4 val = ShiftSym(x->value, axis, delta);
  return MakeNode(std::move(val), {x}, [x, axis, delta](Var& self) {
    Tensor4 dx(x->value.shape());
    int len = axis == Axis::kW ? dx.w() : dx.h();
    for (int n = 0; n < dx.n(); ++n) {
      for (int c = 0; c < dx.c(); ++c) {
        for (int y = 0; y < dx.h(); ++y) {
          for (int xx = 0; xx < dx.w(); ++xx) {
            int src = MirrorIndex((axis == Axis::kW ? xx : y) + delta, len);
            if (axis == Axis::kW) {
              dx.At(n, c, y, src) += self.grad.At(n, c, y, xx);
            } else {
              dx.At(n, c, src, xx) += self.grad.At(n, c, y, xx);
            }
          }
        }
      }
    }
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr SumAll(const VarPtr& x) {
  Tensor4 val(Shape4{1, 1, 1, 1});
  double acc = 0.0;
  for (int64_t i = 0; i < x->value.numel(); ++i) acc += x->value[i];
  val[0] = acc;
  return MakeNode(std::move(val), {x}, [x](Var& self) {
    Tensor4 dx(x->value.shape(), self.grad[0]);
    AccumulateGrad(*x, dx);
  });
}

inline VarPtr MeanSq(const VarPtr& a, const VarPtr& b) {
  Require(a->value.shape() == b->value.shape(), "mean-square shape mismatch");
  int64_t n = a->value.numel();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double d = a->value[i] - b->value[i];
    acc += d * d;
  }
  Tensor4 val(Shape4{1, 1, 1, 1});
  val[0] = acc / double(n);
  return MakeNode(std::move(val), {a, b}, [a, b, n](Var& self) {
    double g = self.grad[0] * 2.0 / double(n);
    if (a->needs_grad) {
      Tensor4 da(a->value.shape());
      for (int64_t i = 0; i < n; ++i) {
        da[i] = g * (a->value[i] - b->value[i]);
      }
      AccumulateGrad(*a, da);
    }
    if (b->needs_grad) {
      Tensor4 db(b->value.shape());
      for (int64_t i = 0; i < n; ++i) {
        db[i] = -g * (a->value[i] - b->value[i]);
      }
      AccumulateGrad(*b, db);
    }
  });
}

}  // namespace nn
}  // namespace pwavec

#endif  // PWAVEC_NN_AUTODIFF_HPP_
