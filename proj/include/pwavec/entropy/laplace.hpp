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

#ifndef PWAVEC_ENTROPY_LAPLACE_HPP_
#define PWAVEC_ENTROPY_LAPLACE_HPP_

#include <cmath>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "pwavec/nn/autodiff.hpp"

namespace pwavec {
namespace entropy {

// Symbol alphabet for quantized coefficients.
constexpr int kAlphabetMin = -4096;
constexpr int kAlphabetMax = 4095;
constexpr double kSigmaFloor = 1e-6;
constexpr uint32_t kCdfTotal = 1u << 16;

inline double LaplaceCdf(double t, double b) {
  return t < 0.0 ? 0.5 * std::exp(t / b) : 1.0 - 0.5 * std::exp(-t / b);
}

// d/dt of the Laplace CDF.
inline double LaplaceCdfDt(double t, double b) {
  return std::exp(-std::abs(t) / b) / (2.0 * b);
}

// d/db of the Laplace CDF.
inline double LaplaceCdfDb(double t, double b) {
  return -(t / (2.0 * b * b)) * std::exp(-std::abs(t) / b);
}

// Integer-bin Laplace pmf over [vmin, vmax]: interior bins integrate the
// density over (v-0.5, v+0.5]; the edge bins absorb the tails so the pmf
// sums to exactly 1 over the alphabet.
inline double LaplacePmf(int64_t v, double mu, double sigma,
                         int vmin = kAlphabetMin, int vmax = kAlphabetMax) {
  double b = std::max(sigma, kSigmaFloor);
  if (v <= vmin) return LaplaceCdf(double(vmin) - mu + 0.5, b);
  if (v >= vmax) return 1.0 - LaplaceCdf(double(vmax) - mu - 0.5, b);
  return LaplaceCdf(double(v) - mu + 0.5, b) -
         LaplaceCdf(double(v) - mu - 0.5, b);
}

// Partial derivatives of the pmf w.r.t. (v - mu) treated continuously, and
// w.r.t. b. Used by the training-rate op; matches finite differences.
inline void LaplacePmfGrad(double v, double mu, double b, int vmin, int vmax,
                           double* dp_dd, double* dp_db) {
  double d = v - mu;
  if (v <= double(vmin)) {
    double a = double(vmin) - mu + 0.5;
    *dp_dd = 0.0;  // handled via mu below; edge bin depends on mu only
    *dp_db = LaplaceCdfDb(a, b);
    // For the edge bins, dP/dmu = -F'(a); express through dd convention:
    *dp_dd = LaplaceCdfDt(a, b);
    (void)d;
    return;
  }
  if (v >= double(vmax)) {
    double a = double(vmax) - mu - 0.5;
    *dp_dd = -LaplaceCdfDt(a, b);
    *dp_db = -LaplaceCdfDb(a, b);
    return;
  }
  double hi = d + 0.5, lo = d - 0.5;
  *dp_dd = LaplaceCdfDt(hi, b) - LaplaceCdfDt(lo, b);
  *dp_db = LaplaceCdfDb(hi, b) - LaplaceCdfDb(lo, b);
}

// ---------------------------------------------------------------------------
// Parameter grid. Coding-time (mu, sigma) are snapped to this fixed grid so
// encoder and decoder build byte-identical CDF tables from real-valued
// network outputs.

struct ParamGrid {
  static constexpr int kMuScale = 32;
  static constexpr int kSigmaLevels = 64;
  static constexpr double kSigmaMin = 1e-2;
  static constexpr double kSigmaMax = 256.0;

  // Nearest multiple of 1/32; ties toward the smaller index.
  static int32_t MuIndex(double mu) {
    double scaled = mu * kMuScale;
    double idx = std::ceil(scaled - 0.5);
    double lo = double(kAlphabetMin) * kMuScale;
    double hi = double(kAlphabetMax) * kMuScale;
    return int32_t(std::min(hi, std::max(lo, idx)));
  }
  static double MuFromIndex(int32_t idx) {
    return double(idx) / double(kMuScale);
  }

  static double SigmaLogStep() {
    return (std::log(kSigmaMax) - std::log(kSigmaMin)) /
           double(kSigmaLevels - 1);
  }
  // Nearest grid point in log space; ties toward the smaller index.
  static int SigmaIndex(double sigma) {
    double s = std::max(sigma, kSigmaFloor);
    double t = (std::log(s) - std::log(kSigmaMin)) / SigmaLogStep();
    int idx = int(std::ceil(t - 0.5));
    return std::min(kSigmaLevels - 1, std::max(0, idx));
  }
  static double SigmaFromIndex(int idx) {
    Require(idx >= 0 && idx < kSigmaLevels, "sigma grid index out of range");
    return std::exp(std::log(kSigmaMin) + double(idx) * SigmaLogStep());
  }
};

// ---------------------------------------------------------------------------
// Quantized CDF: integer cumulative frequencies summing to 2^16 with every
// symbol's frequency >= 1 (largest-remainder apportionment, deterministic
// tie-break toward smaller symbols).

struct QuantizedCdf {
  int vmin = 0;
  // cum[i] = total frequency of symbols < vmin + i; cum.front() = 0,
  // cum.back() = 2^16.
  std::vector<uint32_t> cum;

  int num_symbols() const { return int(cum.size()) - 1; }
  uint32_t Start(int64_t v) const { return cum[size_t(v - vmin)]; }
  uint32_t Freq(int64_t v) const {
    return cum[size_t(v - vmin) + 1] - cum[size_t(v - vmin)];
  }
  int64_t Find(uint32_t f) const {
    // Largest i with cum[i] <= f.
    size_t lo = 0, hi = cum.size() - 1;
    while (lo + 1 < hi) {
      size_t mid = (lo + hi) / 2;
      if (cum[mid] <= f) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return vmin + int64_t(lo);
  }
  double IdealBits(int64_t v) const {
    return -std::log2(double(Freq(v)) / double(kCdfTotal));
  }
};

// Builds the table for grid-quantized parameters. The pmf is evaluated
// exactly only inside a window where it is numerically representable; far
// tails go straight to the floor frequency of 1. This is part of the model
// definition, not an approximation hazard: both codec sides run this exact
// procedure.
inline QuantizedCdf BuildCdf(double mu, double sigma, int vmin, int vmax) {
  Require(vmin < vmax, "alphabet must contain at least two symbols");
  int n = vmax - vmin + 1;
  double b = std::max(sigma, kSigmaFloor);
  QuantizedCdf out;
  out.vmin = vmin;
  out.cum.assign(size_t(n) + 1, 0);

  int64_t budget = int64_t(kCdfTotal) - n;
  Require(budget >= 0, "alphabet larger than the frequency total");
  int win_lo = std::max(vmin, int(std::floor(mu - 46.0 * b - 2.0)));
  int win_hi = std::min(vmax, int(std::ceil(mu + 46.0 * b + 2.0)));

  std::vector<uint32_t> freq(size_t(n), 1);
  struct Rem {
    double r;
    int idx;
  };
  std::vector<Rem> rems;
  rems.reserve(size_t(win_hi - win_lo + 1));
  int64_t assigned = 0;
  for (int v = win_lo; v <= win_hi; ++v) {
    double raw = LaplacePmf(v, mu, b, vmin, vmax) * double(budget);
    double fl = std::floor(raw);
    freq[size_t(v - vmin)] += uint32_t(fl);
    assigned += int64_t(fl);
    rems.push_back({raw - fl, v - vmin});
  }
  int64_t deficit = budget - assigned;
  if (rems.empty()) {
    // mu far outside the alphabet: put the whole budget on the nearest edge.
    int idx = mu < double(vmin) ? 0 : n - 1;
    freq[size_t(idx)] += uint32_t(deficit);
    deficit = 0;
  }
  std::sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) {
    if (a.r != b.r) return a.r > b.r;
    return a.idx < b.idx;
  });
  size_t cursor = 0;
  while (deficit > 0 && !rems.empty()) {
    freq[size_t(rems[cursor].idx)] += 1;
    --deficit;
    cursor = (cursor + 1) % rems.size();
  }
  uint32_t acc = 0;
  for (int i = 0; i < n; ++i) {
    out.cum[size_t(i)] = acc;
    acc += freq[size_t(i)];
  }
  out.cum[size_t(n)] = acc;
  Require(acc == kCdfTotal, "CDF apportionment failed to hit the total");
  return out;
}

// Cache of full-alphabet tables keyed by grid indices. Bounded; cleared
// wholesale when full (keeps behavior independent of query order).
class CdfCache {
 public:
  explicit CdfCache(size_t max_entries = 1024) : max_entries_(max_entries) {}

  const QuantizedCdf& Get(int32_t mu_idx, int sigma_idx) {
    uint64_t key = (uint64_t(uint32_t(mu_idx)) << 8) | uint64_t(sigma_idx);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    if (cache_.size() >= max_entries_) cache_.clear();
    auto cdf = std::make_unique<QuantizedCdf>(
        BuildCdf(ParamGrid::MuFromIndex(mu_idx),
                 ParamGrid::SigmaFromIndex(sigma_idx), kAlphabetMin,
                 kAlphabetMax));
    const QuantizedCdf& ref = *cdf;
    cache_.emplace(key, std::move(cdf));
    return ref;
  }

 private:
  size_t max_entries_;
  std::unordered_map<uint64_t, std::unique_ptr<QuantizedCdf>> cache_;
};

// ---------------------------------------------------------------------------
// Differentiable rate: sum over masked positions of -log2 pmf(symbol; mu,
// sigma). Gradients flow to the symbols (continuous STE path), mu and sigma.

constexpr double kLn2 = 0.6931471805599453;
constexpr double kRatePFloor = 1e-300;

inline nn::VarPtr LaplaceRateBits(const nn::VarPtr& sym,
                                  const nn::VarPtr& mu,
                                  const nn::VarPtr& sigma,
                                  Tensor4 mask) {
  Require(sym->value.shape() == mu->value.shape() &&
              sym->value.shape() == sigma->value.shape() &&
              sym->value.shape() == mask.shape(),
          "rate op shape mismatch");
  int64_t n = sym->value.numel();
  double bits = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    if (mask[i] == 0.0) continue;
    double b = std::max(sigma->value[i], kSigmaFloor);
    double p = std::max(
        LaplacePmf(nn::RoundAwayI(sym->value[i]), mu->value[i], b),
        kRatePFloor);
    bits += -std::log2(p);
  }
  Tensor4 val(Shape4{1, 1, 1, 1});
  val[0] = bits;
  auto m = std::make_shared<Tensor4>(std::move(mask));
  return nn::MakeNode(
      std::move(val), {sym, mu, sigma}, [sym, mu, sigma, m](nn::Var& self) {
        double g = self.grad[0];
        int64_t n = sym->value.numel();
        Tensor4 ds(sym->value.shape()), dm(mu->value.shape()),
            db(sigma->value.shape());
        for (int64_t i = 0; i < n; ++i) {
          if ((*m)[i] == 0.0) continue;
          double b = std::max(sigma->value[i], kSigmaFloor);
          double v = nn::RoundAway(sym->value[i]);
          double p = std::max(LaplacePmf(int64_t(v), mu->value[i], b),
                              kRatePFloor);
          double dp_dd, dp_db;
          LaplacePmfGrad(v, mu->value[i], b, kAlphabetMin, kAlphabetMax,
                         &dp_dd, &dp_db);
          double scale = -g / (p * kLn2);
          ds[i] = scale * dp_dd;
          dm[i] = scale * -dp_dd;
          db[i] = sigma->value[i] > kSigmaFloor ? scale * dp_db : 0.0;
        }
        if (sym->needs_grad) nn::AccumulateGrad(*sym, ds);
        if (mu->needs_grad) nn::AccumulateGrad(*mu, dm);
        if (sigma->needs_grad) nn::AccumulateGrad(*sigma, db);
      });
}

}  // namespace entropy
}  // namespace pwavec

#endif  // PWAVEC_ENTROPY_LAPLACE_HPP_
