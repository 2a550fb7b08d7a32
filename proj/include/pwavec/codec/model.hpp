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

#ifndef PWAVEC_CODEC_MODEL_HPP_
#define PWAVEC_CODEC_MODEL_HPP_

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pwavec/entropy/context.hpp"
#include "pwavec/nn/modules.hpp"
#include "pwavec/nn/serialize.hpp"
#include "pwavec/wavelet/lifting.hpp"

namespace pwavec {
namespace codec {

// Which context model drives the entropy coder.
enum class ContextModel : uint8_t { kFourStep = 0, kAr = 1 };

// How the root LL subband is coded under the four-step model. The default
// codes LL autoregressively; four_step is an ablation.
enum class LlContext : uint8_t { kAr = 0, kFourStep = 1 };

struct ModelConfig {
  wavelet::Base base = wavelet::Base::kCdf53;
  ContextModel context = ContextModel::kFourStep;
  LlContext ll_context = LlContext::kAr;
  int width_fusion = 6;
  int width_ar = 10;
  int width_lstm = 4;
  int width_lift = 4;
  int width_post = 4;
  uint64_t seed = 1;
  uint8_t lambda_id = 255;  // operating point the model was trained for
};

// One trained model bundles every parameter group: lifting residual filters,
// both context models, the long-context ConvLSTM, the postprocessing branch
// and the two log step sizes. A single weight file therefore decodes streams
// coded with either context model.
class CodecModel {
 public:
  ModelConfig cfg;
  nn::ParamStore ps;
  wavelet::WaveletTransform wavelet;
  entropy::LongContextModule lctx;
  entropy::FourStepFusionNet fusion;
  entropy::ARFusionNet ar;
  nn::ResidualCnn post;
  nn::VarPtr theta_l, theta_h;

  void Init(const ModelConfig& c) {
    cfg = c;
    Require(c.width_fusion >= 2 && c.width_ar >= 2 && c.width_lstm >= 1 &&
                c.width_lift >= 2 && c.width_post >= 2,
            "model widths too small");
    wavelet.Init(ps, c.base, c.width_lift, c.seed);
    lctx.Init(ps, c.width_lstm, c.seed);
    fusion.Init(ps, "fusion", c.width_fusion, c.width_lstm, c.seed);
    ar.Init(ps, "ar", c.width_ar, c.width_lstm, c.seed);
    post.Init(ps, "post", c.width_post, c.seed);
    theta_l = ps.Create("quant/theta_l", Shape4{1, 1, 1, 1},
                        nn::ParamStore::Init::kZero, 1, c.seed);
    theta_h = ps.Create("quant/theta_h", Shape4{1, 1, 1, 1},
                        nn::ParamStore::Init::kZero, 1, c.seed);
  }

  // Quantization step sizes for the LL band and the detail bands. Stored in
  // log space so gradient steps keep them positive.
  double DeltaL() const { return std::exp(theta_l->value[0]); }
  double DeltaH() const { return std::exp(theta_h->value[0]); }

  std::vector<uint8_t> Serialize() const {
    std::map<std::string, Tensor4> t = nn::ExportParams(ps);
    auto meta = [&t](const std::string& key, double v) {
      Tensor4 m(Shape4{1, 1, 1, 1});
      m[0] = v;
      t.emplace("meta/" + key, std::move(m));
    };
    meta("version", 1.0);
    meta("base", double(uint8_t(cfg.base)));
    meta("context", double(uint8_t(cfg.context)));
    meta("ll_context", double(uint8_t(cfg.ll_context)));
    meta("width_fusion", double(cfg.width_fusion));
    meta("width_ar", double(cfg.width_ar));
    meta("width_lstm", double(cfg.width_lstm));
    meta("width_lift", double(cfg.width_lift));
    meta("width_post", double(cfg.width_post));
    meta("seed", double(cfg.seed));
    meta("lambda_id", double(cfg.lambda_id));
    return nn::SerializeTensors(t);
  }

  static std::unique_ptr<CodecModel> Load(const std::vector<uint8_t>& bytes) {
    std::map<std::string, Tensor4> t = nn::DeserializeTensors(bytes);
    auto meta = [&t](const std::string& key) {
      auto it = t.find("meta/" + key);
      RequireDecode(it != t.end() && it->second.numel() == 1,
                    "model file missing meta/" + key);
      double v = it->second[0];
      t.erase(it);
      return v;
    };
    RequireDecode(meta("version") == 1.0, "unsupported model version");
    ModelConfig c;
    c.base = wavelet::Base(uint8_t(meta("base")));
    c.context = ContextModel(uint8_t(meta("context")));
    c.ll_context = LlContext(uint8_t(meta("ll_context")));
    c.width_fusion = int(meta("width_fusion"));
    c.width_ar = int(meta("width_ar"));
    c.width_lstm = int(meta("width_lstm"));
    c.width_lift = int(meta("width_lift"));
    c.width_post = int(meta("width_post"));
    c.seed = uint64_t(meta("seed"));
    c.lambda_id = uint8_t(meta("lambda_id"));
    auto model = std::make_unique<CodecModel>();
    model->Init(c);
    nn::ImportParams(t, &model->ps);
    return model;
  }

  static std::unique_ptr<CodecModel> LoadFile(const std::string& path) {
    return Load(nn::ReadBytesFile(path));
  }

  void SaveFile(const std::string& path) const {
    nn::WriteBytesFile(path, Serialize());
  }

  // Stable digest of configuration and weights; streams embed it so a decode
  // with mismatched weights fails loudly instead of producing garbage.
  uint64_t Hash() const {
    std::vector<uint8_t> bytes = Serialize();
    return Fnv1a64(bytes.data(), bytes.size());
  }
};

}  // namespace codec
}  // namespace pwavec

#endif  // PWAVEC_CODEC_MODEL_HPP_
