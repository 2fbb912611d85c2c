// Copyright 2026 The simnet Authors
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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "simnet/encoders/encoders.hpp"

namespace simnet::fusion {

using ng::Mode;
using ng::ParameterStore;
using ng::Tensor;

/// Whole-model choices exposed to experiments.
enum class ModelVariant {
  kImageOnly,
  kCloudOnly,
  kSimnetConcat,
  kSimnetCaPc2Img,  // cloud token queries the image token
  kSimnetCaImg2Pc,  // image token queries the cloud token
  kSimnetBca,       // both directions, concatenated
  kCcmFusion,       // RGB image + colour-coded coordinate image
};

std::string to_string(ModelVariant v);
ModelVariant parse_variant(const std::string& name);
/// Fusion key as used in config files: concat | ca_pc2img | ca_img2pc | bca | ccm.
ModelVariant parse_fusion_key(const std::string& key);
std::vector<ModelVariant> all_variants();

struct ModelConfig {
  ModelVariant variant = ModelVariant::kSimnetConcat;
  enc::PointEncoderConfig point = enc::PointEncoderConfig::defaults(3);
  enc::ImageEncoderConfig image;
  enc::ImageEncoderConfig ccm_image{64, {16, 32, 64, 128}, 256};
  std::size_t cloud_projection = 8;
  std::vector<std::size_t> head_widths{512, 128};
  std::size_t attention_dim = 512;
  std::size_t classes = 2;
  double dropout = 0.3;

  /// 1 (sigmoid) for two classes, otherwise one logit per class.
  std::size_t outputs() const { return classes == 2 ? 1 : classes; }
  bool uses_image() const { return variant != ModelVariant::kCloudOnly; }
  bool uses_cloud() const {
    return variant != ModelVariant::kImageOnly && variant != ModelVariant::kCcmFusion;
  }
  bool uses_ccm() const { return variant == ModelVariant::kCcmFusion; }
  bool uses_attention() const;
  /// Width of the vector handed to the classifier.
  std::size_t fused_size() const;
  void validate() const;
};

/// Small widths for finite-difference checks: per-point 4-8-16, conv 2-3-4
/// on 8x8 rasters, attention width 6.
ModelConfig tiny_config(ModelVariant variant, std::size_t dims = 3);

/// MLP^P: affine + ReLU projection of the global cloud feature.
template <typename T>
struct CloudProjection {
  CloudProjection() = default;
  CloudProjection(ParameterStore<T>& store, const std::string& prefix, std::size_t in,
                  std::size_t out)
      : fc(store, prefix, in, out) {}

  Tensor<T> operator()(const Tensor<T>& gfv) const;

  ng::Linear<T> fc;
};

/// Image block first, then the cloud block.
template <typename T>
Tensor<T> concat_fuse(const Tensor<T>& image_features, const Tensor<T>& cloud_features);

/// Image block first, then the CCM block.
template <typename T>
Tensor<T> ccm_fuse(const Tensor<T>& image_features, const Tensor<T>& ccm_features);

/// MLP^F: affine -> BN -> ReLU -> dropout for every hidden width, then an
/// affine output layer producing logits.
template <typename T>
class Head {
 public:
  Head() = default;
  Head(ParameterStore<T>& store, const std::string& prefix, std::size_t in,
       const std::vector<std::size_t>& widths, std::size_t outputs, double dropout);

  Tensor<T> forward(const Tensor<T>& fused, Mode mode, Rng& rng);

  std::size_t input_size() const { return in_; }

 private:
  std::size_t in_ = 0;
  double dropout_ = 0.3;
  std::vector<ng::Linear<T>> hidden_;
  std::vector<ng::BatchNorm<T>> norms_;
  ng::Linear<T> out_;
};

/// Sigmoid for a single logit column, softmax otherwise.
template <typename T>
Tensor<T> probabilities(const Tensor<T>& logits);

template <typename T>
struct CrossAttentionOutput {
  Tensor<T> output;   // [B x dim]
  Tensor<T> weights;  // [B x 1]
};

/// Single-head scaled dot-product attention between single tokens.
template <typename T>
class CrossAttention {
 public:
  CrossAttention() = default;
  CrossAttention(ParameterStore<T>& store, const std::string& prefix, std::size_t dim);

  CrossAttentionOutput<T> forward(const Tensor<T>& query_token, const Tensor<T>& kv_token) const;

  ng::Linear<T> query_proj, key_proj, value_proj, output_proj;
};

template <typename T>
struct ModelInputs {
  Tensor<T> images;      // [B x S x S x 3], [0, 1]
  Tensor<T> clouds;      // [(B*points) x dims]
  std::size_t points = 0;
  Tensor<T> ccm_images;  // [B x S x S x 3], [0, 1]
};

template <typename T>
struct ModelOutput {
  Tensor<T> logits;           // [B x outputs]
  Tensor<T> probs;            // [B x outputs]
  Tensor<T> regularizer;      // scalar or undefined
  Tensor<T> image_features;   // I^fv
  Tensor<T> cloud_global;     // P^gfv
  Tensor<T> cloud_projected;  // P^fv
  Tensor<T> ccm_features;
  Tensor<T> fused;            // vector entering the classifier
  Tensor<T> attention_pc2img; // [B x 1] weights when used
  Tensor<T> attention_img2pc;
};

template <typename T>
class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ModelOutput<T> forward(const ModelInputs<T>& inputs, Mode mode);

  /// Mean BCE (binary) or softmax cross-entropy, plus the transform penalty.
  Tensor<T> loss(const ModelOutput<T>& out, std::span<const int> labels) const;

  /// Predicted class per row (threshold 0.5 for the binary head).
  std::vector<int> predict(const ModelOutput<T>& out) const;

  ParameterStore<T>& store() { return store_; }
  const ParameterStore<T>& store() const { return store_; }
  const ModelConfig& config() const { return cfg_; }

  /// Restarts the dropout mask stream (for repeatable train-mode passes).
  void set_dropout_seed(std::uint64_t seed) { dropout_rng_ = Rng(seed); }

  CrossAttention<T>& attention(bool pc2img) { return pc2img ? att_pc2img_ : att_img2pc_; }

 private:
  ModelConfig cfg_;
  ParameterStore<T> store_;
  Rng dropout_rng_;
  enc::ImageEncoder<T> image_;
  enc::ImageEncoder<T> ccm_;
  enc::PointEncoder<T> cloud_;
  CloudProjection<T> projection_;
  Head<T> head_;
  ng::Linear<T> image_token_, cloud_token_;
  CrossAttention<T> att_pc2img_, att_img2pc_;
  ng::BatchNorm<T> att_norm_;
  ng::Linear<T> att_classifier_;
};

}  // namespace simnet::fusion
