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

#include "simnet/fusion/fusion.hpp"

#include <array>
#include <utility>

namespace simnet::fusion {

namespace {

constexpr std::array<std::pair<ModelVariant, const char*>, 7> kVariantNames{{
    {ModelVariant::kImageOnly, "image_only"},
    {ModelVariant::kCloudOnly, "cloud_only"},
    {ModelVariant::kSimnetConcat, "simnet_concat"},
    {ModelVariant::kSimnetCaPc2Img, "simnet_ca_pc2img"},
    {ModelVariant::kSimnetCaImg2Pc, "simnet_ca_img2pc"},
    {ModelVariant::kSimnetBca, "simnet_bca"},
    {ModelVariant::kCcmFusion, "ccm_fusion"},
}};

template <typename T>
void require_width(const Tensor<T>& t, std::size_t width, const char* what) {
  if (!t.defined() || t.rank() != 2 || t.dim(1) != width) {
    throw DimensionError(std::string(what) + ": expected [B x " + std::to_string(width) +
                         "], got " + (t.defined() ? ng::shape_str(t.shape()) : "none"));
  }
}

}  // namespace

std::string to_string(ModelVariant v) {
  for (const auto& [variant, name] : kVariantNames) {
    if (variant == v) return name;
  }
  return "unknown";
}

ModelVariant parse_variant(const std::string& name) {
  for (const auto& [variant, n] : kVariantNames) {
    if (name == n) return variant;
  }
  if (name == "simnet") return ModelVariant::kSimnetConcat;
  throw ConfigError("unknown model variant '" + name + "'");
}

ModelVariant parse_fusion_key(const std::string& key) {
  if (key == "concat") return ModelVariant::kSimnetConcat;
  if (key == "ca_pc2img") return ModelVariant::kSimnetCaPc2Img;
  if (key == "ca_img2pc") return ModelVariant::kSimnetCaImg2Pc;
  if (key == "bca") return ModelVariant::kSimnetBca;
  if (key == "ccm") return ModelVariant::kCcmFusion;
  throw ConfigError("unknown fusion '" + key + "' (concat | ca_pc2img | ca_img2pc | bca | ccm)");
}

std::vector<ModelVariant> all_variants() {
  std::vector<ModelVariant> out;
  for (const auto& [variant, name] : kVariantNames) out.push_back(variant);
  return out;
}

bool ModelConfig::uses_attention() const {
  return variant == ModelVariant::kSimnetCaPc2Img || variant == ModelVariant::kSimnetCaImg2Pc ||
         variant == ModelVariant::kSimnetBca;
}

std::size_t ModelConfig::fused_size() const {
  switch (variant) {
    case ModelVariant::kImageOnly: return image.output_size;
    case ModelVariant::kCloudOnly: return point.widths.back();
    case ModelVariant::kSimnetConcat: return image.output_size + cloud_projection;
    case ModelVariant::kSimnetCaPc2Img:
    case ModelVariant::kSimnetCaImg2Pc: return attention_dim;
    case ModelVariant::kSimnetBca: return 2 * attention_dim;
    case ModelVariant::kCcmFusion: return image.output_size + ccm_image.output_size;
  }
  return 0;
}

void ModelConfig::validate() const {
  if (classes < 2) throw ConfigError("need at least two classes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (cloud_projection == 0 || attention_dim == 0) throw ConfigError("fusion widths must be positive");
  point.validate();
  image.validate();
  if (uses_ccm()) ccm_image.validate();
}

ModelConfig tiny_config(ModelVariant variant, std::size_t dims) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.point = enc::PointEncoderConfig::defaults(dims);
  cfg.point.widths = {4, 8, 16};
  cfg.point.tnet_widths = {4, 8};
  cfg.point.tnet_head = {6};
  cfg.image = {8, {2, 3, 4}, 10};
  cfg.ccm_image = {8, {2, 3, 4}, 5};
  cfg.cloud_projection = 3;
  cfg.head_widths = {7, 5};
  cfg.attention_dim = 6;
  return cfg;
}

template <typename T>
Tensor<T> CloudProjection<T>::operator()(const Tensor<T>& gfv) const {
  require_width(gfv, fc.in_features, "cloud projection");
  return ng::relu(fc(gfv));
}

template <typename T>
Tensor<T> concat_fuse(const Tensor<T>& image_features, const Tensor<T>& cloud_features) {
  if (!image_features.defined() || !cloud_features.defined() || image_features.rank() != 2 ||
      cloud_features.rank() != 2 || image_features.dim(0) != cloud_features.dim(0)) {
    throw DimensionError("concat_fuse: feature batches do not line up");
  }
  return ng::concat_cols<T>({image_features, cloud_features});
}

template <typename T>
Tensor<T> ccm_fuse(const Tensor<T>& image_features, const Tensor<T>& ccm_features) {
  return concat_fuse(image_features, ccm_features);
}

template <typename T>
Head<T>::Head(ParameterStore<T>& store, const std::string& prefix, std::size_t in,
              const std::vector<std::size_t>& widths, std::size_t outputs, double dropout)
    : in_(in), dropout_(dropout) {
  std::size_t width = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string p = prefix + ".fc" + std::to_string(i + 1);
    hidden_.emplace_back(store, p, width, widths[i]);
    norms_.emplace_back(store, p + "_bn", widths[i]);
    width = widths[i];
  }
  out_ = ng::Linear<T>(store, prefix + ".out", width, outputs);
}

template <typename T>
Tensor<T> Head<T>::forward(const Tensor<T>& fused, Mode mode, Rng& rng) {
  require_width(fused, in_, "head");
  Tensor<T> h = fused;
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    h = ng::dropout(ng::relu(norms_[i](hidden_[i](h), mode)), dropout_, rng, mode);
  }
  return out_(h);
}

template <typename T>
Tensor<T> probabilities(const Tensor<T>& logits) {
  return logits.dim(1) == 1 ? ng::sigmoid(logits) : ng::softmax(logits);
}

template <typename T>
CrossAttention<T>::CrossAttention(ParameterStore<T>& store, const std::string& prefix,
                                  std::size_t dim)
    : query_proj(store, prefix + ".query", dim, dim),
      key_proj(store, prefix + ".key", dim, dim),
      value_proj(store, prefix + ".value", dim, dim),
      output_proj(store, prefix + ".output", dim, dim) {}

template <typename T>
CrossAttentionOutput<T> CrossAttention<T>::forward(const Tensor<T>& query_token,
                                                   const Tensor<T>& kv_token) const {
  require_width(query_token, query_proj.in_features, "attention query");
  require_width(kv_token, key_proj.in_features, "attention key/value");
  auto att = ng::attention(query_proj(query_token), key_proj(kv_token), value_proj(kv_token), 1);
  return {output_proj(att.output), att.weights};
}

template <typename T>
Model<T>::Model(ModelConfig config, std::uint64_t seed)
    : cfg_(std::move(config)), store_(seed), dropout_rng_(mix_seed(seed, fnv1a("dropout"))) {
  cfg_.validate();
  const std::size_t outputs = cfg_.outputs();
  if (cfg_.uses_image()) image_ = enc::ImageEncoder<T>(store_, "image_encoder", cfg_.image);
  if (cfg_.uses_ccm()) ccm_ = enc::ImageEncoder<T>(store_, "ccm_encoder", cfg_.ccm_image);
  if (cfg_.uses_cloud()) cloud_ = enc::PointEncoder<T>(store_, "point_encoder", cfg_.point);
  if (cfg_.uses_attention()) {
    const std::size_t d = cfg_.attention_dim;
    image_token_ = ng::Linear<T>(store_, "attention.image_token", cfg_.image.output_size, d);
    cloud_token_ = ng::Linear<T>(store_, "attention.cloud_token", cfg_.point.widths.back(), d);
    if (cfg_.variant != ModelVariant::kSimnetCaImg2Pc) {
      att_pc2img_ = CrossAttention<T>(store_, "attention.pc2img", d);
    }
    if (cfg_.variant != ModelVariant::kSimnetCaPc2Img) {
      att_img2pc_ = CrossAttention<T>(store_, "attention.img2pc", d);
    }
    att_norm_ = ng::BatchNorm<T>(store_, "attention.norm", cfg_.fused_size());
    att_classifier_ = ng::Linear<T>(store_, "attention.classifier", cfg_.fused_size(), outputs);
  } else {
    if (cfg_.variant == ModelVariant::kSimnetConcat) {
      projection_ = CloudProjection<T>(store_, "cloud_projection", cfg_.point.widths.back(),
                                       cfg_.cloud_projection);
    }
    head_ = Head<T>(store_, "head", cfg_.fused_size(), cfg_.head_widths, outputs, cfg_.dropout);
  }
}

template <typename T>
ModelOutput<T> Model<T>::forward(const ModelInputs<T>& in, Mode mode) {
  ModelOutput<T> out;
  if (cfg_.uses_image()) out.image_features = image_.forward(in.images, mode);
  if (cfg_.uses_ccm()) out.ccm_features = ccm_.forward(in.ccm_images, mode);
  if (cfg_.uses_cloud()) {
    auto enc = cloud_.forward(in.clouds, in.points, mode);
    out.cloud_global = enc.global;
    out.regularizer = enc.regularizer;
  }
  if (out.image_features.defined() && out.cloud_global.defined() &&
      out.image_features.dim(0) != out.cloud_global.dim(0)) {
    throw DimensionError("model: image batch and cloud batch differ");
  }

  switch (cfg_.variant) {
    case ModelVariant::kImageOnly:
      out.fused = out.image_features;
      break;
    case ModelVariant::kCloudOnly:
      out.fused = out.cloud_global;
      break;
    case ModelVariant::kSimnetConcat:
      out.cloud_projected = projection_(out.cloud_global);
      out.fused = concat_fuse(out.image_features, out.cloud_projected);
      break;
    case ModelVariant::kCcmFusion:
      out.fused = ccm_fuse(out.image_features, out.ccm_features);
      break;
    case ModelVariant::kSimnetCaPc2Img:
    case ModelVariant::kSimnetCaImg2Pc:
    case ModelVariant::kSimnetBca: {
      const Tensor<T> itok = image_token_(out.image_features);
      const Tensor<T> ctok = cloud_token_(out.cloud_global);
      std::vector<Tensor<T>> parts;
      if (cfg_.variant != ModelVariant::kSimnetCaImg2Pc) {
        auto a = att_pc2img_.forward(ctok, itok);
        out.attention_pc2img = a.weights;
        parts.push_back(a.output);
      }
      if (cfg_.variant != ModelVariant::kSimnetCaPc2Img) {
        auto a = att_img2pc_.forward(itok, ctok);
        out.attention_img2pc = a.weights;
        parts.push_back(a.output);
      }
      out.fused = parts.size() == 1 ? parts[0] : ng::concat_cols(parts);
      Tensor<T> h = ng::dropout(att_norm_(out.fused, mode), cfg_.dropout, dropout_rng_, mode);
      out.logits = att_classifier_(h);
      out.probs = probabilities(out.logits);
      return out;
    }
  }
  out.logits = head_.forward(out.fused, mode, dropout_rng_);
  out.probs = probabilities(out.logits);
  return out;
}

template <typename T>
Tensor<T> Model<T>::loss(const ModelOutput<T>& out, std::span<const int> labels) const {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= cfg_.classes) {
      throw LabelError("label " + std::to_string(y) + " outside the model's " +
                       std::to_string(cfg_.classes) + " classes");
    }
  }
  Tensor<T> l = cfg_.outputs() == 1 ? ng::bce_loss(out.probs, labels)
                                    : ng::softmax_ce_loss(out.logits, labels);
  if (out.regularizer.defined()) l = ng::add(l, out.regularizer);
  return l;
}

template <typename T>
std::vector<int> Model<T>::predict(const ModelOutput<T>& out) const {
  const std::size_t rows = out.probs.dim(0), cols = out.probs.dim(1);
  auto p = out.probs.data();
  std::vector<int> pred(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (cols == 1) {
      pred[r] = p[r] >= T(0.5) ? 1 : 0;
    } else {
      std::size_t best = 0;
      for (std::size_t c = 1; c < cols; ++c) {
        if (p[r * cols + c] > p[r * cols + best]) best = c;
      }
      pred[r] = static_cast<int>(best);
    }
  }
  return pred;
}

#define SIMNET_INSTANTIATE_FUSION(T)                                        \
  template struct CloudProjection<T>;                                       \
  template class Head<T>;                                                   \
  template class CrossAttention<T>;                                         \
  template class Model<T>;                                                  \
  template Tensor<T> concat_fuse(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> ccm_fuse(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> probabilities(const Tensor<T>&);

SIMNET_INSTANTIATE_FUSION(float)
SIMNET_INSTANTIATE_FUSION(double)

}  // namespace simnet::fusion
