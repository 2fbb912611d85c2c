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

#include "simnet/encoders/encoders.hpp"

namespace simnet::enc {

PointEncoderConfig PointEncoderConfig::defaults(std::size_t dims) {
  PointEncoderConfig cfg;
  cfg.dims = dims;
  cfg.use_input_transform = dims == 3;
  return cfg;
}

void PointEncoderConfig::validate() const {
  if (dims != 3 && dims != 6) {
    throw ConfigError("point encoder dims must be 3 or 6, got " + std::to_string(dims));
  }
  if (widths.empty()) throw ConfigError("point encoder needs at least one per-point layer");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("point encoder widths must be positive");
  }
  if (!(transform_reg_weight >= 0.0)) throw ConfigError("transform penalty weight must be >= 0");
  if ((use_input_transform || use_feature_transform) && tnet_widths.empty()) {
    throw ConfigError("T-Net needs at least one trunk layer");
  }
}

template <typename T>
TNet<T>::TNet(ParameterStore<T>& store, const std::string& prefix, std::size_t k,
              const std::vector<std::size_t>& widths, const std::vector<std::size_t>& head)
    : k_(k) {
  std::size_t in = k;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string p = prefix + ".conv" + std::to_string(i + 1);
    trunk_.emplace_back(store, p, in, widths[i]);
    trunk_bn_.emplace_back(store, p + "_bn", widths[i]);
    in = widths[i];
  }
  for (std::size_t i = 0; i < head.size(); ++i) {
    const std::string p = prefix + ".fc" + std::to_string(i + 1);
    head_.emplace_back(store, p, in, head[i]);
    head_bn_.emplace_back(store, p + "_bn", head[i]);
    in = head[i];
  }
  out_.in_features = in;
  out_.out_features = k * k;
  out_.weight = store.add_parameter(prefix + ".out.weight", {in, k * k}, ng::Init::kZeros);
  out_.bias = store.add_parameter(prefix + ".out.bias", {k * k}, ng::Init::kZeros);
}

template <typename T>
Tensor<T> TNet<T>::operator()(const Tensor<T>& x, std::size_t points, Mode mode) {
  Tensor<T> h = x;
  for (std::size_t i = 0; i < trunk_.size(); ++i) h = ng::relu(trunk_bn_[i](trunk_[i](h), mode));
  h = ng::set_max_pool(h, points);
  for (std::size_t i = 0; i < head_.size(); ++i) h = ng::relu(head_bn_[i](head_[i](h), mode));
  const std::size_t batch = h.dim(0);
  if (!identity_.defined() || identity_.dim(0) != batch) {
    identity_ = Tensor<T>({batch, k_ * k_});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < k_; ++i) identity_.data()[b * k_ * k_ + i * k_ + i] = T(1);
  }
  return ng::reshape(ng::add(out_(h), identity_), {batch * k_, k_});
}

template <typename T>
PointEncoder<T>::PointEncoder(ParameterStore<T>& store, const std::string& prefix,
                              PointEncoderConfig cfg)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.use_input_transform) {
    input_tnet_ = TNet<T>(store, prefix + ".input_tnet", 3, cfg_.tnet_widths, cfg_.tnet_head);
  }
  std::size_t in = cfg_.dims;
  for (std::size_t i = 0; i < cfg_.widths.size(); ++i) {
    const std::string p = prefix + ".mlp" + std::to_string(i + 1);
    layers_.emplace_back(store, p, in, cfg_.widths[i]);
    norms_.emplace_back(store, p + "_bn", cfg_.widths[i]);
    in = cfg_.widths[i];
    if (i == 0 && cfg_.use_feature_transform) {
      feature_tnet_ =
          TNet<T>(store, prefix + ".feature_tnet", in, cfg_.tnet_widths, cfg_.tnet_head);
    }
  }
}

template <typename T>
PointEncoding<T> PointEncoder<T>::forward(const Tensor<T>& clouds, std::size_t points,
                                          Mode mode) {
  if (!clouds.defined() || clouds.rank() != 2 || clouds.dim(1) != cfg_.dims) {
    throw DimensionError("point encoder expects [(B*m) x " + std::to_string(cfg_.dims) +
                         "], got " + (clouds.defined() ? ng::shape_str(clouds.shape()) : "none"));
  }
  if (points == 0 || clouds.dim(0) % points != 0) {
    throw DimensionError("point encoder: " + std::to_string(clouds.dim(0)) +
                         " rows do not split into clouds of " + std::to_string(points));
  }
  const std::size_t batch = clouds.dim(0) / points;
  PointEncoding<T> out;
  Tensor<T> h = clouds;
  if (cfg_.use_input_transform) {
    Tensor<T> xyz = cfg_.dims == 3 ? clouds : ng::slice_cols(clouds, 0, 3);
    out.input_transform = input_tnet_(xyz, points, mode);
    Tensor<T> moved = ng::group_matmul(xyz, out.input_transform, batch);
    h = cfg_.dims == 3 ? moved : ng::concat_cols<T>({moved, ng::slice_cols(clouds, 3, cfg_.dims)});
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = ng::relu(norms_[i](layers_[i](h), mode));
    if (i == 0 && cfg_.use_feature_transform) {
      out.feature_transform = feature_tnet_(h, points, mode);
      h = ng::group_matmul(h, out.feature_transform, batch);
      out.regularizer =
          tnet_regularizer(out.feature_transform, feature_tnet_.k(), cfg_.transform_reg_weight);
    }
  }
  out.global = ng::set_max_pool(h, points);
  return out;
}

template <typename T>
Tensor<T> tnet_regularizer(const Tensor<T>& transforms, std::size_t k, double lambda) {
  if (!(lambda >= 0.0)) throw ContractError("tnet_regularizer: lambda must be >= 0");
  return ng::scale(ng::orthogonality_penalty(transforms, k), static_cast<T>(lambda));
}

void ImageEncoderConfig::validate() const {
  if (channels.empty()) throw ConfigError("image encoder needs at least one conv block");
  if (output_size == 0) throw ConfigError("image feature size must be positive");
  if ((input_size >> channels.size()) == 0) {
    throw ConfigError("image size " + std::to_string(input_size) + " is too small for " +
                      std::to_string(channels.size()) + " pooling blocks");
  }
}

template <typename T>
ImageEncoder<T>::ImageEncoder(ParameterStore<T>& store, const std::string& prefix,
                              ImageEncoderConfig cfg)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::size_t in = 3;
  for (std::size_t i = 0; i < cfg_.channels.size(); ++i) {
    const std::string p = prefix + ".conv" + std::to_string(i + 1);
    convs_.emplace_back(store, p, in, cfg_.channels[i]);
    norms_.emplace_back(store, p + "_bn", cfg_.channels[i]);
    in = cfg_.channels[i];
  }
  proj_ = ng::Linear<T>(store, prefix + ".proj", in, cfg_.output_size);
}

template <typename T>
Tensor<T> ImageEncoder<T>::forward(const Tensor<T>& images, Mode mode) {
  const std::size_t s = cfg_.input_size;
  if (!images.defined() || images.rank() != 4 || images.dim(1) != s || images.dim(2) != s ||
      images.dim(3) != 3) {
    throw DimensionError("image encoder expects [B x " + std::to_string(s) + " x " +
                         std::to_string(s) + " x 3], got " +
                         (images.defined() ? ng::shape_str(images.shape()) : "none"));
  }
  Tensor<T> h = images;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = ng::avg_pool2(ng::relu(norms_[i](convs_[i](h), mode)));
  }
  return proj_(ng::global_avg_pool(h));
}

template class TNet<float>;
template class TNet<double>;
template class PointEncoder<float>;
template class PointEncoder<double>;
template class ImageEncoder<float>;
template class ImageEncoder<double>;
template Tensor<float> tnet_regularizer(const Tensor<float>&, std::size_t, double);
template Tensor<double> tnet_regularizer(const Tensor<double>&, std::size_t, double);

}  // namespace simnet::enc
