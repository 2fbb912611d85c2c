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

#include "simnet/harness/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "simnet/error.hpp"

namespace simnet::harness {

namespace {

p2p::PointCloud fit_cloud(p2p::PointCloud cloud, const TrainConfig& cfg, const std::string& id) {
  if (cloud.size() < cfg.points) {
    throw DataError(id + ": cloud has " + std::to_string(cloud.size()) + " points, need " +
                    std::to_string(cfg.points));
  }
  if (cloud.dims < cfg.cloud_dims) {
    throw DataError(id + ": cloud has " + std::to_string(cloud.dims) + " columns, need " +
                    std::to_string(cfg.cloud_dims));
  }
  if (!cloud.normalized) cloud = p2p::normalize_cloud(cloud);
  p2p::PointCloud out;
  out.dims = cfg.cloud_dims;
  out.normalized = true;
  out.source = cloud.source;
  out.coords.reserve(cfg.points * cfg.cloud_dims);
  for (std::size_t i = 0; i < cfg.points; ++i) {
    for (std::size_t j = 0; j < cfg.cloud_dims; ++j) out.coords.push_back(cloud.at(i, j));
  }
  return out;
}

void append_image(std::vector<float>& dst, const imaging::RgbImage& img) {
  for (std::uint8_t v : img.data) dst.push_back(static_cast<float>(v) / 255.0f);
}

}  // namespace

Dataset load_dataset(const synth::Manifest& records, const TrainConfig& cfg) {
  if (records.empty()) throw DataError("empty split");
  const auto m = model_config(cfg);
  Dataset d;
  for (const auto& r : records) {
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= cfg.classes) {
      throw LabelError(r.id + ": label " + std::to_string(r.label) + " outside " +
                       std::to_string(cfg.classes) + " classes");
    }
    imaging::RgbImage img;
    imaging::MaskImage mask;
    bool has_mask = false;
    if (m.uses_image()) img = imaging::load_image(r.image);
    if (!r.mask.empty() && (cfg.masked_image || m.uses_ccm() ||
                            (m.uses_cloud() && (r.cloud.empty() || !std::filesystem::exists(r.cloud))))) {
      mask = imaging::load_mask(r.mask);
      has_mask = true;
    }
    if ((cfg.masked_image || m.uses_ccm()) && !has_mask) {
      throw DataError(r.id + ": this configuration needs a mask");
    }
    if (m.uses_cloud()) {
      p2p::PointCloud cloud;
      if (!r.cloud.empty() && std::filesystem::exists(r.cloud)) {
        cloud = p2p::read_cloud(r.cloud);
      } else {
        if (!has_mask) throw DataError(r.id + ": no cloud file and no mask to derive one");
        if (img.data.empty()) img = imaging::load_image(r.image);
        p2p::CloudOptions opt;
        opt.points = cfg.points;
        opt.dims = cfg.cloud_dims;
        cloud = p2p::image_to_cloud(imaging::apply_mask(img, mask), opt, r.id);
        if (cloud.padded) {
          throw DataError(r.id + ": only " + std::to_string(cfg.points - cloud.padded) +
                          " eligible pixels");
        }
      }
      d.clouds.push_back(fit_cloud(std::move(cloud), cfg, r.id));
    }
    if (m.uses_ccm()) {
      auto ccm = imaging::encode_ccm(imaging::apply_mask(img, mask));
      d.ccm.push_back(imaging::resize_nearest(ccm, cfg.image_size, cfg.image_size));
    }
    if (m.uses_image()) {
      if (cfg.masked_image) img = imaging::apply_mask(img, mask);
      if (img.width != cfg.image_size || img.height != cfg.image_size) {
        img = imaging::resize_bilinear(img, cfg.image_size, cfg.image_size);
      }
      d.images.push_back(std::move(img));
    }
    d.ids.push_back(r.id);
    d.labels.push_back(r.label);
  }
  return d;
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices,
                 const TrainConfig& cfg, const CloudCondition& cond, Rng* aug, Rng& cond_rng) {
  const std::size_t b = indices.size();
  const std::size_t s = cfg.image_size;
  Batch out;
  std::vector<float> images, ccm, clouds;
  std::size_t points = 0;
  for (std::size_t i : indices) {
    out.labels.push_back(data.labels.at(i));
    if (!data.images.empty()) {
      if (aug && cfg.augment_image) {
        append_image(images, imaging::augment_image(data.images[i], *aug));
      } else {
        append_image(images, data.images[i]);
      }
    }
    if (!data.ccm.empty()) append_image(ccm, data.ccm[i]);
    if (!data.clouds.empty()) {
      p2p::PointCloud c = data.clouds[i];
      if (aug && cfg.augment_cloud) c = p2p::augment_cloud(c, *aug);
      if (cond.keep_fraction < 1.0) c = p2p::ablate_points(c, cond.keep_fraction, cond_rng);
      if (cond.zero_z) c = p2p::zero_z(c);
      points = c.size();
      clouds.insert(clouds.end(), c.coords.begin(), c.coords.end());
    }
  }
  if (!images.empty()) out.inputs.images = ng::Tensor<float>({b, s, s, 3}, std::move(images));
  if (!ccm.empty()) out.inputs.ccm_images = ng::Tensor<float>({b, s, s, 3}, std::move(ccm));
  if (!clouds.empty()) {
    out.inputs.clouds = ng::Tensor<float>({b * points, cfg.cloud_dims}, std::move(clouds));
    out.inputs.points = points;
  }
  return out;
}

}  // namespace simnet::harness
