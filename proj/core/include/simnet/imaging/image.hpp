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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "simnet/error.hpp"
#include "simnet/rng.hpp"

namespace simnet::imaging {

/// H x W x 3 bytes, row-major, channel-interleaved. x is the column, y the row,
/// origin top-left.
struct RgbImage {
  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h);
  RgbImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> bytes);

  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;

  std::size_t pixel_count() const { return width * height; }
  std::uint8_t* pixel(std::size_t x, std::size_t y) { return &data[(y * width + x) * 3]; }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const {
    return &data[(y * width + x) * 3];
  }
  void set(std::size_t x, std::size_t y, std::array<std::uint8_t, 3> rgb) {
    std::uint8_t* p = pixel(x, y);
    p[0] = rgb[0];
    p[1] = rgb[1];
    p[2] = rgb[2];
  }
  bool is_black(std::size_t x, std::size_t y) const {
    const std::uint8_t* p = pixel(x, y);
    return p[0] == 0 && p[1] == 0 && p[2] == 0;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Foreground (plant) where true.
struct MaskImage {
  MaskImage() = default;
  MaskImage(std::size_t w, std::size_t h, bool value = false);

  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  bool at(std::size_t x, std::size_t y) const { return data[y * width + x] != 0; }
  void set(std::size_t x, std::size_t y, bool fg) { data[y * width + x] = fg ? 1 : 0; }
  std::size_t foreground_count() const;

  friend bool operator==(const MaskImage&, const MaskImage&) = default;
};

/// Color-coded coordinate raster: R' encodes x, G' encodes y, B' the channel
/// mean; background stays (0,0,0).
struct CcmImage : RgbImage {
  using RgbImage::RgbImage;
};

/// 8-bit PNG (RGB, gray or palette) or binary PPM (P6, maxval 255), detected
/// from the file signature.
RgbImage load_image(const std::filesystem::path& path);
/// PPM when the extension is .ppm, PNG otherwise.
void save_image(const RgbImage& img, const std::filesystem::path& path);

/// Any image file; a pixel is foreground when any channel is >= 128.
MaskImage load_mask(const std::filesystem::path& path);
/// Written as a black/white RGB image.
void save_mask(const MaskImage& mask, const std::filesystem::path& path);

RgbImage apply_mask(const RgbImage& img, const MaskImage& mask);

RgbImage hflip(const RgbImage& img);
RgbImage vflip(const RgbImage& img);
/// Quarter turn clockwise; width and height swap.
RgbImage rot90(const RgbImage& img);

/// Horizontal flip, vertical flip and a 90 degree rotation, each applied
/// independently with probability 0.5, in that order.
RgbImage augment_image(const RgbImage& img, Rng& rng);

RgbImage resize_nearest(const RgbImage& img, std::size_t w, std::size_t h);
RgbImage resize_bilinear(const RgbImage& img, std::size_t w, std::size_t h);

/// `img` must already be masked. Non-black pixel (x, y) becomes
/// (round(x*255/(W-1)), round(y*255/(H-1)), round((R+G+B)/3)), half up. A
/// pixel that would encode to (0,0,0) gets B' = 1 so it stays foreground.
CcmImage encode_ccm(const RgbImage& img);

struct CcmPoint {
  std::size_t x;
  std::size_t y;
  double mean;

  friend bool operator==(const CcmPoint&, const CcmPoint&) = default;
};

/// Inverse of encode_ccm for every non-black pixel, in row-major order. For
/// W, H <= 256 the recovered coordinates are exact.
std::vector<CcmPoint> decode_ccm(const CcmImage& ccm, std::size_t width, std::size_t height);

/// Encoded coordinate channel value for position `pos` on an axis of length `extent`.
std::uint8_t ccm_channel(std::size_t pos, std::size_t extent);

}  // namespace simnet::imaging
