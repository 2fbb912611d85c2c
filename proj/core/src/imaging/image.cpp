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

#include "simnet/imaging/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace simnet::imaging {

RgbImage::RgbImage(std::size_t w, std::size_t h) : width(w), height(h) {
  if (w == 0 || h == 0) throw DimensionError("image dimensions must be positive");
  data.assign(w * h * 3, 0);
}

RgbImage::RgbImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> bytes)
    : width(w), height(h), data(std::move(bytes)) {
  if (w == 0 || h == 0) throw DimensionError("image dimensions must be positive");
  if (data.size() != w * h * 3) {
    throw DimensionError("image data has " + std::to_string(data.size()) + " bytes, expected " +
                         std::to_string(w * h * 3));
  }
}

MaskImage::MaskImage(std::size_t w, std::size_t h, bool value) : width(w), height(h) {
  if (w == 0 || h == 0) throw DimensionError("mask dimensions must be positive");
  data.assign(w * h, value ? 1 : 0);
}

std::size_t MaskImage::foreground_count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_signature(const std::string& bytes) {
  return bytes.size() >= 8 &&
         png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0;
}

RgbImage decode_png(const std::string& bytes, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(path.string() + ": " + image.message);
  }
  const bool linear = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  if (linear || alpha) {
    png_image_free(&image);
    throw FormatError(path.string() + ": only 8-bit RGB, gray or palette PNG is supported" +
                      (linear ? " (16-bit file)" : " (file has alpha)"));
  }
  image.format = PNG_FORMAT_RGB;
  RgbImage img(image.width, image.height);
  if (!png_image_finish_read(&image, nullptr, img.data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError(path.string() + ": " + msg);
  }
  return img;
}

// Reads the next header token, skipping whitespace and '#' comments.
std::size_t ppm_token(const std::string& bytes, std::size_t& pos, const std::filesystem::path& path) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw FormatError(path.string() + ": malformed PPM header");
  return std::stoul(bytes.substr(start, pos - start));
}

RgbImage decode_ppm(const std::string& bytes, const std::filesystem::path& path) {
  std::size_t pos = 2;
  const std::size_t w = ppm_token(bytes, pos, path);
  const std::size_t h = ppm_token(bytes, pos, path);
  const std::size_t maxval = ppm_token(bytes, pos, path);
  if (maxval != 255) {
    throw FormatError(path.string() + ": PPM maxval " + std::to_string(maxval) +
                      " (only 8-bit is supported)");
  }
  if (w == 0 || h == 0) throw FormatError(path.string() + ": empty PPM raster");
  ++pos;  // single whitespace byte before the raster
  const std::size_t need = w * h * 3;
  if (bytes.size() < pos + need) throw IoError(path.string() + ": truncated PPM raster");
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return RgbImage(w, h, std::move(data));
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

RgbImage load_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (has_png_signature(bytes)) return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path);
  if (bytes.size() < 8 && bytes.rfind("\x89PNG", 0) == 0) {
    throw IoError(path.string() + ": truncated PNG");
  }
  throw FormatError(path.string() + ": neither PNG nor binary PPM");
}

void save_image(const RgbImage& img, const std::filesystem::path& path) {
  if (img.width == 0 || img.height == 0 || img.data.size() != img.width * img.height * 3) {
    throw DimensionError("save_image: malformed image");
  }
  if (lower_ext(path) == ".ppm") {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write failed: " + path.string());
    return;
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.data.data(), 0, nullptr)) {
    throw IoError(path.string() + ": " + image.message);
  }
}

MaskImage load_mask(const std::filesystem::path& path) {
  const RgbImage img = load_image(path);
  MaskImage mask(img.width, img.height);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const std::uint8_t* p = &img.data[i * 3];
    mask.data[i] = (p[0] >= 128 || p[1] >= 128 || p[2] >= 128) ? 1 : 0;
  }
  return mask;
}

void save_mask(const MaskImage& mask, const std::filesystem::path& path) {
  RgbImage img(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    const std::uint8_t v = mask.data[i] ? 255 : 0;
    img.data[i * 3] = img.data[i * 3 + 1] = img.data[i * 3 + 2] = v;
  }
  save_image(img, path);
}

RgbImage apply_mask(const RgbImage& img, const MaskImage& mask) {
  if (img.width != mask.width || img.height != mask.height) {
    throw DimensionError("apply_mask: image " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) + " vs mask " + std::to_string(mask.width) +
                         "x" + std::to_string(mask.height));
  }
  RgbImage out = img;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (!mask.data[i]) out.data[i * 3] = out.data[i * 3 + 1] = out.data[i * 3 + 2] = 0;
  }
  return out;
}

RgbImage hflip(const RgbImage& img) {
  RgbImage out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      std::memcpy(out.pixel(img.width - 1 - x, y), img.pixel(x, y), 3);
  return out;
}

RgbImage vflip(const RgbImage& img) {
  RgbImage out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    std::memcpy(out.pixel(0, img.height - 1 - y), img.pixel(0, y), img.width * 3);
  return out;
}

RgbImage rot90(const RgbImage& img) {
  // Clockwise: source (x, y) lands at (H - 1 - y, x) in a H x W raster.
  RgbImage out(img.height, img.width);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      std::memcpy(out.pixel(img.height - 1 - y, x), img.pixel(x, y), 3);
  return out;
}

RgbImage augment_image(const RgbImage& img, Rng& rng) {
  const bool h = rng.bernoulli(0.5);
  const bool v = rng.bernoulli(0.5);
  const bool r = rng.bernoulli(0.5);
  RgbImage out = h ? hflip(img) : img;
  if (v) out = vflip(out);
  if (r) out = rot90(out);
  return out;
}

RgbImage resize_nearest(const RgbImage& img, std::size_t w, std::size_t h) {
  RgbImage out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t sy = std::min(img.height - 1, (2 * y + 1) * img.height / (2 * h));
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t sx = std::min(img.width - 1, (2 * x + 1) * img.width / (2 * w));
      std::memcpy(out.pixel(x, y), img.pixel(sx, sy), 3);
    }
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& img, std::size_t w, std::size_t h) {
  RgbImage out(w, h);
  const double sx = static_cast<double>(img.width) / static_cast<double>(w);
  const double sy = static_cast<double>(img.height) / static_cast<double>(h);
  auto clampi = [](double v, std::size_t hi) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(hi)));
  };
  for (std::size_t y = 0; y < h; ++y) {
    const double fy = std::max(0.0, (static_cast<double>(y) + 0.5) * sy - 0.5);
    const std::size_t y0 = clampi(std::floor(fy), img.height - 1);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = std::max(0.0, (static_cast<double>(x) + 0.5) * sx - 0.5);
      const std::size_t x0 = clampi(std::floor(fx), img.width - 1);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double tx = fx - static_cast<double>(x0);
      for (int c = 0; c < 3; ++c) {
        const double top = img.pixel(x0, y0)[c] * (1 - tx) + img.pixel(x1, y0)[c] * tx;
        const double bot = img.pixel(x0, y1)[c] * (1 - tx) + img.pixel(x1, y1)[c] * tx;
        const double v = top * (1 - ty) + bot * ty;
        out.pixel(x, y)[c] = static_cast<std::uint8_t>(std::min(255.0, std::floor(v + 0.5)));
      }
    }
  }
  return out;
}

std::uint8_t ccm_channel(std::size_t pos, std::size_t extent) {
  // round(pos * 255 / (extent - 1)), half up, in integers.
  const std::size_t b = extent - 1;
  return static_cast<std::uint8_t>((2 * pos * 255 + b) / (2 * b));
}

CcmImage encode_ccm(const RgbImage& img) {
  if (img.width < 2 || img.height < 2) {
    throw DimensionError("encode_ccm: degenerate raster " + std::to_string(img.width) + "x" +
                         std::to_string(img.height));
  }
  CcmImage out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      if (img.is_black(x, y)) continue;
      const std::uint8_t* p = img.pixel(x, y);
      // A sum of three bytes over 3 never lands on .5, so half-up is (s + 1) / 3.
      const unsigned s = unsigned{p[0]} + p[1] + p[2];
      std::uint8_t mean = static_cast<std::uint8_t>((s + 1) / 3);
      const std::uint8_t rx = ccm_channel(x, img.width);
      const std::uint8_t gy = ccm_channel(y, img.height);
      if (rx == 0 && gy == 0 && mean == 0) mean = 1;
      out.set(x, y, {rx, gy, mean});
    }
  }
  return out;
}

namespace {

std::size_t decode_axis(std::uint8_t code, std::size_t extent) {
  const std::size_t guess = std::size_t{code} * (extent - 1) / 255;
  for (std::size_t c = guess == 0 ? 0 : guess - 1; c <= guess + 1 && c < extent; ++c) {
    if (ccm_channel(c, extent) == code) return c;
  }
  // Rasters wider than 256 share codes between columns; fall back to nearest.
  const double v = std::round(static_cast<double>(code) * static_cast<double>(extent - 1) / 255.0);
  return std::min(extent - 1, static_cast<std::size_t>(v));
}

}  // namespace

std::vector<CcmPoint> decode_ccm(const CcmImage& ccm, std::size_t width, std::size_t height) {
  if (width < 2 || height < 2) throw DimensionError("decode_ccm: degenerate raster");
  std::vector<CcmPoint> points;
  for (std::size_t y = 0; y < ccm.height; ++y) {
    for (std::size_t x = 0; x < ccm.width; ++x) {
      if (ccm.is_black(x, y)) continue;
      const std::uint8_t* p = ccm.pixel(x, y);
      points.push_back({decode_axis(p[0], width), decode_axis(p[1], height), double(p[2])});
    }
  }
  return points;
}

}  // namespace simnet::imaging
