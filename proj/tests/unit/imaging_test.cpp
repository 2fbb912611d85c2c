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

#include <gtest/gtest.h>

#include <png.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "simnet/imaging/image.hpp"

namespace simnet::imaging {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("simnet_imaging_" + name);
}

RgbImage random_image(std::size_t w, std::size_t h, Rng& rng) {
  RgbImage img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

MaskImage random_mask(std::size_t w, std::size_t h, Rng& rng) {
  MaskImage m(w, h);
  for (auto& v : m.data) v = rng.bernoulli(0.5) ? 1 : 0;
  return m;
}

std::map<std::array<std::uint8_t, 3>, int> pixel_multiset(const RgbImage& img) {
  std::map<std::array<std::uint8_t, 3>, int> counts;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    ++counts[{img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]}];
  }
  return counts;
}

TEST(ImageIo, DecodesKnownPpm) {
  const auto path = temp_path("known.ppm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n# comment\n2 2\n255\n";
    const unsigned char px[12] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 250, 251, 252};
    out.write(reinterpret_cast<const char*>(px), 12);
  }
  const RgbImage img = load_image(path);
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.height, 2u);
  EXPECT_EQ(img.data, (std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 250, 251, 252}));
  fs::remove(path);
}

TEST(ImageIo, RoundTripPngAndPpm) {
  Rng rng(1);
  for (const char* ext : {".png", ".ppm"}) {
    const RgbImage img = random_image(17, 9, rng);
    const auto path = temp_path(std::string("rt") + ext);
    save_image(img, path);
    EXPECT_EQ(load_image(path), img) << ext;
    fs::remove(path);
  }
}

TEST(ImageIo, SixteenBitPngRejected) {
  const auto path = temp_path("deep.png");
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = 2;
  image.height = 2;
  image.format = PNG_FORMAT_LINEAR_RGB;
  std::vector<std::uint16_t> px(12, 1000);
  ASSERT_TRUE(png_image_write_to_file(&image, path.string().c_str(), 0, px.data(), 0, nullptr));
  EXPECT_THROW(load_image(path), FormatError);
  fs::remove(path);
}

TEST(ImageIo, TruncatedFilesAreIoErrors) {
  Rng rng(2);
  const RgbImage img = random_image(40, 40, rng);
  for (const char* ext : {".png", ".ppm"}) {
    const auto path = temp_path(std::string("trunc") + ext);
    save_image(img, path);
    fs::resize_file(path, fs::file_size(path) / 2);
    EXPECT_THROW(load_image(path), IoError) << ext;
    fs::remove(path);
  }
  EXPECT_THROW(load_image(temp_path("missing.png")), IoError);
}

TEST(ImageIo, PpmWithWideMaxvalRejected) {
  const auto path = temp_path("wide.ppm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n1 1\n65535\n";
    out.write("\0\0\0\0\0\0", 6);
  }
  EXPECT_THROW(load_image(path), FormatError);
  fs::remove(path);
}

TEST(ApplyMask, Examples) {
  RgbImage img(2, 1);
  img.set(0, 0, {120, 100, 80});
  img.set(1, 0, {120, 100, 80});
  MaskImage mask(2, 1);
  mask.set(0, 0, true);
  const RgbImage out = apply_mask(img, mask);
  EXPECT_EQ(out.pixel(0, 0)[0], 120);
  EXPECT_EQ(out.pixel(0, 0)[2], 80);
  EXPECT_TRUE(out.is_black(1, 0));
  const RgbImage all_black = apply_mask(img, MaskImage(2, 1, false));
  EXPECT_TRUE(std::all_of(all_black.data.begin(), all_black.data.end(),
                          [](std::uint8_t v) { return v == 0; }));
}

TEST(ApplyMask, DimensionMismatch) {
  EXPECT_THROW(apply_mask(RgbImage(3, 2), MaskImage(2, 3)), DimensionError);
}

TEST(ApplyMask, Idempotent) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const RgbImage img = random_image(11, 7, rng);
    const MaskImage mask = random_mask(11, 7, rng);
    const RgbImage once = apply_mask(img, mask);
    EXPECT_EQ(apply_mask(once, mask), once);
  }
}

TEST(MaskIo, RoundTrip) {
  Rng rng(4);
  const MaskImage mask = random_mask(13, 5, rng);
  const auto path = temp_path("mask.png");
  save_mask(mask, path);
  EXPECT_EQ(load_mask(path), mask);
  fs::remove(path);
}

TEST(Augment, Involutions) {
  Rng rng(5);
  const RgbImage img = random_image(6, 4, rng);
  EXPECT_EQ(hflip(hflip(img)), img);
  EXPECT_EQ(vflip(vflip(img)), img);
  EXPECT_EQ(rot90(rot90(rot90(rot90(img)))), img);
  const RgbImage r = rot90(img);
  EXPECT_EQ(r.width, 4u);
  EXPECT_EQ(r.height, 6u);
  // Top-left moves to top-right under a clockwise quarter turn.
  EXPECT_TRUE(std::equal(img.pixel(0, 0), img.pixel(0, 0) + 3, r.pixel(3, 0)));
}

TEST(Augment, PreservesPixelMultiset) {
  Rng rng(6);
  const RgbImage img = random_image(9, 5, rng);
  const auto expected = pixel_multiset(img);
  bool rotated = false, same = false;
  for (int t = 0; t < 64; ++t) {
    const RgbImage out = augment_image(img, rng);
    EXPECT_EQ(pixel_multiset(out), expected);
    rotated |= out.width == 5;
    same |= out == img;
  }
  EXPECT_TRUE(rotated);
  EXPECT_TRUE(same);
}

TEST(Resize, NearestAndBilinearKeepConstantImages) {
  RgbImage img(10, 6);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) img.set(i % 10, i / 10, {10, 20, 30});
  for (const RgbImage& out : {resize_nearest(img, 4, 7), resize_bilinear(img, 23, 3)}) {
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
      EXPECT_EQ(out.data[i * 3 + 1], 20);
    }
  }
  Rng rng(7);
  const RgbImage r = random_image(8, 8, rng);
  EXPECT_EQ(resize_nearest(r, 8, 8), r);
  EXPECT_EQ(resize_bilinear(r, 8, 8), r);
}

TEST(Ccm, EncodingExamples) {
  EXPECT_EQ(ccm_channel(0, 224), 0);
  EXPECT_EQ(ccm_channel(223, 224), 255);
  RgbImage img(224, 224);
  img.set(5, 7, {30, 60, 90});
  const CcmImage ccm = encode_ccm(img);
  EXPECT_EQ(ccm.pixel(5, 7)[2], 60);
  EXPECT_TRUE(ccm.is_black(0, 0));
  EXPECT_THROW(encode_ccm(RgbImage(1, 5)), DimensionError);
  EXPECT_THROW(encode_ccm(RgbImage(5, 1)), DimensionError);
}

TEST(Ccm, RoundHalfUp) {
  // x = 1 on a 3-wide axis: 1 * 255 / 2 = 127.5 -> 128.
  EXPECT_EQ(ccm_channel(1, 3), 128);
  RgbImage img(3, 3);
  img.set(1, 1, {1, 1, 0});  // mean 0.667 -> 1
  img.set(2, 1, {0, 0, 1});  // mean 0.333 -> 0
  const CcmImage ccm = encode_ccm(img);
  EXPECT_EQ(ccm.pixel(1, 1)[2], 1);
  EXPECT_EQ(ccm.pixel(2, 1)[2], 0);
}

TEST(Ccm, OriginPixelStaysForeground) {
  RgbImage img(4, 4);
  img.set(0, 0, {1, 0, 0});
  const CcmImage ccm = encode_ccm(img);
  EXPECT_FALSE(ccm.is_black(0, 0));
  EXPECT_EQ(decode_ccm(ccm, 4, 4).size(), 1u);
}

TEST(Ccm, DecodeEmpty) { EXPECT_TRUE(decode_ccm(CcmImage(5, 5), 5, 5).empty()); }

TEST(Ccm, RoundTripUpTo256) {
  Rng rng(8);
  for (std::size_t side : {2u, 3u, 17u, 64u, 100u, 224u, 255u, 256u}) {
    for (std::size_t w : {side, std::size_t{2} + side / 3}) {
      const std::size_t h = side;
      const RgbImage img = apply_mask(random_image(w, h, rng), random_mask(w, h, rng));
      const CcmImage ccm = encode_ccm(img);
      const auto decoded = decode_ccm(ccm, w, h);
      std::size_t fg = 0;
      std::size_t k = 0;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          if (img.is_black(x, y)) continue;
          ++fg;
          ASSERT_LT(k, decoded.size());
          EXPECT_EQ(decoded[k].x, x);
          EXPECT_EQ(decoded[k].y, y);
          const std::uint8_t* p = img.pixel(x, y);
          const double mean = (double(p[0]) + p[1] + p[2]) / 3.0;
          if (x == 0 && y == 0 && mean < 0.5) {
            EXPECT_EQ(decoded[k].mean, 1.0);
          } else {
            EXPECT_LE(std::abs(decoded[k].mean - mean), 0.5);
          }
          ++k;
        }
      }
      EXPECT_EQ(decoded.size(), fg);
    }
  }
}

}  // namespace
}  // namespace simnet::imaging
