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

#include "simnet/synthdata/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include "json.hpp"
#include <numbers>
#include <thread>

#include "simnet/error.hpp"
#include "simnet/pixel2point/pixel2point.hpp"
#include "simnet/rng.hpp"

namespace simnet::synth {

namespace fs = std::filesystem;
using imaging::MaskImage;
using imaging::RgbImage;

std::string to_string(Task task) {
  switch (task) {
    case Task::kShape:
      return "shape";
    case Task::kTexture:
      return "texture";
    case Task::kZsignal:
      return "zsignal";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "shape") return Task::kShape;
  if (name == "texture") return Task::kTexture;
  if (name == "zsignal") return Task::kZsignal;
  throw ConfigError("unknown synthetic task '" + std::string(name) + "'");
}

void SynthConfig::validate() const {
  if (size < 16) throw ConfigError("raster size must be at least 16");
  if (classes != 2) throw ConfigError("synthetic tasks are binary");
  if (train_per_class < 1 || val_per_class < 1) {
    throw ConfigError("need at least one sample per class and split");
  }
  if (dims != 3 && dims != 6) throw ConfigError("cloud dims must be 3 or 6");
  if (points == 0) throw ConfigError("points must be positive");
  if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("noise must be in [0, 1)");
  if (min_eligible * 4 > size * size) {
    throw ConfigError("min_eligible cannot exceed a quarter of the raster");
  }
}

namespace {

constexpr double kPi = std::numbers::pi;

struct Blob {
  double cx = 0, cy = 0, r0 = 0;
  bool spiked = false;
  int spikes = 0;
  double phase = 0;
  double a2 = 0, a3 = 0, p2 = 0, p3 = 0;

  double radius(double theta) const {
    if (spiked) {
      const double c = std::abs(std::cos(0.5 * spikes * (theta - phase)));
      return r0 * (0.62 + 0.58 * std::pow(c, 6));
    }
    return r0 * (1.0 + a2 * std::cos(2 * theta + p2) + a3 * std::cos(3 * theta + p3));
  }

  // Fraction of the boundary radius at (x, y); < 1 inside.
  double rho(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    return std::hypot(dx, dy) / radius(std::atan2(dy, dx));
  }
};

Blob draw_blob(Rng& rng, bool spiked, double cx, double cy, double r0) {
  Blob b;
  b.cx = cx;
  b.cy = cy;
  b.r0 = r0;
  b.spiked = spiked;
  b.spikes = 5 + static_cast<int>(rng.below(4));
  b.phase = rng.uniform(0, 2 * kPi);
  b.a2 = rng.uniform(0, 0.12);
  b.a3 = rng.uniform(0, 0.08);
  b.p2 = rng.uniform(0, 2 * kPi);
  b.p3 = rng.uniform(0, 2 * kPi);
  return b;
}

std::vector<std::size_t> blob_pixels(const Blob& b, std::size_t size) {
  std::vector<std::size_t> out;
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      if (b.rho(x + 0.5, y + 0.5) < 1.0) out.push_back(y * size + x);
    }
  }
  return out;
}

std::uint8_t clamp_channel(double v, double lo = 8.0) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, lo, 255.0)));
}

// Foreground-like color process: a base color, a directional stripe and
// per-pixel noise. Nothing depends on the silhouette.
struct Palette {
  std::array<double, 3> base{};
  double stripe_amp = 0, stripe_dir = 0, stripe_len = 1, stripe_phase = 0;
  double sigma = 0;

  static Palette draw(Rng& rng, double noise) {
    Palette p;
    p.base = {rng.uniform(50, 190), rng.uniform(70, 210), rng.uniform(40, 160)};
    p.stripe_amp = rng.uniform(0, 18);
    p.stripe_dir = rng.uniform(0, kPi);
    p.stripe_len = rng.uniform(5, 12);
    p.stripe_phase = rng.uniform(0, 2 * kPi);
    p.sigma = noise * 255.0;
    return p;
  }

  std::array<double, 3> at(double x, double y, Rng& pixel_rng) const {
    const double s = stripe_amp * std::sin(2 * kPi *
                                               (x * std::cos(stripe_dir) + y * std::sin(stripe_dir)) /
                                               stripe_len +
                                           stripe_phase);
    std::array<double, 3> c{};
    for (int k = 0; k < 3; ++k) c[k] = base[k] + s + pixel_rng.normal(0, sigma);
    return c;
  }
};

// Signed ramp in [-1, 1] from the rank of each pixel's relative radius; the
// rank keeps the ramp's value distribution uniform whatever the silhouette.
std::vector<double> radial_ramp(const Blob& b, const std::vector<std::size_t>& pixels,
                                std::size_t size) {
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double x = pixels[i] % size + 0.5, y = pixels[i] / size + 0.5;
    order.emplace_back(b.rho(x, y), i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<double> ramp(pixels.size());
  const double n = static_cast<double>(pixels.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    ramp[order[r].second] = 1.0 - 2.0 * (static_cast<double>(r) + 0.5) / n;
  }
  return ramp;
}

constexpr double kRampAmplitude = 45.0;

void paint(RgbImage& img, const std::vector<std::size_t>& pixels, const Palette& palette,
           const std::vector<double>* ramp, double polarity, Rng& pixel_rng, double lo,
           const MaskImage* keep_out) {
  const std::size_t w = img.width;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const std::size_t x = pixels[i] % w, y = pixels[i] / w;
    auto c = palette.at(x, y, pixel_rng);
    if (keep_out && keep_out->at(x, y)) continue;
    if (ramp) {
      for (double& v : c) v += polarity * kRampAmplitude * (*ramp)[i];
    }
    img.set(x, y, {clamp_channel(c[0], lo), clamp_channel(c[1], lo), clamp_channel(c[2], lo)});
  }
}

}  // namespace

SampleSeeds sample_seeds(const SynthConfig& cfg, std::string_view split, std::size_t index,
                         int label) {
  const std::string key = std::string(split) + "/" + std::to_string(index);
  const std::string own = key + "/" + std::to_string(label);
  SampleSeeds s;
  s.shape = mix_seed(cfg.seed, fnv1a(own + "/shape"));
  s.clutter = mix_seed(cfg.seed, fnv1a(own + "/clutter"));
  s.color = cfg.task == Task::kTexture ? mix_seed(cfg.seed, fnv1a(own + "/color"))
                                       : mix_seed(cfg.seed, fnv1a(key + "/color"));
  return s;
}

namespace {

// Object radius scale; spiked outlines are enlarged so both kinds cover the
// same area on average and size alone does not give the class away.
constexpr double kSpikedScale = 1.21;

Blob draw_object(Rng& rng, bool spiked, double cx, double cy, double size,
                 std::size_t min_pixels, std::vector<std::size_t>& pixels) {
  for (int attempt = 0;; ++attempt) {
    const double r0 = size * rng.uniform(0.14, 0.17) * (spiked ? kSpikedScale : 1.0);
    Blob b = draw_blob(rng, spiked, cx, cy, r0);
    pixels = blob_pixels(b, static_cast<std::size_t>(size));
    if (pixels.size() >= min_pixels) return b;
    if (attempt > 64) throw DataError("cannot draw a silhouette with enough pixels");
  }
}

void shift_texture(Palette& pal, int cls) {
  if (cls != 1) return;
  pal.base[0] += 45;
  pal.base[2] -= 40;
  pal.stripe_amp *= 1.8;
}

}  // namespace

Sample render_sample(const SynthConfig& cfg, int label, const SampleSeeds& seeds) {
  if (label < 0 || static_cast<std::size_t>(label) >= cfg.classes) {
    throw LabelError("label " + std::to_string(label) + " outside the task's classes");
  }
  const std::size_t size = cfg.size;
  const double s = static_cast<double>(size);
  Rng shape_rng(seeds.shape);
  Rng color_rng(seeds.color);
  Rng clutter_rng(seeds.clutter);

  // Object slots on a circle around the centre; the specimen takes one at
  // random and camouflaged decoys of random class fill the rest.
  const std::size_t decoys = cfg.clutter ? cfg.decoys : 0;
  const std::size_t slots = 1 + decoys;
  const double phi = shape_rng.uniform(0, 2 * kPi);
  const double ring = slots == 1 ? 0.0 : 0.25 * s;
  std::vector<std::array<double, 2>> centres;
  for (std::size_t k = 0; k < slots; ++k) {
    const double a = phi + 2 * kPi * static_cast<double>(k) / static_cast<double>(slots);
    centres.push_back({s / 2 + ring * std::cos(a) + shape_rng.uniform(-0.03, 0.03) * s,
                       s / 2 + ring * std::sin(a) + shape_rng.uniform(-0.03, 0.03) * s});
  }
  const std::size_t specimen_slot = shape_rng.below(slots);

  const bool spiked = cfg.task == Task::kShape ? label == 1 : shape_rng.bernoulli(0.5);
  std::vector<std::size_t> fg;
  const Blob main = draw_object(shape_rng, spiked, centres[specimen_slot][0],
                                centres[specimen_slot][1], s, cfg.min_eligible, fg);

  Sample out;
  out.label = label;
  out.mask = MaskImage(size, size);
  for (std::size_t p : fg) out.mask.data[p] = 1;
  out.image = RgbImage(size, size);

  // Background: sheet tone plus noise.
  std::array<double, 3> sheet{clutter_rng.uniform(200, 240), clutter_rng.uniform(195, 235),
                              clutter_rng.uniform(175, 215)};
  const double sigma = cfg.noise * 255.0;
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      out.image.set(x, y,
                    {clamp_channel(sheet[0] + clutter_rng.normal(0, sigma), 1.0),
                     clamp_channel(sheet[1] + clutter_rng.normal(0, sigma), 1.0),
                     clamp_channel(sheet[2] + clutter_rng.normal(0, sigma), 1.0)});
    }
  }

  if (cfg.clutter) {
    // Label-like bars and scale bars.
    const std::size_t bars = 1 + clutter_rng.below(3);
    for (std::size_t b = 0; b < bars; ++b) {
      const bool horizontal = clutter_rng.bernoulli(0.5);
      const auto len = static_cast<std::size_t>(s * clutter_rng.uniform(0.15, 0.45));
      const auto thick =
          static_cast<std::size_t>(1 + clutter_rng.below(std::max<std::size_t>(2, size / 12)));
      const std::size_t bw = horizontal ? len : thick, bh = horizontal ? thick : len;
      const std::size_t x0 = clutter_rng.below(size - bw + 1);
      const std::size_t y0 = clutter_rng.below(size - bh + 1);
      const Palette pal = Palette::draw(clutter_rng, cfg.noise);
      std::vector<std::size_t> px;
      for (std::size_t y = y0; y < y0 + bh; ++y) {
        for (std::size_t x = x0; x < x0 + bw; ++x) px.push_back(y * size + x);
      }
      paint(out.image, px, pal, nullptr, 0, clutter_rng, 1.0, &out.mask);
    }
    // Decoys come from the specimen's own generator with an independent
    // class, so only the mask tells them apart.
    for (std::size_t k = 0; k < slots; ++k) {
      if (k == specimen_slot) continue;
      const int cls = static_cast<int>(clutter_rng.below(2));
      const bool decoy_spiked = cfg.task == Task::kShape ? cls == 1 : clutter_rng.bernoulli(0.5);
      std::vector<std::size_t> px;
      const Blob blob = draw_object(clutter_rng, decoy_spiked, centres[k][0], centres[k][1], s,
                                    cfg.min_eligible, px);
      Palette pal = Palette::draw(clutter_rng, cfg.noise);
      std::vector<double> ramp;
      double polarity = 0;
      if (cfg.task == Task::kTexture) shift_texture(pal, cls);
      if (cfg.task == Task::kZsignal) {
        ramp = radial_ramp(blob, px, size);
        polarity = cls == 0 ? 1.0 : -1.0;
      }
      paint(out.image, px, pal, ramp.empty() ? nullptr : &ramp, polarity, clutter_rng, 8.0,
            &out.mask);
    }
  }

  Palette pal = Palette::draw(color_rng, cfg.noise);
  std::vector<double> ramp;
  double polarity = 0;
  if (cfg.task == Task::kTexture) shift_texture(pal, label);
  if (cfg.task == Task::kZsignal) {
    ramp = radial_ramp(main, fg, size);
    polarity = label == 0 ? 1.0 : -1.0;
  }
  paint(out.image, fg, pal, ramp.empty() ? nullptr : &ramp, polarity, color_rng, 8.0, nullptr);
  return out;
}

double color_stats_gap(const ColorStats& a, const ColorStats& b) {
  double gap = 0;
  for (int k = 0; k < 3; ++k) {
    gap = std::max(gap, std::abs(a.mean[k] - b.mean[k]) / std::max(a.mean[k], b.mean[k]));
    gap = std::max(gap, std::abs(a.var[k] - b.var[k]) / std::max(a.var[k], b.var[k]));
  }
  return gap;
}

namespace {

struct Job {
  std::string split;
  std::size_t index;
  int label;
  std::string id;
};

struct Moments {
  std::array<double, 3> sum{}, sumsq{};
  std::size_t n = 0;
};

// Each sample weighs equally: the class distribution is the mixture of the
// per-sample foreground distributions.
ColorStats finish(const std::vector<Moments>& parts) {
  ColorStats st;
  std::array<double, 3> m1{}, m2{};
  std::size_t used = 0;
  for (const auto& p : parts) {
    st.pixels += p.n;
    if (p.n == 0) continue;
    ++used;
    for (int k = 0; k < 3; ++k) {
      m1[k] += p.sum[k] / p.n;
      m2[k] += p.sumsq[k] / p.n;
    }
  }
  st.samples = used;
  if (used == 0) return st;
  for (int k = 0; k < 3; ++k) {
    st.mean[k] = m1[k] / used;
    st.var[k] = m2[k] / used - st.mean[k] * st.mean[k];
  }
  return st;
}

}  // namespace

GenerateReport generate(const SynthConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  for (const char* sub : {"images", "masks", "clouds"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw IoError("cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }

  std::vector<Job> jobs;
  for (const auto& [split, per_class] :
       {std::pair<std::string, std::size_t>{"train", cfg.train_per_class},
        std::pair<std::string, std::size_t>{"val", cfg.val_per_class}}) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (int c = 0; c < static_cast<int>(cfg.classes); ++c) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s_%05zu_c%d", split.c_str(), i, c);
        jobs.push_back({split, i, c, buf});
      }
    }
  }

  GenerateReport report;
  report.manifest.resize(jobs.size());
  std::vector<Moments> moments(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());

  p2p::CloudOptions copt;
  copt.points = cfg.points;
  copt.dims = cfg.dims;
  copt.normalize = true;

  auto work = [&](std::size_t j) {
    try {
      const Job& job = jobs[j];
      const Sample sample = render_sample(cfg, job.label, sample_seeds(cfg, job.split, job.index, job.label));
      SampleRecord rec{job.id, "images/" + job.id + ".png", "masks/" + job.id + ".png",
                       "clouds/" + job.id + ".simpc", job.label, job.split};
      imaging::save_image(sample.image, out_dir / rec.image);
      imaging::save_mask(sample.mask, out_dir / rec.mask);
      const RgbImage masked = imaging::apply_mask(sample.image, sample.mask);
      p2p::write_cloud(p2p::image_to_cloud(masked, copt, job.id), out_dir / rec.cloud);
      Moments& m = moments[j];
      for (std::size_t p = 0; p < sample.mask.data.size(); ++p) {
        if (!sample.mask.data[p]) continue;
        for (int k = 0; k < 3; ++k) {
          const double v = sample.image.data[p * 3 + k];
          m.sum[k] += v;
          m.sumsq[k] += v * v;
        }
        ++m.n;
      }
      report.manifest[j] = std::move(rec);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };

  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t j = t; j < jobs.size(); j += threads) work(j);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (int c = 0; c < static_cast<int>(cfg.classes); ++c) {
    std::vector<Moments> parts;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].label == c && jobs[j].split == "train") parts.push_back(moments[j]);
    }
    report.train_color_stats.push_back(finish(parts));
  }
  if (cfg.task == Task::kShape && cfg.train_per_class >= 200) {
    const double gap = color_stats_gap(report.train_color_stats[0], report.train_color_stats[1]);
    if (gap > 0.02) {
      throw DataError("shape task color statistics differ by " + std::to_string(gap * 100) +
                      "% between classes");
    }
  }
  write_manifest(report.manifest, out_dir / "manifest.jsonl");
  // The file keeps relative paths; callers get ones that open from anywhere.
  for (auto& rec : report.manifest) {
    for (std::string* f : {&rec.image, &rec.mask, &rec.cloud}) *f = (out_dir / *f).string();
  }
  return report;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : manifest) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["image"] = r.image;
    j["mask"] = r.mask;
    j["cloud"] = r.cloud;
    j["label"] = r.label;
    j["split"] = r.split;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    const fs::path fp(p);
    return fp.is_absolute() ? p : (base / fp).string();
  };
  Manifest out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SampleRecord r;
      r.id = j.at("id").get<std::string>();
      r.image = resolve(j.value("image", std::string{}));
      r.mask = resolve(j.value("mask", std::string{}));
      r.cloud = resolve(j.value("cloud", std::string{}));
      r.label = j.at("label").get<int>();
      r.split = j.value("split", std::string{});
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Manifest select_split(const Manifest& manifest, std::string_view split) {
  Manifest out;
  for (const auto& r : manifest) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

std::pair<Manifest, Manifest> split_manifest(const Manifest& manifest, double val_fraction,
                                             std::uint64_t seed) {
  if (manifest.empty()) throw DataError("cannot split an empty manifest");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("validation fraction must be in (0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < manifest.size(); ++i) by_label[manifest[i].label].push_back(i);

  std::vector<char> is_val(manifest.size(), 0);
  for (auto& [label, idx] : by_label) {
    if (idx.size() < 2) {
      throw DataError("class " + std::to_string(label) + " has fewer than 2 samples; cannot stratify");
    }
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(label) + 1));
    for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    auto n_val = static_cast<std::size_t>(std::llround(idx.size() * val_fraction));
    n_val = std::clamp<std::size_t>(n_val, 1, idx.size() - 1);
    for (std::size_t k = 0; k < n_val; ++k) is_val[idx[k]] = 1;
  }
  std::pair<Manifest, Manifest> out;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    SampleRecord r = manifest[i];
    r.split = is_val[i] ? "val" : "train";
    (is_val[i] ? out.second : out.first).push_back(std::move(r));
  }
  return out;
}

}  // namespace simnet::synth
