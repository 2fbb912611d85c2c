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

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "json.hpp"
#include "simnet/error.hpp"
#include "simnet/harness/config.hpp"
#include "simnet/harness/gradcheck_suite.hpp"
#include "simnet/harness/train.hpp"
#include "simnet/imaging/image.hpp"
#include "simnet/numgrad/checkpoint.hpp"
#include "simnet/pixel2point/pixel2point.hpp"
#include "simnet/synthdata/synthdata.hpp"
#include "simnet/testing/fps_oracle.hpp"

namespace simnet::cli {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm";
}

struct Pair {
  std::string stem;
  fs::path image;
  fs::path mask;  // empty when unpaired
};

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw IoError(std::string(what) + " directory not found: " + p.string());
}

// Images sorted by file name; masks matched on stem + suffix.
std::vector<Pair> pair_files(const fs::path& images, const fs::path& masks,
                             const std::string& suffix) {
  require_dir(images, "image");
  require_dir(masks, "mask");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(images)) {
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Pair> out;
  for (const auto& f : files) {
    Pair p{f.stem().string(), f, {}};
    for (const char* ext : {".png", ".PNG", ".ppm", ".PPM"}) {
      const fs::path cand = masks / (p.stem + suffix + ext);
      if (fs::is_regular_file(cand)) {
        p.mask = cand;
        break;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::size_t thread_count(std::size_t requested, std::size_t jobs) {
  std::size_t t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(t, jobs));
}

// Runs work(i) for i in [0, n) across threads; results are index-addressed so
// the schedule never shows in the output.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& work) {
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) work(i);
    });
  }
}

fs::path resolve_manifest(const fs::path& arg, const harness::TrainConfig& cfg,
                          const fs::path& config_path) {
  if (!arg.empty()) return arg;
  if (cfg.manifest.empty()) throw ConfigError("no manifest given (flag or config key 'manifest')");
  fs::path m(cfg.manifest);
  if (m.is_relative()) m = config_path.parent_path() / m;
  return m;
}

std::pair<synth::Manifest, synth::Manifest> train_val(const synth::Manifest& all,
                                                      const harness::TrainConfig& cfg) {
  auto train = synth::select_split(all, "train");
  auto val = synth::select_split(all, "val");
  if (!train.empty() && !val.empty()) return {train, val};
  return synth::split_manifest(all, cfg.val_fraction, cfg.seed);
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

int run_convert(const ConvertArgs& a) {
  const auto pairs = pair_files(a.images, a.masks, a.mask_suffix);
  if (pairs.empty()) throw DataError("no .png or .ppm images in " + a.images.string());
  std::error_code ec;
  fs::create_directories(a.out / "clouds", ec);
  if (ec) throw IoError("cannot create " + a.out.string() + ": " + ec.message());

  p2p::CloudOptions opt;
  opt.points = a.points;
  opt.dims = a.dims;
  opt.normalize = a.normalize;
  opt.fps.random_start = a.random_start;
  if (a.dims != 3 && a.dims != 6) throw ConfigError("--dims must be 3 or 6");
  if (a.points == 0) throw ConfigError("--points must be positive");

  std::vector<std::string> failure(pairs.size());
  std::vector<std::size_t> padded(pairs.size(), 0);
  parallel_for(pairs.size(), thread_count(a.threads, pairs.size()), [&](std::size_t i) {
    const Pair& p = pairs[i];
    if (p.mask.empty()) {
      failure[i] = "no mask named " + p.stem + a.mask_suffix + ".png|.ppm";
      return;
    }
    try {
      const auto img = imaging::load_image(p.image);
      const auto mask = imaging::load_mask(p.mask);
      p2p::CloudOptions o = opt;
      o.fps.seed = mix_seed(a.seed, fnv1a(p.stem));
      const auto cloud = p2p::image_to_cloud(imaging::apply_mask(img, mask), o, p.stem);
      padded[i] = cloud.padded;
      p2p::write_cloud(cloud, a.out / "clouds" / (p.stem + ".simpc"));
    } catch (const EmptyForegroundError&) {
      failure[i] = "empty foreground";
    } catch (const Error& e) {
      failure[i] = e.what();
    }
  });

  synth::Manifest manifest;
  std::ofstream skipped(a.out / "skipped.txt", std::ios::binary);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!failure[i].empty()) {
      skipped << pairs[i].image.filename().string() << ": " << failure[i] << '\n';
      std::cerr << "skip " << pairs[i].image.filename().string() << ": " << failure[i] << '\n';
      continue;
    }
    if (padded[i]) {
      std::cerr << "note " << pairs[i].stem << ": only " << a.points - padded[i]
                << " eligible pixels, cloud cycle-padded\n";
    }
    manifest.push_back({pairs[i].stem, fs::absolute(pairs[i].image).lexically_normal().string(),
                        fs::absolute(pairs[i].mask).lexically_normal().string(),
                        "clouds/" + pairs[i].stem + ".simpc", -1, ""});
  }
  synth::write_manifest(manifest, a.out / "manifest.jsonl");
  std::cout << "converted " << manifest.size() << " of " << pairs.size() << " images ("
            << pairs.size() - manifest.size() << " skipped)\n";
  return manifest.empty() ? kDataFailure : kOk;
}

int run_ccm(const CcmArgs& a) {
  const auto pairs = pair_files(a.images, a.masks, a.mask_suffix);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out.string() + ": " + ec.message());
  std::size_t written = 0;
  for (const auto& p : pairs) {
    if (p.mask.empty()) {
      std::cerr << "skip " << p.image.filename().string() << ": no mask\n";
      continue;
    }
    const auto masked = imaging::apply_mask(imaging::load_image(p.image), imaging::load_mask(p.mask));
    imaging::save_image(imaging::encode_ccm(masked), a.out / (p.stem + ".png"));
    ++written;
  }
  std::cout << "encoded " << written << " of " << pairs.size() << " images\n";
  return written == 0 ? kDataFailure : kOk;
}

int run_train(const TrainArgs& a) {
  auto cfg = harness::load_config(a.config);
  if (a.seed_set) cfg.seed = a.seed;
  if (a.epochs) cfg.epochs = a.epochs;
  if (a.repeats) cfg.repeats = a.repeats;
  cfg.validate();
  // best.cfg lives in the run dir; keep the manifest reachable from there.
  cfg.manifest = fs::absolute(resolve_manifest(a.manifest, cfg, a.config)).lexically_normal().string();
  const auto manifest = synth::read_manifest(cfg.manifest);
  const auto [tr, va] = train_val(manifest, cfg);
  const auto train_set = harness::load_dataset(tr, cfg);
  const auto val_set = harness::load_dataset(va, cfg);
  std::cerr << "training " << fusion::to_string(cfg.variant) << " on " << train_set.size()
            << " samples, validating on " << val_set.size() << '\n';
  const auto summary = harness::train_repeats(cfg, train_set, val_set, {a.out});
  for (std::size_t r = 0; r < summary.runs.size(); ++r) {
    const auto& run = summary.runs[r];
    std::cout << "run " << r << " seed " << run.seed << ": best_acc " << fixed(run.best_acc)
              << " best_f1 " << fixed(run.best_f1) << " final_acc " << fixed(run.final_acc)
              << " final_f1 " << fixed(run.final_f1) << " (epoch " << run.best_epoch << ")\n";
    std::cerr << "run " << r << " took " << fixed(run.wall_seconds, 1) << " s\n";
  }
  if (summary.runs.size() > 1) {
    std::cout << "max over runs: acc " << fixed(summary.max_acc) << " (run " << summary.best_run
              << "), f1 " << fixed(summary.max_f1) << '\n';
    nlohmann::ordered_json j;
    j["config_hash"] = harness::config_hash(cfg);
    j["max_acc"] = summary.max_acc;
    j["max_f1"] = summary.max_f1;
    j["best_run"] = summary.best_run;
    std::ofstream(a.out / "summary.json", std::ios::binary) << j.dump(2) << '\n';
  }
  return kOk;
}

int run_eval(const EvalArgs& a) {
  if (!fs::is_regular_file(a.checkpoint)) throw IoError("cannot open checkpoint " + a.checkpoint.string());
  const fs::path config = a.config.empty() ? a.checkpoint.parent_path() / "best.cfg" : a.config;
  auto cfg = harness::load_config(config);
  if (a.seed_set) cfg.seed = a.seed;
  auto manifest = synth::read_manifest(resolve_manifest(a.manifest, cfg, config));
  if (!a.split.empty() && a.split != "all") {
    auto part = synth::select_split(manifest, a.split);
    if (part.empty()) throw DataError("manifest has no '" + a.split + "' records");
    manifest = std::move(part);
  }
  const auto data = harness::load_dataset(manifest, cfg);
  const auto res = harness::evaluate_checkpoint(a.checkpoint, cfg, data);
  std::cout << "accuracy " << fixed(res.accuracy) << " f1 " << fixed(res.f1) << " n " << data.size()
            << '\n';
  if (!a.out.empty()) {
    nlohmann::ordered_json j;
    j["accuracy"] = res.accuracy;
    j["f1"] = res.f1;
    j["n"] = data.size();
    j["predictions"] = res.predictions;
    j["ids"] = data.ids;
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw IoError("cannot write " + a.out.string());
    out << j.dump() << '\n';
  }
  return kOk;
}

int run_ablate(const AblateArgs& a) {
  const auto kind = harness::parse_ablation(a.kind);
  auto cfg = harness::load_config(a.config);
  if (a.seed_set) cfg.seed = a.seed;
  if (a.epochs) cfg.epochs = a.epochs;
  cfg.validate();
  // best.cfg lives in the run dir; keep the manifest reachable from there.
  cfg.manifest = fs::absolute(resolve_manifest(a.manifest, cfg, a.config)).lexically_normal().string();
  const auto manifest = synth::read_manifest(cfg.manifest);
  const auto [tr, va] = train_val(manifest, cfg);
  const auto train_set = harness::load_dataset(tr, cfg);
  const auto val_set = harness::load_dataset(va, cfg);

  harness::AblationOptions opt;
  opt.train_per_condition = a.train_per_condition;
  std::unique_ptr<fusion::Model<float>> model;
  if (!a.checkpoint.empty()) {
    if (kind != harness::AblationKind::kPointRemoval) {
      throw ConfigError("--checkpoint applies to --kind points only");
    }
    model = std::make_unique<fusion::Model<float>>(harness::model_config(cfg), 0);
    ng::load_parameters(model->store(), a.checkpoint);
    opt.trained = model.get();
  }
  const auto rows = harness::ablation_suite(cfg, train_set, val_set, kind, opt);
  const fs::path out = a.out.empty() ? fs::path("ablation_" + a.kind + ".csv") : a.out;
  harness::write_ablation_csv(rows, out);
  for (const auto& r : rows) {
    std::cout << r.condition << "  acc " << fixed(r.accuracy) << "  f1 " << fixed(r.f1) << '\n';
  }
  return kOk;
}

int run_gradcheck(const GradcheckArgs& a) {
  if (a.widths != "tiny") throw ConfigError("--widths supports only 'tiny'");
  if (a.precision != 64) throw ConfigError("--precision supports only 64");
  const auto blocks = harness::gradcheck_suite(a.seed);
  std::vector<std::string> failed;
  for (const auto& b : blocks) {
    char line[200];
    std::snprintf(line, sizeof line, "%-28s max_rel_err %.3e  checked %4zu  skipped %3zu  %s\n",
                  b.block.c_str(), b.report.max_rel_error, b.report.checked, b.report.skipped,
                  b.passed() ? "ok" : "FAIL");
    std::cout << line;
    if (!b.passed()) failed.push_back(b.block);
  }
  if (!failed.empty()) {
    std::cout << "blocks over tolerance:";
    for (const auto& f : failed) std::cout << ' ' << f;
    std::cout << '\n';
    return kCheckFailure;
  }
  std::cout << "all " << blocks.size() << " blocks within tolerance\n";
  return kOk;
}

int run_fpscheck(const FpscheckArgs& a) {
  Rng rng(a.seed);
  std::size_t match = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < a.n; ++i) {
    const auto inst = testing::random_fps_instance(rng);
    const auto got = p2p::fps(inst.points, inst.m).indices;
    const auto want = testing::fps_oracle(inst.points, inst.m, testing::centroid_start(inst.points));
    if (got == want) {
      ++match;
    } else {
      std::cerr << "instance " << i << " (n=" << inst.points.size() << ", m=" << inst.m
                << ") differs from the oracle\n";
    }
  }
  std::cout << match << "/" << a.n << " match oracle\n";
  std::cerr << "fpscheck took "
            << fixed(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 2)
            << " s\n";
  return match == a.n ? kOk : kCheckFailure;
}

}  // namespace simnet::cli
