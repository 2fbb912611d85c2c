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

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "simnet/error.hpp"
#include "simnet/numgrad/tensor.hpp"
#include "simnet/synthdata/synthdata.hpp"

using namespace simnet;
using namespace simnet::cli;

int main(int argc, char** argv) {
  ng::configure_allocator();
  CLI::App app{"simnet: mask-guided image + point-cloud classification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "simnet 0.1.0");

  ConvertArgs conv;
  auto* c = app.add_subcommand("convert", "Masked images to SIMPC1 point clouds plus a manifest");
  c->add_option("--images", conv.images, "Directory of .png/.ppm images")->required();
  c->add_option("--masks", conv.masks, "Directory of masks paired by file stem")->required();
  c->add_option("--out", conv.out, "Output directory")->required();
  c->add_option("--points", conv.points, "Points per cloud (FPS)")->capture_default_str();
  c->add_option("--dims", conv.dims, "3 (x,y,z) or 6 (x,y,z,r,g,b)")
      ->check(CLI::IsMember({3, 6}))
      ->capture_default_str();
  c->add_flag("!--no-normalize", conv.normalize, "Keep raw pixel coordinates and intensities");
  c->add_flag("--random-start", conv.random_start, "Seeded random FPS start instead of the centroid");
  c->add_option("--mask-suffix", conv.mask_suffix, "Mask name = image stem + suffix (e.g. _mask)");
  c->add_option("--threads", conv.threads, "Worker threads (0: all cores)");
  c->add_option("--seed", conv.seed, "Seed")->capture_default_str();

  CcmArgs ccm;
  auto* cc = app.add_subcommand("ccm", "Color-coded coordinate rasters of masked images");
  cc->add_option("--images", ccm.images, "Directory of images")->required();
  cc->add_option("--masks", ccm.masks, "Directory of masks")->required();
  cc->add_option("--out", ccm.out, "Output directory")->required();
  cc->add_option("--mask-suffix", ccm.mask_suffix, "Mask name = image stem + suffix");
  cc->add_option("--seed", ccm.seed, "Seed (CCM encoding is deterministic)");

  synth::SynthConfig sc;
  std::string task = "shape";
  std::filesystem::path synth_out;
  auto* sy = app.add_subcommand("synth", "Generate a synthetic image/mask/cloud dataset");
  sy->add_option("--task", task, "shape | texture | zsignal")
      ->check(CLI::IsMember({"shape", "texture", "zsignal"}))
      ->capture_default_str();
  sy->add_option("--out", synth_out, "Output directory")->required();
  sy->add_option("--train-per-class", sc.train_per_class)->capture_default_str();
  sy->add_option("--val-per-class", sc.val_per_class)->capture_default_str();
  sy->add_option("--size", sc.size, "Raster side")->capture_default_str();
  sy->add_option("--points", sc.points, "Cloud points")->capture_default_str();
  sy->add_option("--dims", sc.dims, "Cloud columns stored (3 or 6)")->capture_default_str();
  sy->add_option("--noise", sc.noise, "Pixel noise sigma as a fraction of 255")->capture_default_str();
  sy->add_option("--decoys", sc.decoys, "Camouflaged decoy objects per image")->capture_default_str();
  sy->add_flag("!--no-clutter", sc.clutter, "Plain background, no bars or decoys");
  sy->add_option("--threads", sc.threads, "Worker threads (0: all cores)");
  sy->add_option("--seed", sc.seed, "Seed")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model from an experiment config");
  t->add_option("--config", tr.config, "key = value experiment file")->required();
  t->add_option("--manifest", tr.manifest, "Overrides the config's manifest");
  t->add_option("--out", tr.out, "Run directory (metrics.csv, best.simng, best.cfg)")->required();
  t->add_option("--epochs", tr.epochs, "Overrides the config's epochs");
  t->add_option("--repeats", tr.repeats, "Independent seeded runs; reports the max over runs");
  auto* tseed = t->add_option("--seed", tr.seed, "Overrides the config's seed");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
  e->add_option("--checkpoint", ev.checkpoint, "SIMNG1 checkpoint")->required();
  e->add_option("--config", ev.config, "Defaults to best.cfg beside the checkpoint");
  e->add_option("--manifest", ev.manifest, "Overrides the config's manifest");
  e->add_option("--split", ev.split, "train | val | all")->capture_default_str();
  e->add_option("--out", ev.out, "Write metrics and predictions as JSON");
  auto* eseed = e->add_option("--seed", ev.seed, "Overrides the config's seed");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Point-removal or z ablation suite");
  a->add_option("--kind", ab.kind, "points | zeroz")
      ->check(CLI::IsMember({"points", "zeroz"}))
      ->required();
  a->add_option("--config", ab.config, "Experiment file")->required();
  a->add_option("--manifest", ab.manifest, "Overrides the config's manifest");
  a->add_option("--out", ab.out, "CSV path (default ablation_<kind>.csv)");
  a->add_option("--checkpoint", ab.checkpoint, "Trained model for --kind points");
  a->add_flag("--train-per-condition", ab.train_per_condition,
              "points: train one model per keep fraction");
  a->add_option("--epochs", ab.epochs, "Overrides the config's epochs");
  auto* aseed = a->add_option("--seed", ab.seed, "Overrides the config's seed");

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every block");
  g->add_option("--widths", gc.widths, "Model widths (tiny)")->capture_default_str();
  g->add_option("--precision", gc.precision, "Floating point bits (64)")->capture_default_str();
  g->add_option("--seed", gc.seed, "Seed")->capture_default_str();

  FpscheckArgs fc;
  auto* f = app.add_subcommand("fpscheck", "Compare FPS with a brute-force greedy oracle");
  f->add_option("--n", fc.n, "Random instances")->capture_default_str();
  f->add_option("--seed", fc.seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kContractFailure;
  }

  try {
    if (*c) return run_convert(conv);
    if (*cc) return run_ccm(ccm);
    if (*sy) {
      sc.task = synth::parse_task(task);
      const auto report = synth::generate(sc, synth_out);
      std::cout << "wrote " << report.manifest.size() << " samples to " << synth_out.string() << '\n';
      return kOk;
    }
    if (*t) {
      tr.seed_set = tseed->count() > 0;
      return run_train(tr);
    }
    if (*e) {
      ev.seed_set = eseed->count() > 0;
      return run_eval(ev);
    }
    if (*a) {
      ab.seed_set = aseed->count() > 0;
      return run_ablate(ab);
    }
    if (*g) return run_gradcheck(gc);
    if (*f) return run_fpscheck(fc);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return err.category() == Error::Category::kContract ? kContractFailure : kDataFailure;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kDataFailure;
  }
  return kContractFailure;
}
