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

#include "simnet/harness/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "simnet/error.hpp"
#include "simnet/harness/metrics.hpp"
#include "simnet/numgrad/checkpoint.hpp"
#include "simnet/numgrad/optim.hpp"

namespace simnet::harness {

namespace fs = std::filesystem;
using fusion::Model;
using ng::Tensor;

namespace {

constexpr std::size_t kEvalBatch = 64;

// Batches of cfg.batch_size; a trailing batch of one joins the previous one
// so batch norm never sees a single row in train mode.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t bs) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t lo = 0; lo < n; lo += bs) out.emplace_back(lo, std::min(n, lo + bs));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

using Snapshot = std::vector<std::vector<float>>;

Snapshot snapshot(const ng::ParameterStore<float>& store) {
  Snapshot s;
  for (const auto& [name, t] : store.entries()) s.emplace_back(t.data().begin(), t.data().end());
  return s;
}

void restore(ng::ParameterStore<float>& store, const Snapshot& s) {
  std::size_t i = 0;
  for (auto& [name, t] : store.entries()) {
    std::copy(s[i].begin(), s[i].end(), t.data().begin());
    ++i;
  }
}

void write_report_json(const MetricsReport& r, const fs::path& path) {
  nlohmann::ordered_json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["final_acc"] = r.final_acc;
  j["final_f1"] = r.final_f1;
  j["best_acc"] = r.best_acc;
  j["best_f1"] = r.best_f1;
  j["best_epoch"] = r.best_epoch;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

EvalResult evaluate(Model<float>& model, const Dataset& data, const TrainConfig& cfg,
                    const CloudCondition& cond) {
  if (data.size() == 0) throw DataError("empty split");
  ng::NoGradGuard guard;
  EvalResult res;
  // Point removal on evaluation data is seeded per run, not per call.
  Rng cond_rng(mix_seed(cfg.seed, fnv1a("eval-condition")));
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t lo = 0; lo < idx.size(); lo += kEvalBatch) {
    const std::span<const std::size_t> part(idx.data() + lo, std::min(kEvalBatch, idx.size() - lo));
    Batch batch = make_batch(data, part, cfg, cond, nullptr, cond_rng);
    const auto out = model.forward(batch.inputs, ng::Mode::kEval);
    for (int p : model.predict(out)) res.predictions.push_back(p);
  }
  res.accuracy = accuracy(res.predictions, data.labels);
  res.f1 = f1(res.predictions, data.labels, cfg.classes);
  return res;
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                  const TrainOutputs& outputs) {
  cfg.validate();
  if (train_set.size() == 0) throw DataError("empty training split");
  if (val_set.size() == 0) throw DataError("empty validation split");
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult result;
  result.model = std::make_unique<Model<float>>(model_config(cfg), mix_seed(cfg.seed, fnv1a("model")));
  Model<float>& model = *result.model;
  model.set_dropout_seed(mix_seed(cfg.seed, fnv1a("dropout")));
  ng::AdamState<float> adam;
  adam.config.weight_decay = cfg.weight_decay;

  Rng aug_rng(mix_seed(cfg.seed, fnv1a("augment")));
  Rng cond_rng(mix_seed(cfg.seed, fnv1a("condition")));
  const CloudCondition cond{cfg.keep_fraction, cfg.zero_z};

  MetricsReport& report = result.report;
  report.config_hash = config_hash(cfg);
  report.seed = cfg.seed;

  if (!outputs.dir.empty()) {
    std::error_code ec;
    fs::create_directories(outputs.dir, ec);
    if (ec) throw IoError("cannot create " + outputs.dir.string() + ": " + ec.message());
  }

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  Snapshot best;
  bool have_best = false;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = ng::step_lr(epoch, cfg.lr, cfg.lr_step, cfg.lr_gamma);
    Rng shuffle(mix_seed(cfg.seed, fnv1a("shuffle") + epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

    double loss_sum = 0;
    std::size_t batch_no = 0;
    for (const auto& [lo, hi] : batch_ranges(order.size(), cfg.batch_size)) {
      const std::span<const std::size_t> part(order.data() + lo, hi - lo);
      Batch batch = make_batch(train_set, part, cfg, cond, &aug_rng, cond_rng);
      float value = 0;
      // Overflow surfaces as NumericError from whichever op first sees it.
      try {
        const auto out = model.forward(batch.inputs, ng::Mode::kTrain);
        Tensor<float> loss = model.loss(out, batch.labels);
        value = loss.item();
        if (!std::isfinite(value)) throw NumericError("loss");
        ng::backward(loss);
        ng::adam_step(model.store(), adam, lr);
      } catch (const NumericError&) {
        throw DivergenceError(static_cast<int>(epoch), static_cast<int>(batch_no));
      }
      model.store().zero_grad();
      loss_sum += static_cast<double>(value) * static_cast<double>(hi - lo);
      ++batch_no;
    }

    const EvalResult val = evaluate(model, val_set, cfg, cond);
    EpochMetrics em{epoch, loss_sum / static_cast<double>(order.size()), val.accuracy, val.f1, lr};
    report.epochs.push_back(em);
    if (!have_best || val.accuracy > report.best_acc) {
      report.best_acc = val.accuracy;
      report.best_epoch = epoch;
      best = snapshot(model.store());
      have_best = true;
      if (!outputs.dir.empty()) ng::save_parameters(model.store(), outputs.dir / "best.simng");
    }
    report.best_f1 = std::max(report.best_f1, val.f1);
  }
  report.final_acc = report.epochs.back().val_acc;
  report.final_f1 = report.epochs.back().val_f1;
  restore(model.store(), best);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!outputs.dir.empty()) {
    write_metrics_csv(report, outputs.dir / "metrics.csv");
    std::ofstream sidecar(outputs.dir / "best.cfg", std::ios::binary);
    sidecar << to_text(cfg);
    if (!sidecar) throw IoError("cannot write config sidecar");
    write_report_json(report, outputs.dir / "report.json");
  }
  return result;
}

void write_metrics_csv(const MetricsReport& report, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_loss,val_acc,val_f1,lr\n";
  char buf[160];
  for (const auto& e : report.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.6f,%.6f,%.17g\n", e.epoch, e.train_loss, e.val_acc,
                  e.val_f1, e.lr);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

EvalResult evaluate_checkpoint(const fs::path& checkpoint, const TrainConfig& cfg,
                               const Dataset& data) {
  for (int y : data.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= cfg.classes) {
      throw ContractError("label " + std::to_string(y) + " is outside the checkpoint head's " +
                          std::to_string(cfg.classes) + " classes");
    }
  }
  Model<float> model(model_config(cfg), mix_seed(cfg.seed, fnv1a("model")));
  ng::load_parameters(model.store(), checkpoint);
  return evaluate(model, data, cfg, {cfg.keep_fraction, cfg.zero_z});
}

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t r) {
  return r == 0 ? seed : mix_seed(seed, fnv1a("repeat") + r);
}

RepeatSummary train_repeats(const TrainConfig& cfg, const Dataset& train_set,
                            const Dataset& val_set, const TrainOutputs& outputs) {
  RepeatSummary summary;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    TrainConfig c = cfg;
    c.seed = repeat_seed(cfg.seed, r);
    c.repeats = 1;
    TrainOutputs o;
    if (!outputs.dir.empty()) {
      o.dir = cfg.repeats == 1 ? outputs.dir : outputs.dir / ("run" + std::to_string(r));
    }
    summary.runs.push_back(train(c, train_set, val_set, o).report);
    const auto& rep = summary.runs.back();
    if (r == 0 || rep.best_acc > summary.max_acc) {
      summary.max_acc = rep.best_acc;
      summary.best_run = r;
    }
    summary.max_f1 = std::max(summary.max_f1, rep.best_f1);
  }
  return summary;
}

std::string condition_label(std::size_t points, double keep) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%zu points (%.1f)", p2p::ablated_count(points, keep), keep);
  return buf;
}

AblationKind parse_ablation(const std::string& name) {
  if (name == "points" || name == "point_removal") return AblationKind::kPointRemoval;
  if (name == "zeroz" || name == "zero_z") return AblationKind::kZeroZ;
  throw ConfigError("unknown ablation '" + name + "' (points | zeroz)");
}

std::vector<AblationRow> ablation_suite(const TrainConfig& cfg, const Dataset& train_set,
                                        const Dataset& val_set, AblationKind kind,
                                        const AblationOptions& options) {
  std::vector<AblationRow> rows;
  if (kind == AblationKind::kZeroZ) {
    for (bool zero : {false, true}) {
      TrainConfig c = cfg;
      c.zero_z = zero;
      auto res = train(c, train_set, val_set);
      const auto ev = evaluate(*res.model, val_set, c, {c.keep_fraction, zero});
      rows.push_back({zero ? "without_z" : "with_z", ev.accuracy, ev.f1});
    }
    return rows;
  }

  std::unique_ptr<Model<float>> owned;
  Model<float>* model = options.trained;
  if (!options.train_per_condition && !model) {
    owned = train(cfg, train_set, val_set).model;
    model = owned.get();
  }
  for (double keep : kKeepFractions) {
    const std::string label = condition_label(cfg.points, keep);
    EvalResult ev;
    if (options.train_per_condition) {
      TrainConfig c = cfg;
      c.keep_fraction = keep;
      auto res = train(c, train_set, val_set);
      ev = evaluate(*res.model, val_set, c, {keep, c.zero_z});
    } else {
      ev = evaluate(*model, val_set, cfg, {keep, cfg.zero_z});
    }
    rows.push_back({label, ev.accuracy, ev.f1});
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "condition,acc,f1\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f\n", r.condition.c_str(), r.accuracy, r.f1);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace simnet::harness
