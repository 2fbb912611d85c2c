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

#include <cstdint>
#include <filesystem>
#include <string>

namespace simnet::cli {

enum ExitCode : int { kOk = 0, kContractFailure = 1, kDataFailure = 2, kCheckFailure = 3 };

struct ConvertArgs {
  std::filesystem::path images, masks, out;
  std::size_t points = 1024;
  std::size_t dims = 3;
  bool normalize = true;
  bool random_start = false;
  std::string mask_suffix;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

struct CcmArgs {
  std::filesystem::path images, masks, out;
  std::string mask_suffix;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::filesystem::path config, manifest, out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t epochs = 0;   // 0: from config
  std::size_t repeats = 0;  // 0: from config
};

struct EvalArgs {
  std::filesystem::path checkpoint, config, manifest, out;
  std::string split = "val";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

struct AblateArgs {
  std::string kind;
  std::filesystem::path config, manifest, out, checkpoint;
  bool train_per_condition = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t epochs = 0;
};

struct GradcheckArgs {
  std::string widths = "tiny";
  int precision = 64;
  std::uint64_t seed = 0;
};

struct FpscheckArgs {
  std::size_t n = 200;
  std::uint64_t seed = 0;
};

int run_convert(const ConvertArgs& a);
int run_ccm(const CcmArgs& a);
int run_train(const TrainArgs& a);
int run_eval(const EvalArgs& a);
int run_ablate(const AblateArgs& a);
int run_gradcheck(const GradcheckArgs& a);
int run_fpscheck(const FpscheckArgs& a);

}  // namespace simnet::cli
