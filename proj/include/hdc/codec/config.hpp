// Copyright (c) the hdcsvc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Codec configuration. Text files hold one `key = value` per line; `#`
// starts a comment. Unknown keys are rejected.

#include <filesystem>
#include <string>
#include <vector>

namespace hdc::codec {

enum class IntraKind { kPassthrough, kFactorized };

struct CodecConfig {
  int feature_channels = 48;  // F_t and context features
  int latent_channels = 96;
  int mv_channels = 32;
  int mv_latent_channels = 64;
  int hyper_channels = 64;
  int mv_hyper_channels = 32;
  int slices = 4;
  int phi_channels = 32;
  int prior_width = 32;
  int est_width = 64;
  int d_feat_latent = 12;
  int d_feat_4 = 0;  // 0: derived from 192 / (stride * s * 2)
  int d_feat_8 = 0;
  int fer_s = 2;
  std::vector<int> fer_strides{4, 8};
  double sigma_min = 0.11;
  int lk_levels = 3;
  int lk_iterations = 3;
  int me_hidden = 16;
  IntraKind intra = IntraKind::kPassthrough;
  int intra_channels = 64;

  int d_feat_at(int stride) const;
  bool fer_at(int stride) const;
  void validate() const;

  static CodecConfig parse(const std::string& text);
  static CodecConfig load(const std::filesystem::path& path);
  std::string to_string() const;
  // Small widths used by tests and the acceptance runs.
  static CodecConfig compact();
};

}  // namespace hdc::codec
