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

// RD result files: CSV rows `sequence,lambda,bpp,psnr`, a BD-rate table
// against a named anchor, and one PNG plot per sequence.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hdc/evalkit/metrics.hpp"

namespace hdc::evalkit {

struct RDRow {
  std::string sequence;
  double lambda = 0.0;
  double bpp = 0.0;
  double psnr = 0.0;
  bool operator==(const RDRow&) const = default;
};

void write_csv(const std::filesystem::path& p, const std::vector<RDRow>& rows);
std::vector<RDRow> read_csv(const std::filesystem::path& p);

// Rows of one codec grouped into curves per sequence.
std::map<std::string, RDCurve> curves_by_sequence(const std::vector<RDRow>& rows);

struct BdEntry {
  std::string label, sequence;
  double bd_rate = 0.0;
  std::string note;  // why bd_rate is NaN, empty otherwise
};

// results: codec label -> rows. Writes <label>.csv for each label,
// bd_rate.csv (label,sequence,bd_rate against the anchor) and
// rd_<sequence>.png. A sequence whose curves are invalid or do not
// overlap gets a NaN BD-rate and a note. Throws std::invalid_argument when the anchor label is
// missing and std::runtime_error when the directory cannot be written.
std::vector<BdEntry> emit_report(const std::map<std::string, std::vector<RDRow>>& results, const std::string& anchor,
                                 const std::filesystem::path& out_dir);

// Draws the curves on a white canvas and writes an RGB PNG.
void plot_curves(const std::filesystem::path& p, const std::vector<std::pair<std::string, RDCurve>>& curves,
                 int width = 640, int height = 480);

}  // namespace hdc::evalkit
