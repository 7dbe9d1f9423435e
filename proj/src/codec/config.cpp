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

#include "hdc/codec/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hdc/fer.hpp"

namespace hdc::codec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

std::vector<int> to_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_int(key, item));
  }
  return out;
}

}  // namespace

int CodecConfig::d_feat_at(int stride) const {
  const int set = stride == 4 ? d_feat_4 : (stride == 8 ? d_feat_8 : 0);
  return set > 0 ? set : fer::default_d_feat(stride, fer_s);
}

bool CodecConfig::fer_at(int stride) const {
  return std::find(fer_strides.begin(), fer_strides.end(), stride) != fer_strides.end();
}

void CodecConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string("config: ") + name + " must be >= 1");
  };
  positive(feature_channels, "feature_channels");
  positive(latent_channels, "latent_channels");
  positive(mv_channels, "mv_channels");
  positive(mv_latent_channels, "mv_latent_channels");
  positive(hyper_channels, "hyper_channels");
  positive(mv_hyper_channels, "mv_hyper_channels");
  positive(slices, "slices");
  positive(phi_channels, "phi_channels");
  positive(prior_width, "prior_width");
  positive(est_width, "est_width");
  positive(d_feat_latent, "d_feat_latent");
  positive(lk_levels, "lk_levels");
  positive(me_hidden, "me_hidden");
  positive(intra_channels, "intra_channels");
  if (lk_iterations < 0) throw std::invalid_argument("config: lk_iterations must be >= 0");
  if (latent_channels % slices || mv_latent_channels % slices) {
    throw std::invalid_argument("config: latent channel counts must be divisible by slices");
  }
  if (fer_s != 1 && fer_s != 2) throw std::invalid_argument("config: fer_s must be 1 or 2");
  for (int s : fer_strides) {
    if (s != 4 && s != 8) throw std::invalid_argument("config: fer_strides accepts 4 and 8");
  }
  if (!(sigma_min > 0.0)) throw std::invalid_argument("config: sigma_min must be positive");
}

CodecConfig CodecConfig::parse(const std::string& text) {
  CodecConfig c;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
      {"feature_channels", [&](auto& k, auto& v) { c.feature_channels = to_int(k, v); }},
      {"context_channels", [&](auto& k, auto& v) { c.feature_channels = to_int(k, v); }},
      {"latent_channels", [&](auto& k, auto& v) { c.latent_channels = to_int(k, v); }},
      {"mv_channels", [&](auto& k, auto& v) { c.mv_channels = to_int(k, v); }},
      {"mv_latent_channels", [&](auto& k, auto& v) { c.mv_latent_channels = to_int(k, v); }},
      {"hyper_channels", [&](auto& k, auto& v) { c.hyper_channels = to_int(k, v); }},
      {"mv_hyper_channels", [&](auto& k, auto& v) { c.mv_hyper_channels = to_int(k, v); }},
      {"slices", [&](auto& k, auto& v) { c.slices = to_int(k, v); }},
      {"phi_channels", [&](auto& k, auto& v) { c.phi_channels = to_int(k, v); }},
      {"prior_width", [&](auto& k, auto& v) { c.prior_width = to_int(k, v); }},
      {"est_width", [&](auto& k, auto& v) { c.est_width = to_int(k, v); }},
      {"d_feat_latent", [&](auto& k, auto& v) { c.d_feat_latent = to_int(k, v); }},
      {"d_feat_4", [&](auto& k, auto& v) { c.d_feat_4 = to_int(k, v); }},
      {"d_feat_8", [&](auto& k, auto& v) { c.d_feat_8 = to_int(k, v); }},
      {"fer_s", [&](auto& k, auto& v) { c.fer_s = to_int(k, v); }},
      {"fer_strides", [&](auto& k, auto& v) { c.fer_strides = to_list(k, v); }},
      {"sigma_min", [&](auto& k, auto& v) { c.sigma_min = to_double(k, v); }},
      {"lk_levels", [&](auto& k, auto& v) { c.lk_levels = to_int(k, v); }},
      {"lk_iterations", [&](auto& k, auto& v) { c.lk_iterations = to_int(k, v); }},
      {"me_hidden", [&](auto& k, auto& v) { c.me_hidden = to_int(k, v); }},
      {"intra_channels", [&](auto& k, auto& v) { c.intra_channels = to_int(k, v); }},
      {"intra",
       [&](auto& k, auto& v) {
         if (v == "passthrough") {
           c.intra = IntraKind::kPassthrough;
         } else if (v == "factorized") {
           c.intra = IntraKind::kFactorized;
         } else {
           throw std::invalid_argument("config: " + k + " must be passthrough or factorized");
         }
       }},
  };
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": missing '='");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key " + key);
    it->second(key, value);
  }
  c.validate();
  return c;
}

CodecConfig CodecConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

std::string CodecConfig::to_string() const {
  std::ostringstream os;
  os << "feature_channels = " << feature_channels << "\n"
     << "latent_channels = " << latent_channels << "\n"
     << "mv_channels = " << mv_channels << "\n"
     << "mv_latent_channels = " << mv_latent_channels << "\n"
     << "hyper_channels = " << hyper_channels << "\n"
     << "mv_hyper_channels = " << mv_hyper_channels << "\n"
     << "slices = " << slices << "\n"
     << "phi_channels = " << phi_channels << "\n"
     << "prior_width = " << prior_width << "\n"
     << "est_width = " << est_width << "\n"
     << "d_feat_latent = " << d_feat_latent << "\n"
     << "d_feat_4 = " << d_feat_4 << "\n"
     << "d_feat_8 = " << d_feat_8 << "\n"
     << "fer_s = " << fer_s << "\n"
     << "fer_strides = ";
  for (std::size_t i = 0; i < fer_strides.size(); ++i) os << (i ? "," : "") << fer_strides[i];
  os.precision(17);
  os << "\n"
     << "sigma_min = " << sigma_min << "\n"
     << "lk_levels = " << lk_levels << "\n"
     << "lk_iterations = " << lk_iterations << "\n"
     << "me_hidden = " << me_hidden << "\n"
     << "intra = " << (intra == IntraKind::kPassthrough ? "passthrough" : "factorized") << "\n"
     << "intra_channels = " << intra_channels << "\n";
  return os.str();
}

CodecConfig CodecConfig::compact() {
  CodecConfig c;
  c.feature_channels = 8;
  c.latent_channels = 16;
  c.mv_channels = 8;
  c.mv_latent_channels = 8;
  c.hyper_channels = 8;
  c.mv_hyper_channels = 4;
  c.slices = 4;
  c.phi_channels = 8;
  c.prior_width = 8;
  c.est_width = 16;
  c.d_feat_latent = 2;
  c.d_feat_4 = 4;
  c.d_feat_8 = 3;
  c.me_hidden = 8;
  c.intra_channels = 16;
  return c;
}

}  // namespace hdc::codec
