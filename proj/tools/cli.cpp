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

#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include "hdc/bitstream.hpp"
#include "hdc/codec/gop.hpp"
#include "hdc/evalkit/dataset.hpp"
#include "hdc/evalkit/image_io.hpp"
#include "hdc/evalkit/metrics.hpp"
#include "hdc/evalkit/report.hpp"
#include "hdc/serializer.hpp"
#include "hdc/train/train.hpp"

namespace hdc::cli {

namespace fs = std::filesystem;

namespace {

// Bad input that the user can fix; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelArgs {
  std::string config, weights;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "codec configuration file (key = value lines)");
    app->add_option("--weights", weights, "checkpoint to load");
    app->add_option("--seed", seed, "initialization seed when no checkpoint is given");
  }
};

// Owns the parameter store a model points into.
struct LoadedModel {
  codec::CodecConfig cfg;
  std::unique_ptr<nn::ParamStore> store;
  std::unique_ptr<codec::StereoModel> model;
};

codec::CodecConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  try {
    return codec::CodecConfig::load(path);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

LoadedModel load_model(const ModelArgs& a) {
  LoadedModel m;
  m.cfg = load_config(a.config);
  m.store = std::make_unique<nn::ParamStore>(a.seed);
  m.model = std::make_unique<codec::StereoModel>(m.cfg, *m.store);
  if (!a.weights.empty()) {
    if (!fs::exists(a.weights)) throw UsageError("checkpoint not found: " + a.weights);
    m.store->load(a.weights);
  }
  return m;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& s) {
  const auto x = s.find('x');
  std::size_t w = 0, h = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    w = std::stoul(s.substr(0, x));
    h = std::stoul(s.substr(x + 1));
  } catch (const std::exception&) {
    throw UsageError("size must look like WIDTHxHEIGHT, got '" + s + "'");
  }
  if (!w || !h) throw UsageError("size must be nonzero");
  return {w, h};
}

std::vector<codec::StereoFrame> load_input(const std::string& input, const std::string& size, std::size_t max_frames) {
  if (!fs::exists(input)) throw UsageError("input not found: " + input);
  try {
    if (fs::is_directory(input)) return evalkit::load_stereo_dir(input, max_frames);
    if (size.empty()) throw UsageError("--size is required for raw side-by-side I420 input");
    const auto [w, h] = parse_size(size);
    return evalkit::load_stereo_yuv(input, w, h, max_frames);
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const UsageError*>(&e)) throw;
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

double mse255(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = 255.0 * (a[i] - b[i]);
    s += d * d;
  }
  return s / double(a.numel());
}

// Mean PSNR over frames and views, on 8-bit rounded reconstructions.
double clip_psnr(const std::vector<codec::StereoFrame>& x, const std::vector<codec::StereoFrame>& y) {
  auto to8 = [](const Tensor& t) {
    Tensor o = t;
    for (double& v : o.values()) v = std::clamp(std::nearbyint(255.0 * v), 0.0, 255.0);
    return o;
  };
  double acc = 0;
  for (std::size_t t = 0; t < x.size(); ++t)
    acc += evalkit::psnr_rgb(to8(x[t].left), to8(y[t].left)) + evalkit::psnr_rgb(to8(x[t].right), to8(y[t].right));
  return acc / double(2 * x.size());
}

std::vector<std::uint8_t> read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw UsageError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(is), {}};
}

void write_file(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(p, std::ios::binary);
  os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!os) throw std::runtime_error("cannot write " + p.string());
}

// encode --------------------------------------------------------------------

struct EncodeArgs {
  ModelArgs model;
  std::string input, output, size, serializer = "bypass";
  int gop = 21;
  double lambda = 0;
  std::size_t frames = 0;
  bool no_attention = false, no_shift = false, no_fer = false, no_cross_view = false;
};

int do_encode(const EncodeArgs& a, std::ostream& out) {
  if (!(a.lambda > 0)) throw UsageError("--lambda must be positive");
  if (a.gop < 1) throw UsageError("--gop must be at least 1");
  if (a.no_attention && a.no_shift) throw UsageError("--no-attention and --no-shift are exclusive");
  const auto clip = load_input(a.input, a.size, a.frames);
  auto m = load_model(a.model);

  codec::EncodeOptions opt;
  opt.gop = a.gop;
  opt.switches.fer = !a.no_fer;
  opt.switches.cross_view = !a.no_cross_view;
  if (a.no_attention) opt.switches.ablation = fer::Ablation::kNoAttention;
  if (a.no_shift) opt.switches.ablation = fer::Ablation::kNoShift;
  if (a.serializer == "range") {
    if (!bits::range_coder_linked()) throw UsageError("this build has no range coder");
    opt.serializer = bits::kRangeSerializer;
  } else if (a.serializer != "bypass") {
    throw UsageError("unknown serializer '" + a.serializer + "'");
  }

  const auto res = codec::encode_gop(*m.model, clip, opt);
  write_file(a.output, res.container.serialize());
  double d = 0;
  for (std::size_t t = 0; t < clip.size(); ++t)
    d += mse255(clip[t].left, res.reconstruction[t].left) + mse255(clip[t].right, res.reconstruction[t].right);
  d /= double(2 * clip.size());
  const double bpp = codec::container_bpp(res.container);
  out << "frames " << clip.size() << "  bytes " << res.container.total_bytes() << "  bpp " << bpp << "  psnr "
      << clip_psnr(clip, res.reconstruction) << " dB  rd " << a.lambda * d / (255.0 * 255.0) + bpp << "\n";
  return kExitOk;
}

// decode --------------------------------------------------------------------

struct DecodeArgs {
  ModelArgs model;
  std::string input, output;
};

int do_decode(const DecodeArgs& a, std::ostream& out, std::ostream& err) {
  const auto bytes = read_file(a.input);
  auto m = load_model(a.model);
  codec::DecodeResult res;
  try {
    res = codec::decode_gop(*m.model, codec::Container::parse(bytes));
  } catch (const bits::DecodeError& e) {
    err << "decode failed: " << e.what() << "\n";
    return kExitDecodeFailure;
  }
  evalkit::save_stereo_dir(a.output, res.frames);
  out << "decoded " << res.frames.size() << " frames to " << a.output << "\n";
  return kExitOk;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  ModelArgs model;
  int stage = 0, iterations = 0;
  std::string data = "synthetic", out, init;
  double lambda = 1024;
  std::size_t patch = 64;
  std::uint64_t data_seed = 1;
};

// Random 3-frame windows cut from user sequences, padded to the model grid.
train::ClipSource folder_source(std::vector<std::vector<codec::StereoFrame>> seqs, std::size_t patch,
                                std::uint64_t seed) {
  return [seqs = std::move(seqs), patch, seed](std::size_t it, std::size_t k) {
    std::seed_seq ss{seed, std::uint64_t(it), std::uint64_t(k)};
    std::mt19937_64 rng(ss);
    const auto& s = seqs[rng() % seqs.size()];
    const std::size_t len = std::min<std::size_t>(3, s.size());
    const std::size_t t0 = rng() % (s.size() - len + 1);
    const std::size_t h = s[0].left.dim(1), w = s[0].left.dim(2);
    const std::size_t ph = std::min(patch, h), pw = std::min(patch, w);
    const std::size_t y = rng() % (h - ph + 1), x = rng() % (w - pw + 1);
    evalkit::CropRule r{evalkit::CropRule::Kind::kMargins, y, h - ph - y, x, w - pw - x, 0, 0};
    auto cut = [&](const Tensor& f) {
      return codec::pad_to_multiple(ph == h && pw == w ? f : evalkit::crop_frame(f, r), 64);
    };
    train::Clip c;
    for (std::size_t t = t0; t < t0 + len; ++t) c.push_back({cut(s[t].left), cut(s[t].right)});
    return c;
  };
}

int do_train(const TrainArgs& a, std::ostream& out) {
  if (a.stage < 1 || a.stage > 4) throw UsageError("--stage must be 1..4");
  if (!(a.lambda > 0)) throw UsageError("--lambda must be positive");
  if (a.patch < 64 || a.patch % 64) throw UsageError("--patch must be a positive multiple of 64");
  ModelArgs ma = a.model;
  ma.weights = a.init;
  auto m = load_model(ma);

  train::ClipSource data;
  if (a.data == "synthetic") {
    data = train::synthetic_source(a.data_seed);
  } else {
    if (!fs::is_directory(a.data)) throw UsageError("data directory not found: " + a.data);
    std::vector<std::vector<codec::StereoFrame>> seqs;
    if (fs::is_directory(fs::path(a.data) / "left")) {
      seqs.push_back(load_input(a.data, "", 0));
    } else {
      for (const auto& e : fs::directory_iterator(a.data))
        if (e.is_directory() && fs::is_directory(e.path() / "left")) seqs.push_back(load_input(e.path().string(), "", 0));
    }
    if (seqs.empty()) throw UsageError("no stereo sequences under " + a.data);
    data = folder_source(std::move(seqs), a.patch, a.data_seed);
  }

  auto sc = train::StageConfig::for_stage(a.stage);
  if (a.iterations > 0) sc.iterations = a.iterations;
  const int every = std::max(1, sc.iterations / 20);
  const auto r = train::run_stage(*m.model, *m.store, data, sc, a.lambda, [&](int it, double loss) {
    if (it % every == 0 || it + 1 == sc.iterations) out << "iteration " << it << "  loss " << loss << "\n";
  });
  m.store->save(a.out);
  const auto s = train::smooth(r.losses, std::min<std::size_t>(20, r.losses.size()));
  out << "stage " << a.stage << " done, smoothed loss " << s.back() << ", saved " << a.out << "\n";
  return kExitOk;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  std::string codec_bin, dataset, anchor, out, size, label = "hdcsvc";
  std::vector<double> lambdas;
  std::vector<std::string> anchor_csv;
};

std::string lambda_tag(double l) {
  std::ostringstream s;
  s << l;
  return s.str();
}

int do_eval(const EvalArgs& a, std::ostream& out) {
  const auto colon = a.dataset.find(':');
  if (colon == std::string::npos) throw UsageError("--dataset must be NAME:ROOT");
  evalkit::DatasetSpec spec;
  try {
    spec = evalkit::dataset_by_name(a.dataset.substr(0, colon));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path root = a.dataset.substr(colon + 1);
  if (!fs::is_directory(root)) throw UsageError("dataset root not found: " + root.string());
  if (a.lambdas.empty()) throw UsageError("--lambdas is empty");
  if (!fs::is_directory(a.codec_bin)) throw UsageError("codec directory not found: " + a.codec_bin);

  std::map<std::string, std::vector<evalkit::RDRow>> results;
  for (const auto& spec_csv : a.anchor_csv) {
    const auto eq = spec_csv.find('=');
    if (eq == std::string::npos) throw UsageError("--anchor-csv must be LABEL=PATH");
    const fs::path p = spec_csv.substr(eq + 1);
    if (!fs::exists(p)) throw UsageError("anchor csv not found: " + p.string());
    results[spec_csv.substr(0, eq)] = evalkit::read_csv(p);
  }
  if (a.anchor != a.label && !results.count(a.anchor)) throw UsageError("anchor '" + a.anchor + "' has no results");

  // Sequences: subdirectories with left/right (or view<k>) frames, or raw
  // side-by-side I420 files.
  std::vector<std::pair<std::string, std::vector<codec::StereoFrame>>> seqs;
  const std::size_t max_frames = spec.frames > 0 ? std::size_t(spec.frames) : 0;
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(root)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  for (const auto& p : entries) {
    if (fs::is_directory(p)) {
      fs::path dir = p;
      if (!fs::is_directory(p / "left") && spec.views.size() == 2) {
        // Multi-view source: expose the two chosen views as left/right.
        const fs::path l = p / ("view" + std::to_string(spec.views[0])), r = p / ("view" + std::to_string(spec.views[1]));
        if (!fs::is_directory(l) || !fs::is_directory(r)) continue;
        const auto tmp = fs::path(a.out) / ".views" / p.filename();
        fs::create_directories(tmp);
        fs::remove_all(tmp / "left");
        fs::remove_all(tmp / "right");
        fs::create_directory_symlink(fs::absolute(l), tmp / "left");
        fs::create_directory_symlink(fs::absolute(r), tmp / "right");
        dir = tmp;
      } else if (!fs::is_directory(p / "left")) {
        continue;
      }
      seqs.emplace_back(p.filename().string(), load_input(dir.string(), "", max_frames));
    } else if (p.extension() == ".yuv") {
      seqs.emplace_back(p.stem().string(), load_input(p.string(), a.size, max_frames));
    }
  }
  if (seqs.empty()) throw UsageError("no sequences under " + root.string());
  for (auto& [name, frames] : seqs)
    for (auto& f : frames) {
      f.left = evalkit::crop_frame(f.left, spec.crop);
      f.right = evalkit::crop_frame(f.right, spec.crop);
    }

  const fs::path cdir = a.codec_bin;
  const std::string cfg_path = fs::exists(cdir / "config.txt") ? (cdir / "config.txt").string() : "";
  auto& rows = results[a.label];
  for (double lambda : a.lambdas) {
    ModelArgs ma;
    ma.config = cfg_path;
    ma.weights = (cdir / ("lambda_" + lambda_tag(lambda) + ".ckpt")).string();
    if (!fs::exists(ma.weights)) throw UsageError("missing checkpoint " + ma.weights);
    auto m = load_model(ma);
    codec::EncodeOptions opt;
    opt.gop = spec.gop;
    for (const auto& [name, frames] : seqs) {
      const auto res = codec::encode_gop(*m.model, frames, opt);
      rows.push_back({name, lambda, codec::container_bpp(res.container), clip_psnr(frames, res.reconstruction)});
      out << name << "  lambda " << lambda << "  bpp " << rows.back().bpp << "  psnr " << rows.back().psnr << "\n";
    }
  }
  fs::remove_all(fs::path(a.out) / ".views");
  const auto bd = evalkit::emit_report(results, a.anchor, a.out);
  for (const auto& e : bd) out << "bd-rate " << e.label << " " << e.sequence << " " << e.bd_rate << " %\n";
  return kExitOk;
}

// range coder file mode -----------------------------------------------------

struct RcArgs {
  std::string sym, gau, rcs;
};

int do_rc(const RcArgs& a, bool encode, std::ostream& out) {
  if (!bits::range_coder_linked()) throw UsageError("this build has no range coder");
  if (encode) {
    bits::encode_files(a.sym, a.gau, a.rcs, bits::linked_range_coder());
    out << "wrote " << a.rcs << "\n";
    return kExitOk;
  }
  bits::decode_files(a.rcs, a.gau, a.sym, bits::linked_range_coder());
  out << "wrote " << a.sym << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stereo video codec with hybrid disparity compensation", "hdcsvc"};
  app.require_subcommand(1);

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "encode a stereo clip into a container");
  c_enc->add_option("--input", enc.input, "stereo directory (left/, right/) or side-by-side I420 file")->required();
  c_enc->add_option("--output", enc.output, "container file")->required();
  c_enc->add_option("--gop", enc.gop, "GOP length");
  c_enc->add_option("--lambda", enc.lambda, "rate-distortion trade-off the weights were trained for")->required();
  c_enc->add_option("--size", enc.size, "WIDTHxHEIGHT of raw I420 input");
  c_enc->add_option("--frames", enc.frames, "encode at most this many frames");
  c_enc->add_option("--serializer", enc.serializer, "bypass or range");
  c_enc->add_flag("--no-attention", enc.no_attention, "disable the attention score");
  c_enc->add_flag("--no-shift", enc.no_shift, "disable the shift operation");
  c_enc->add_flag("--no-fer", enc.no_fer, "skip the feature enhancement blocks");
  c_enc->add_flag("--no-cross-view", enc.no_cross_view, "zero the cross-view entropy priors");
  enc.model.add_to(c_enc);

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "decode a container into PNG frames");
  c_dec->add_option("--input", dec.input, "container file")->required();
  c_dec->add_option("--output", dec.output, "output directory")->required();
  dec.model.add_to(c_dec);

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "run one training stage");
  c_tr->add_option("--stage", tr.stage, "stage 1..4")->required();
  c_tr->add_option("--data", tr.data, "'synthetic' or a directory of stereo sequences");
  c_tr->add_option("--out", tr.out, "checkpoint to write")->required();
  c_tr->add_option("--init", tr.init, "checkpoint to start from");
  c_tr->add_option("--iterations", tr.iterations, "override the stage length");
  c_tr->add_option("--lambda", tr.lambda, "rate-distortion trade-off");
  c_tr->add_option("--patch", tr.patch, "training crop size, multiple of 64");
  c_tr->add_option("--data-seed", tr.data_seed, "seed of the clip sampler");
  c_tr->add_option("--config", tr.model.config, "codec configuration file");
  c_tr->add_option("--seed", tr.model.seed, "initialization seed when --init is absent");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "rate-distortion evaluation and BD-rate report");
  c_ev->add_option("--codec-bin", ev.codec_bin, "directory with config.txt and lambda_<X>.ckpt files")->required();
  c_ev->add_option("--dataset", ev.dataset, "NAME:ROOT, NAME one of cityscapes, kitti, nagoya")->required();
  c_ev->add_option("--lambdas", ev.lambdas, "comma-separated lambdas")->required()->delimiter(',');
  c_ev->add_option("--anchor", ev.anchor, "label BD-rates are measured against")->required();
  c_ev->add_option("--anchor-csv", ev.anchor_csv, "LABEL=PATH result file of another codec");
  c_ev->add_option("--label", ev.label, "label of this codec's results");
  c_ev->add_option("--size", ev.size, "WIDTHxHEIGHT of raw I420 sequences");
  c_ev->add_option("--out", ev.out, "report directory")->required();

  RcArgs rce, rcd;
  auto* c_rce = app.add_subcommand("rc-encode", "range-code a .sym/.gau pair into .rcs");
  c_rce->add_option("--sym", rce.sym)->required();
  c_rce->add_option("--gau", rce.gau)->required();
  c_rce->add_option("--out", rce.rcs)->required();
  auto* c_rcd = app.add_subcommand("rc-decode", "decode .rcs with its .gau into .sym");
  c_rcd->add_option("--rcs", rcd.rcs)->required();
  c_rcd->add_option("--gau", rcd.gau)->required();
  c_rcd->add_option("--out", rcd.sym)->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kExitBadArgs;
  }

  try {
    if (c_enc->parsed()) return do_encode(enc, out);
    if (c_dec->parsed()) return do_decode(dec, out, err);
    if (c_tr->parsed()) return do_train(tr, out);
    if (c_ev->parsed()) return do_eval(ev, out);
    if (c_rce->parsed()) return do_rc(rce, true, out);
    if (c_rcd->parsed()) return do_rc(rcd, false, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const bits::DecodeError& e) {
    err << "decode failed: " << e.what() << "\n";
    return kExitDecodeFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitBadArgs;
}

}  // namespace hdc::cli
