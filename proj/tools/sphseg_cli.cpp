/* Copyright 2026 The sphseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// sphseg: dataset generation, architecture sampling, training, evaluation,
// verification and profiling.
//
// Every command that takes --out treats it as a run directory and writes
// run_config.json there next to its outputs. Options can also be set through
// SPHSEG_<OPTION> environment variables (e.g. SPHSEG_THREADS, SPHSEG_LR).
//
// Exit codes: 0 success, 2 validation failure, 3 I/O error, 4 config error.
#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "sphseg/datagen.hpp"
#include "sphseg/network.hpp"
#include "sphseg/profiler.hpp"
#include "sphseg/training.hpp"
#include "sphseg/transforms.hpp"
#include "sphseg/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sphseg;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitConfig = 4;

class ValidationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  int threads = 0;  // 0: OpenMP default
};

// NaN (undefined IoU) is written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

fs::path prepare_out(const std::string& out) {
  fs::create_directories(out);
  return fs::path(out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::ios_base::failure("write failed: " + path.string());
}

/// Effective value of every option of the command (flags, environment and
/// defaults), plus the globals.
void write_run_config(const fs::path& dir, const CLI::App& cmd, const Globals& g, int argc, char** argv) {
  json options;
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    const std::string name = opt->get_lnames().front();
    if (opt->get_type_size() == 0) {
      options[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto r = opt->results();
      options[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else {
      options[name] = opt->get_default_str();
    }
  }
  json argv_json = json::array();
  for (int i = 0; i < argc; ++i) argv_json.push_back(argv[i]);
  const json cfg = {{"command", cmd.get_name()},
                    {"seed", g.seed},
                    {"threads", g.threads > 0 ? g.threads : omp_get_max_threads()},
                    {"options", options},
                    {"argv", argv_json}};
  write_text(dir / "run_config.json", cfg.dump(2) + "\n");
}

json metrics_json(const EvalMetrics& m) {
  json iou = json::array();
  for (double v : m.class_iou) iou.push_back(number(v));
  return {{"loss", m.loss},
          {"accuracy", m.accuracy},
          {"miou", number(m.miou)},
          {"miou_non_background", number(m.miou_non_background)},
          {"class_iou", iou}};
}

// ----------------------------------------------------------------- commands

struct GenSources {
  std::size_t count = 10000;
  std::string out;
};

void gen_sources(const GenSources& o, const Globals& g) {
  const fs::path dir = prepare_out(o.out);
  write_gray((dir / "sources.gray").string(), synthetic_glyphs(o.count, g.seed));
  std::printf("wrote %zu glyphs to %s\n", o.count, (dir / "sources.gray").c_str());
}

struct GenData {
  std::string sources;
  std::size_t glyphs = 1000;
  std::size_t count = 100;
  int bandlimit = 50;
  int items = 1;
  int threshold = 150;
  std::string projection = "pole";
  bool rotated = false;
  double radius_deg = 45.0;
  int num_classes = 11;
  std::string out;
};

void gen_data(const GenData& o, const Globals& g) {
  DataGenConfig cfg;
  cfg.L = o.bandlimit;
  cfg.items_per_sphere = o.items;
  cfg.threshold = o.threshold;
  cfg.projection = parse_projection_point(o.projection);
  cfg.rotated = o.rotated;
  cfg.seed = g.seed;
  cfg.num_classes = o.num_classes;
  cfg.angular_radius = o.radius_deg * kPi / 180.0;
  validate_datagen_config(cfg);
  const std::vector<SourceImage> sources =
      o.sources.empty() ? synthetic_glyphs(o.glyphs, derive_seed(g.seed, 0x67)) : read_gray(o.sources);
  const fs::path dir = prepare_out(o.out);
  DatasetHeader h;
  h.L = cfg.L;
  h.num_classes = cfg.num_classes;
  h.count = o.count;
  h.rotated = cfg.rotated;
  h.projection = cfg.projection;
  h.threshold = cfg.threshold;
  DatasetWriter writer((dir / "dataset.sphd").string(), h);
  constexpr std::size_t kChunk = 256;
  for (std::size_t first = 0; first < o.count; first += kChunk) {
    for (const DatasetRecord& r : generate_records(cfg, sources, first, std::min(kChunk, o.count - first)))
      writer.append(r);
  }
  writer.close();
  std::printf("wrote %zu records (L=%d) to %s\n", o.count, cfg.L, (dir / "dataset.sphd").c_str());
}

struct GenModel {
  std::string spec;
  std::size_t param_lo = 190000;
  std::size_t param_hi = 210000;
  int bandlimit = 50;
  int in_channels = 1;
  int out_channels = 11;
  std::vector<int> support = {8, 3, 8};
  int max_attempts = 100000;
  std::string out;
};

void gen_model(const GenModel& o, const Globals& g) {
  ModelSpec spec;
  if (!o.spec.empty()) {
    std::ifstream in(o.spec);
    if (!in) throw std::ios_base::failure("cannot open " + o.spec);
    spec = parse_model_spec(std::string(std::istreambuf_iterator<char>(in), {}));
    validate_model_spec(spec);
  } else {
    SamplerConfig sc;
    sc.param_lo = o.param_lo;
    sc.param_hi = o.param_hi;
    sc.bandlimit = o.bandlimit;
    sc.input_channels = o.in_channels;
    sc.output_channels = o.out_channels;
    sc.support = {o.support[0], o.support[1], o.support[2]};
    sc.max_attempts = o.max_attempts;
    Rng rng(derive_seed(g.seed, 1));
    spec = sample_equivariant_architecture(sc, rng);
  }
  const Network net(spec);
  Rng rng(derive_seed(g.seed, 2));
  const fs::path dir = prepare_out(o.out);
  save_model((dir / "model.sphm").string(), {spec, net.init_parameters(rng), std::nullopt});
  write_text(dir / "model.txt", model_spec_to_text(spec));
  std::printf("%zu layers, %zu parameters -> %s\n", spec.layers.size(), net.num_parameters(),
              (dir / "model.sphm").c_str());
}

struct Train {
  std::string model;
  std::string data;
  std::string monitor;
  int epochs = 200;
  int batch_size = 32;
  double lr = 1e-3;
  int patience = 10;
  bool resume = false;
  std::string out;
};

void train_cmd(const Train& o, const Globals& g) {
  ModelFile mf = load_model(o.model);
  const Network net(mf.spec);
  const Dataset data = read_dataset(o.data);
  check_compatible(net, data.header);
  Dataset monitor;
  if (!o.monitor.empty()) {
    monitor = read_dataset(o.monitor);
    check_compatible(net, monitor.header);
  }
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.adam.lr = o.lr;
  tc.patience = o.patience;
  tc.seed = g.seed;
  if (tc.epochs < 1 || tc.batch_size < 1 || !(tc.adam.lr >= 0.0) || tc.patience < 1)
    throw DomainError("epochs, batch size and patience must be positive and lr non-negative");
  AdamState opt;
  if (o.resume && mf.optimizer) opt = *mf.optimizer;

  const fs::path dir = prepare_out(o.out);
  std::ofstream log(dir / "metrics.jsonl");
  if (!log) throw std::ios_base::failure("cannot open metrics log in " + dir.string());
  const TrainResult r = train(net, mf.params, data, o.monitor.empty() ? nullptr : &monitor, tc,
                              [&](const EpochMetrics& m) {
                                const json rec = {{"epoch", m.epoch},
                                                  {"loss", m.train_loss},
                                                  {"miou", number(m.miou)},
                                                  {"seconds", m.seconds}};
                                log << rec.dump() << "\n" << std::flush;
                                std::fprintf(stderr, "epoch %d  loss %.5f  miou %.4f  %.1fs\n", m.epoch,
                                             m.train_loss, m.miou, m.seconds);
                              },
                              opt);
  save_model((dir / "model.sphm").string(), {mf.spec, r.params, r.optimizer});
  const json summary = {{"epochs_run", r.history.size()},
                        {"best_epoch", r.best_epoch},
                        {"stopped_early", r.stopped_early},
                        {"final_loss", r.history.empty() ? 0.0 : r.history.back().train_loss}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  std::printf("%s\n", summary.dump().c_str());
}

struct Eval {
  std::string model;
  std::string data;
  std::string out;
};

void eval_cmd(const Eval& o, const Globals&) {
  const ModelFile mf = load_model(o.model);
  const Network net(mf.spec);
  const Dataset data = read_dataset(o.data);
  check_compatible(net, data.header);
  const EvalMetrics m = evaluate(net, mf.params, data);
  if (!std::isfinite(m.miou_non_background))
    throw UndefinedMetricError("no foreground class present in predictions or labels");
  const json j = metrics_json(m);
  if (!o.out.empty()) write_text(prepare_out(o.out) / "metrics.json", j.dump(2) + "\n");
  std::printf("%s\n", j.dump(2).c_str());
}

struct Verify {
  std::string level = "quick";
  double tolerance_scale = 1.0;
  std::string out;
};

void verify_cmd(const Verify& o, const Globals& g) {
  verify::SuiteConfig cfg;
  cfg.level = verify::parse_level(o.level);
  cfg.tolerance_scale = o.tolerance_scale;
  cfg.seed = g.seed == 0 ? cfg.seed : g.seed;
  const fs::path dir = o.out.empty() ? fs::temp_directory_path() / "sphseg-verify" : prepare_out(o.out);
  cfg.scratch_dir = (dir / "scratch").string();
  int failed = 0;
  const auto results = verify::run_suites(cfg, [&](const verify::CheckResult& r) {
    failed += !r.passed;
    if (r.tolerance > 0.0) {
      std::printf("%s  %-16s %-40s %.3e < %.1e  %s (%.1fs)\n", r.passed ? "PASS" : "FAIL", r.module.c_str(),
                  r.name.c_str(), r.measured, r.tolerance, r.detail.c_str(), r.seconds);
    } else {
      std::printf("%s  %-16s %-40s %.3e  %s (%.1fs)\n", r.passed ? "PASS" : "FAIL", r.module.c_str(),
                  r.name.c_str(), r.measured, r.detail.c_str(), r.seconds);
    }
    std::fflush(stdout);
  });
  if (!o.out.empty()) {
    json arr = json::array();
    for (const auto& r : results)
      arr.push_back({{"module", r.module},
                     {"name", r.name},
                     {"passed", r.passed},
                     {"measured", number(r.measured)},
                     {"tolerance", r.tolerance},
                     {"detail", r.detail},
                     {"seconds", r.seconds}});
    write_text(dir / "verify.json", arr.dump(2) + "\n");
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  if (failed > 0) throw ValidationFailure(std::to_string(failed) + " property checks failed");
}

struct Profile {
  std::string model;
  std::string data;
  int batch = 1;
  int iterations = 30;
  int warmup = 3;
  std::string out;
};

void profile_cmd(const Profile& o, const Globals& g) {
  const ModelFile mf = load_model(o.model);
  const Network net(mf.spec);
  if (o.batch < 1 || o.iterations < 1 || o.warmup < 0) throw DomainError("batch and iterations must be positive");
  const LayerSpec& first = mf.spec.layers.front();
  std::vector<SphericalSignal> inputs;
  if (!o.data.empty()) {
    Dataset d = read_dataset(o.data);
    check_compatible(net, d.header);
    for (int i = 0; i < o.batch; ++i) inputs.push_back(d.records[i % d.records.size()].signal);
  } else {
    // Random inputs with a decaying spectrum.
    Rng rng(derive_seed(g.seed, 3));
    for (int i = 0; i < o.batch; ++i) {
      S2Spectrum s(Bandlimit(first.in_bandlimit), first.in_channels);
      for (int c = 0; c < s.channels; ++c)
        for (int l = 0; l < first.in_bandlimit; ++l) {
          s.at(c, l, 0) = rng.normal() / (1.0 + l);
          for (int m = 1; m <= l; ++m) {
            s.at(c, l, m) = Complex(rng.normal(), rng.normal()) / (1.0 + l);
            s.at(c, l, -m) = parity_sign(m) * std::conj(s.at(c, l, m));
          }
        }
      inputs.push_back(s2_synthesize_real(s));
    }
  }
  ProfileConfig pc;
  pc.batch = o.batch;
  pc.iterations = o.iterations;
  pc.warmup = o.warmup;
  pc.threads = g.threads > 0 ? g.threads : omp_get_max_threads();
  const ProfileReport rep = profile_forward(net, mf.params, inputs, pc);
  const std::string table = format_profile(rep);
  std::printf("%s", table.c_str());
  if (!o.out.empty()) {
    const fs::path dir = prepare_out(o.out);
    json layers = json::array();
    for (const LayerProfile& l : rep.layers)
      layers.push_back({{"name", l.name},
                        {"mean_ms", l.mean_ms},
                        {"stderr_ms", l.stderr_ms},
                        {"fraction", l.fraction},
                        {"transform_ms", l.op_ms[0]},
                        {"block_multiply_ms", l.op_ms[1]},
                        {"pointwise_ms", l.op_ms[2]}});
    const json j = {{"threads", rep.threads},
                    {"iterations", rep.iterations},
                    {"warmup", rep.warmup},
                    {"batch", rep.batch},
                    {"layers", layers},
                    {"op_fraction",
                     {{"transform", rep.op_fraction[0]},
                      {"block_multiply", rep.op_fraction[1]},
                      {"pointwise", rep.op_fraction[2]}}},
                    {"layer_total_ms", rep.layer_total_ms},
                    {"wall_ms", rep.wall_ms}};
    write_text(dir / "profile.json", j.dump(2) + "\n");
    write_text(dir / "profile.txt", table);
  }
}

// Environment variable for an option: SPHSEG_ + upper-case name, '-' -> '_'.
CLI::Option* env(CLI::Option* opt) {
  std::string name = "SPHSEG_" + opt->get_lnames().front();
  for (char& c : name) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return opt->envname(name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariant spherical segmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  env(app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str());
  env(app.add_option("--threads", g.threads, "OpenMP threads (0: runtime default)")
          ->check(CLI::NonNegativeNumber)
          ->capture_default_str());

  GenSources gs;
  auto* c_sources = app.add_subcommand("gen-sources", "Write synthetic digit-like glyphs as a GRAY container");
  env(c_sources->add_option("--count", gs.count)->capture_default_str());
  env(c_sources->add_option("--out", gs.out, "Run directory")->required());

  GenData gd;
  auto* c_data = app.add_subcommand("gen-data", "Generate a spherical segmentation dataset (SPHD)");
  env(c_data->add_option("--sources", gd.sources, "GRAY file; synthetic glyphs when omitted"));
  env(c_data->add_option("--glyphs", gd.glyphs, "Synthetic glyph pool size")->capture_default_str());
  env(c_data->add_option("--count", gd.count, "Records")->capture_default_str());
  env(c_data->add_option("--bandlimit", gd.bandlimit)->capture_default_str());
  env(c_data->add_option("--items", gd.items, "Items per sphere")->capture_default_str());
  env(c_data->add_option("--threshold", gd.threshold)->capture_default_str());
  env(c_data->add_option("--projection", gd.projection)
          ->check(CLI::IsMember({"pole", "grid_center"}))
          ->capture_default_str());
  env(c_data->add_flag("--rotated", gd.rotated, "Apply a random rotation per record"));
  env(c_data->add_option("--radius-deg", gd.radius_deg, "Angular half-width of the canvas")->capture_default_str());
  env(c_data->add_option("--num-classes", gd.num_classes)->capture_default_str());
  env(c_data->add_option("--out", gd.out, "Run directory")->required());

  GenModel gm;
  auto* c_model = app.add_subcommand("gen-model", "Sample an equivariant architecture and initialise it");
  env(c_model->add_option("--spec", gm.spec, "Use this model spec text instead of sampling"));
  env(c_model->add_option("--param-lo", gm.param_lo)->capture_default_str());
  env(c_model->add_option("--param-hi", gm.param_hi)->capture_default_str());
  env(c_model->add_option("--bandlimit", gm.bandlimit)->capture_default_str());
  env(c_model->add_option("--in-channels", gm.in_channels)->capture_default_str());
  env(c_model->add_option("--out-channels", gm.out_channels)->capture_default_str());
  env(c_model->add_option("--support", gm.support, "alpha beta gamma support counts")
          ->expected(3)
          ->delimiter(',')
          ->capture_default_str());
  env(c_model->add_option("--max-attempts", gm.max_attempts)->capture_default_str());
  env(c_model->add_option("--out", gm.out, "Run directory")->required());

  Train tr;
  auto* c_train = app.add_subcommand("train", "Train with Adam and early stopping on non-background mIoU");
  env(c_train->add_option("--model", tr.model)->required());
  env(c_train->add_option("--data", tr.data)->required());
  env(c_train->add_option("--monitor", tr.monitor, "Early-stopping dataset (default: training data)"));
  env(c_train->add_option("--epochs", tr.epochs)->capture_default_str());
  env(c_train->add_option("--batch-size", tr.batch_size)->capture_default_str());
  env(c_train->add_option("--lr", tr.lr)->capture_default_str());
  env(c_train->add_option("--patience", tr.patience)->capture_default_str());
  env(c_train->add_flag("--resume", tr.resume, "Continue from the optimizer state in --model"));
  env(c_train->add_option("--out", tr.out, "Run directory")->required());

  Eval ev;
  auto* c_eval = app.add_subcommand("eval", "Loss, accuracy and mIoU of a model on a dataset");
  env(c_eval->add_option("--model", ev.model)->required());
  env(c_eval->add_option("--data", ev.data)->required());
  env(c_eval->add_option("--out", ev.out, "Run directory"));

  Verify vf;
  auto* c_verify = app.add_subcommand("verify", "Run the property suites of every module");
  env(c_verify->add_option("--level", vf.level)->check(CLI::IsMember({"quick", "full"}))->capture_default_str());
  env(c_verify->add_option("--tolerance-scale", vf.tolerance_scale, "Multiplies every error tolerance")
          ->capture_default_str());
  env(c_verify->add_option("--out", vf.out, "Run directory"));

  Profile pf;
  auto* c_profile = app.add_subcommand("profile", "Per-layer forward latency and per-operation breakdown");
  env(c_profile->add_option("--model", pf.model)->required());
  env(c_profile->add_option("--data", pf.data, "Inputs from this dataset (default: random signals)"));
  env(c_profile->add_option("--batch", pf.batch)->capture_default_str());
  env(c_profile->add_option("--iterations", pf.iterations)->capture_default_str());
  env(c_profile->add_option("--warmup", pf.warmup)->capture_default_str());
  env(c_profile->add_option("--out", pf.out, "Run directory"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (g.threads > 0) omp_set_num_threads(g.threads);

  CLI::App* cmd = app.get_subcommands().front();
  try {
    const std::string name = cmd->get_name();
    const std::string out = cmd->get_option("--out")->as<std::string>();
    if (!out.empty()) write_run_config(prepare_out(out), *cmd, g, argc, argv);
    if (name == "gen-sources") gen_sources(gs, g);
    if (name == "gen-data") gen_data(gd, g);
    if (name == "gen-model") gen_model(gm, g);
    if (name == "train") train_cmd(tr, g);
    if (name == "eval") eval_cmd(ev, g);
    if (name == "verify") verify_cmd(vf, g);
    if (name == "profile") profile_cmd(pf, g);
  } catch (const ValidationFailure& e) {
    std::fprintf(stderr, "validation failed: %s\n", e.what());
    return kExitValidation;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "incompatible: %s\n", e.what());
    return kExitValidation;
  } catch (const UndefinedMetricError& e) {
    std::fprintf(stderr, "undefined metric: %s\n", e.what());
    return kExitValidation;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "malformed file: %s\n", e.what());
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const SamplingError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
  return 0;
}
