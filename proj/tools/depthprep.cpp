// depthprep: synthetic corpus generation, sample preparation, evaluation and
// timing from the command line. Results go to stdout as JSON; failures print
// a single {"error": ...} line to stderr and exit nonzero.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "depthprep/depthprep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace depthprep;

namespace {

void print_error(const std::string& msg, const json& extra = json::object()) {
  json j = extra;
  j["error"] = msg;
  std::cerr << j.dump() << std::endl;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& s) {
  const auto x = s.find('x');
  std::size_t w = 0, h = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument("");
    std::size_t used = 0;
    w = std::stoul(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("");
    h = std::stoul(s.substr(x + 1), &used);
    if (used != s.size() - x - 1) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw ValidationError("expected WxH, got '" + s + "'");
  }
  if (w == 0 || h == 0) throw ValidationError("empty size '" + s + "'");
  return {w, h};
}

/// A directory holding meta.json is one sample; otherwise its sample
/// subdirectories, sorted by name.
std::vector<fs::path> sample_dirs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  if (fs::exists(dir / io::kMetaFile)) return {dir};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / io::kMetaFile)) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no samples under " + dir.string());
  return out;
}

/// Runs fn(i) for i in [0, n) on `jobs` threads. Returns the error message
/// per index (empty on success).
template <typename Fn>
std::vector<std::string> parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t t = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < t; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return errors;
}

// ---- synth ------------------------------------------------------------------------

struct SynthArgs {
  std::size_t count = 1;
  fs::path out;
  std::uint64_t seed = 0;
  std::string kind = "random";
  synth::SceneConfig scene;
  std::vector<double> projector{80.0, 0.0, 0.0};
  std::string config;
  std::size_t jobs = 1;
};

int run_synth(SynthArgs a) {
  a.scene.projector_offset = {a.projector.at(0), a.projector.at(1), a.projector.at(2)};
  const bool randomize = a.kind == "random";
  if (!randomize) a.scene.object_kind = synth::object_kind_from_string(a.kind);
  if (!a.config.empty()) synth::apply_json(a.scene, read_json_file(a.config));
  a.scene.validate();

  fs::create_directories(a.out);
  std::vector<synth::SceneConfig> configs;
  for (std::size_t i = 0; i < a.count; ++i) {
    synth::SceneConfig c = a.scene;
    c.seed = a.seed + i;
    if (randomize) c = synth::randomized_config(a.scene, c.seed);
    configs.push_back(c);
  }
  auto name = [](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%05zu", i);
    return std::string(buf);
  };
  const auto errors = parallel_for(a.count, a.jobs, [&](std::size_t i) {
    io::write_sample(synth::generate_scene(configs[i]), a.out / name(i));
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw Error(name(i) + ": " + errors[i]);
  }

  json samples = json::array();
  for (std::size_t i = 0; i < a.count; ++i) {
    samples.push_back({{"dir", name(i)}, {"seed", configs[i].seed}, {"config", synth::to_json(configs[i])}});
  }
  const json manifest{{"count", a.count}, {"seed", a.seed}, {"samples", samples}};
  io::detail::write_file(a.out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << json{{"count", a.count}, {"out", a.out.string()}}.dump() << std::endl;
  return 0;
}

// ---- prepare ----------------------------------------------------------------------

struct PrepareArgs {
  fs::path in;
  fs::path out;
  PipelineConfig cfg;
  std::optional<float> background;
  std::optional<float> background_intensity;
  int connectivity = 4;
  std::string config;
  std::size_t jobs = 1;
};

int run_prepare(PrepareArgs a) {
  a.cfg.fill.connectivity = a.connectivity == 8 ? prep::Connectivity::Eight : prep::Connectivity::Four;
  json overrides = json::object();
  if (!a.config.empty()) {
    overrides = read_json_file(a.config);
    apply_json(a.cfg, overrides);
  }
  const auto dirs = sample_dirs(a.in);

  const bool need_depth = !a.background && !overrides.contains("background");
  const bool need_intensity = !a.background_intensity && !overrides.contains("background_intensity");
  if (a.background && !overrides.contains("background")) a.cfg.fill.background_value_depth = *a.background;
  if (a.background_intensity && !overrides.contains("background_intensity")) {
    a.cfg.fill.background_value_intensity = *a.background_intensity;
  }
  if (need_depth || need_intensity) {
    DatasetMaxima mx;
    for (const auto& d : dirs) mx.include(io::read_sample(d));
    if (need_depth) a.cfg.fill.background_value_depth = mx.depth;
    if (need_intensity) a.cfg.fill.background_value_intensity = mx.intensity;
  }
  a.cfg.fill.validate();

  const bool single = dirs.size() == 1 && dirs[0] == a.in;
  const auto errors = parallel_for(dirs.size(), a.jobs, [&](std::size_t i) {
    const PreparedSample p = prepare_sample(io::read_sample(dirs[i]), a.cfg);
    fs::path target = dirs[i];
    if (!a.out.empty()) target = single ? a.out : a.out / dirs[i].filename();
    io::write_sample(p.sample, target);
  });
  std::size_t failed = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i].empty()) continue;
    ++failed;
    print_error(errors[i], {{"sample", dirs[i].string()}});
  }
  std::cout << json{{"prepared", dirs.size() - failed},
                    {"failed", failed},
                    {"scale", a.cfg.scale},
                    {"tau", a.cfg.tau},
                    {"background", a.cfg.fill.background_value_depth},
                    {"background_intensity", a.cfg.fill.background_value_intensity}}
                   .dump()
            << std::endl;
  return failed ? 1 : 0;
}

// ---- evaluate ---------------------------------------------------------------------

struct EvaluateArgs {
  fs::path pred;
  fs::path sample;
  bool pcl = false;
  PipelineConfig cfg;
  std::string ply;
  std::string distances;
  std::string config;
};

int run_evaluate(EvaluateArgs a) {
  if (!a.config.empty()) apply_json(a.cfg, read_json_file(a.config));
  const bool with_pcl = a.pcl || !a.ply.empty() || !a.distances.empty();
  const Sample sample = io::read_sample(a.sample);
  const DepthMap pred = io::read_pfm(a.pred);
  const EvalReport rep = evaluate_prediction(pred, sample, a.cfg, with_pcl);
  if (!a.ply.empty()) io::write_ply(rep.colored, a.ply);
  if (!a.distances.empty()) io::write_distances_json(rep.distances, a.distances);
  std::cout << rep.to_json().dump() << std::endl;
  return 0;
}

// ---- bench ------------------------------------------------------------------------

struct BenchArgs {
  fs::path in;
  std::string stages = "fill,downsample,objectmap";
  std::size_t reps = 5;
  PipelineConfig cfg;
  std::string config;
  // extrapolate
  std::string at;
  std::vector<std::string> points;
  std::string from;
};

json record_json(const eval::BenchRecord& r) {
  return {{"stage", r.stage}, {"w", r.width}, {"h", r.height}, {"seconds", r.seconds}, {"reps", r.repetitions}};
}

int run_bench(BenchArgs a) {
  if (a.in.empty()) throw ValidationError("bench needs --in DIR");
  if (!a.config.empty()) apply_json(a.cfg, read_json_file(a.config));
  std::vector<std::string> stages;
  {
    std::stringstream ss(a.stages);
    for (std::string s; std::getline(ss, s, ',');) {
      if (s != "fill" && s != "augment" && s != "downsample" && s != "objectmap" && s != "prepare") {
        throw ValidationError("unknown stage '" + s + "' (fill, augment, downsample, objectmap, prepare)");
      }
      stages.push_back(s);
    }
  }
  if (stages.empty()) throw ValidationError("no stages given");

  json out = json::array();
  for (const auto& dir : sample_dirs(a.in)) {
    const Sample s = io::read_sample(dir);
    const std::size_t w = s.hr_depth.width(), h = s.hr_depth.height();
    const DepthMap raw = upsample::remask(s.hr_depth, s.definition);
    const prep::HoleLabeling labels = prep::classify_holes(s.definition, a.cfg.fill.connectivity);
    const DepthMap filled = prep::fill_depth(raw, labels, a.cfg.fill);
    for (const auto& stage : stages) {
      std::function<void()> fn;
      if (stage == "fill") {
        fn = [&] { prep::fill_depth(raw, prep::classify_holes(s.definition, a.cfg.fill.connectivity), a.cfg.fill); };
      } else if (stage == "augment") {
        fn = [&] { prep::augment_texture(s.intensity, s.definition, labels, a.cfg.fill); };
      } else if (stage == "downsample") {
        fn = [&] { prep::downsample(filled, a.cfg.scale, a.cfg.tau); };
      } else if (stage == "objectmap") {
        fn = [&] { scene::extract_object(filled, s.definition, s.intrinsics, a.cfg.plane); };
      } else {
        fn = [&] { prepare_sample(s, a.cfg); };
      }
      out.push_back(record_json(eval::time_stage(stage, w, h, a.reps, fn)));
    }
  }
  std::cout << out.dump() << std::endl;
  return 0;
}

int run_extrapolate(const BenchArgs& a) {
  std::vector<eval::TimeSample> samples;
  if (!a.from.empty()) {
    const json j = read_json_file(a.from);
    if (!j.is_array()) throw ValidationError(a.from + ": expected an array of records");
    for (const auto& r : j) {
      try {
        samples.push_back({r.at("w").get<double>() * r.at("h").get<double>(), r.at("seconds").get<double>()});
      } catch (const json::exception& e) {
        throw ValidationError(a.from + ": " + e.what());
      }
    }
  }
  for (const auto& p : a.points) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw ValidationError("expected WxH=SECONDS, got '" + p + "'");
    const auto [w, h] = parse_size(p.substr(0, eq));
    double t = 0.0;
    try {
      t = std::stod(p.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("bad time in '" + p + "'");
    }
    samples.push_back({static_cast<double>(w) * static_cast<double>(h), t});
  }
  const auto [w, h] = parse_size(a.at);
  const eval::TimeModel m = eval::fit_time_model(samples);
  const double n = static_cast<double>(w) * static_cast<double>(h);
  const auto& c = m.coefficients();
  std::cout << json{{"w", w},
                    {"h", h},
                    {"pixels", n},
                    {"seconds", m.predict(n)},
                    {"coefficients", {c[0], c[1], c[2]}},
                    {"points", samples.size()}}
                   .dump()
            << std::endl;
  return 0;
}

void add_pipeline_flags(CLI::App* app, PipelineConfig& cfg) {
  app->add_option("--scale", cfg.scale, "Down-sample factor s")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--tau", cfg.tau, "Block range threshold (mm)")->capture_default_str();
  app->add_option("--epsilon", cfg.plane.object_margin_epsilon, "Object margin above the plane (mm)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-map preparation and evaluation"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--count", sa.count, "Number of samples")->capture_default_str();
  synth_cmd->add_option("--out", sa.out, "Output directory")->required();
  synth_cmd->add_option("--seed", sa.seed, "Seed of the first sample; sample i uses seed + i")->capture_default_str();
  synth_cmd->add_option("--kind", sa.kind, "random, none, box, sphere or superellipsoid")->capture_default_str();
  synth_cmd->add_option("--width", sa.scene.width)->capture_default_str();
  synth_cmd->add_option("--height", sa.scene.height)->capture_default_str();
  synth_cmd->add_option("--focal", sa.scene.focal_px, "Focal length in pixels (0: 1.125 * width)")
      ->capture_default_str();
  synth_cmd->add_option("--ground-depth", sa.scene.ground_depth)->capture_default_str();
  synth_cmd->add_option("--tilt", sa.scene.ground_tilt_deg, "Ground tilt (degrees)")->capture_default_str();
  synth_cmd->add_option("--noise", sa.scene.noise_sigma, "Depth noise sigma (mm)")->capture_default_str();
  synth_cmd->add_option("--margin", sa.scene.border_margin, "Undefined border frame (pixels)")
      ->capture_default_str();
  synth_cmd->add_option("--projector", sa.projector, "Projector offset x y z (mm)")->expected(3);
  synth_cmd->add_option("--config", sa.config, "Scene JSON overriding flags");
  synth_cmd->add_option("--jobs", sa.jobs)->check(CLI::PositiveNumber)->capture_default_str();

  PrepareArgs pa;
  auto* prepare_cmd = app.add_subcommand("prepare", "Fill, down-sample and extract object maps");
  prepare_cmd->add_option("--in", pa.in, "Sample or corpus directory")->required();
  prepare_cmd->add_option("--out", pa.out, "Output directory (default: in place)");
  add_pipeline_flags(prepare_cmd, pa.cfg);
  prepare_cmd->add_option("--background", pa.background, "Depth for background holes (default: dataset max)");
  prepare_cmd->add_option("--background-intensity", pa.background_intensity,
                          "Intensity for background holes (default: dataset max)");
  prepare_cmd->add_option("--connectivity", pa.connectivity)->check(CLI::IsMember({4, 8}))->capture_default_str();
  prepare_cmd->add_option("--config", pa.config, "Pipeline JSON overriding flags");
  prepare_cmd->add_option("--jobs", pa.jobs)->check(CLI::PositiveNumber)->capture_default_str();

  EvaluateArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a prediction against a prepared sample");
  eval_cmd->add_option("--pred", ea.pred, "Predicted HR depth (PFM)")->required();
  eval_cmd->add_option("--sample", ea.sample, "Prepared sample directory")->required();
  eval_cmd->add_flag("--pcl", ea.pcl, "Point-cloud outlier removal and distances");
  eval_cmd->add_option("--k", ea.cfg.outliers.k_neighbors)->capture_default_str();
  eval_cmd->add_option("--ratio", ea.cfg.outliers.std_ratio)->capture_default_str();
  eval_cmd->add_option("--color-threshold", ea.cfg.color_threshold)->capture_default_str();
  eval_cmd->add_flag("--symmetric", ea.cfg.symmetric_distance, "Symmetric distances");
  eval_cmd->add_option("--ply", ea.ply, "Write the colored cloud");
  eval_cmd->add_option("--distances", ea.distances, "Write per-point distances (JSON)");
  eval_cmd->add_option("--config", ea.config, "Pipeline JSON overriding flags");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Time pipeline stages");
  bench_cmd->add_option("--in", ba.in, "Sample or corpus directory");
  bench_cmd->add_option("--stages", ba.stages)->capture_default_str();
  bench_cmd->add_option("--reps", ba.reps)->check(CLI::PositiveNumber)->capture_default_str();
  add_pipeline_flags(bench_cmd, ba.cfg);
  bench_cmd->add_option("--config", ba.config, "Pipeline JSON overriding flags");
  auto* extra_cmd = bench_cmd->add_subcommand("extrapolate", "Quadratic fit of time against pixel count");
  extra_cmd->add_option("--at", ba.at, "Target resolution WxH")->required();
  extra_cmd->add_option("--point", ba.points, "Known timing WxH=SECONDS (repeatable)");
  extra_cmd->add_option("--from", ba.from, "JSON records from a previous bench run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(e.what());
    return 2;
  }

  try {
    if (*synth_cmd) return run_synth(sa);
    if (*prepare_cmd) return run_prepare(pa);
    if (*eval_cmd) return run_evaluate(ea);
    if (*extra_cmd) return run_extrapolate(ba);
    if (*bench_cmd) return run_bench(ba);
  } catch (const std::exception& e) {
    print_error(e.what());
    return 1;
  }
  return 1;
}
