// geodrift command line: simulate, correct, evaluate, trace-scale,
// regression, config-reference.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 regression checks
// failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geodrift/config.hpp"
#include "geodrift/errors.hpp"
#include "geodrift/io.hpp"
#include "geodrift/metrics.hpp"
#include "geodrift/pipeline.hpp"
#include "geodrift/regression.hpp"
#include "geodrift/sim.hpp"

namespace fs = std::filesystem;
using namespace geodrift;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitChecksFailed = 3;

// Merges --set key=value overrides into a parsed config file.
KeyValueFile with_overrides(KeyValueFile file, const std::vector<std::string>& overrides) {
  const KeyValueFile extra = parse_key_values(
      [&] {
        std::string text;
        for (const std::string& o : overrides) text += o + "\n";
        return text;
      }(),
      "--set");
  for (const auto& [key, entry] : extra.entries) file.entries[key] = entry;
  return file;
}

KeyValueFile config_file(const std::string& path) {
  if (path.empty()) return KeyValueFile{"", {}};
  return read_key_values(path);
}

std::string ate_line(const std::string& label, const Ate2d& ate, std::size_t width) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  Ave %.2f SD %.2f  (%zu keyframes)", static_cast<int>(width),
                label.c_str(), ate.average, ate.standard_deviation, ate.count);
  return buf;
}

struct SimulateArgs {
  std::string scenario = "city-grid";
  std::uint64_t seed = 1;
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  const ScenarioSpec base = canned_scenario(a.scenario, a.seed);
  KeyValueFile file = with_overrides(config_file(a.config), a.overrides);
  ScenarioSpec spec = scenario_spec_from(file, base);
  if (!file.entries.contains("seed")) spec.seed = a.seed;
  const Scenario scenario = generate(spec);
  const fs::path dir(a.out);
  save_stream(dir / "stream.jsonl", KeyframeStream{scenario.header, scenario.stream});
  save_scene(dir / "ground_truth.json", scenario.ground_truth);
  save_trajectory(dir / "ground_truth.txt", trajectory_from_poses(scenario.ground_truth.keyframes),
                  TrajectoryFormat::kKitti);
  save_trajectory(dir / "tracker.txt", trajectory_from_poses(scenario.drifted.keyframes),
                  TrajectoryFormat::kKitti);
  write_file_atomic(dir / "scenario.cfg", to_config_text(spec));
  std::cout << "wrote scenario '" << a.scenario << "' (seed " << spec.seed << ", "
            << spec.keyframes << " keyframes, " << scenario.true_geo_poses.size()
            << " geo-tagged images) to " << dir.string() << "\n";
  return 0;
}

struct CorrectArgs {
  std::string stream;
  std::string scene;
  std::string config;
  std::vector<std::string> overrides;
  std::string ablation = "ours";
  std::string trajectory;
  std::string scene_out;
  std::string events;
  std::string ground_truth;
};

int run_correct(const CorrectArgs& a) {
  const KeyframeStream stream = load_stream(a.stream);
  const KeyValueFile file = with_overrides(config_file(a.config), a.overrides);
  const PipelineConfig config =
      ablation_config(parse_ablation(a.ablation), pipeline_config_from(file));
  Scene initial;
  if (!a.scene.empty()) initial = load_scene(a.scene);
  Pipeline pipeline(stream.header, config, std::move(initial));

  std::string log;
  std::size_t counts[4] = {0, 0, 0, 0};
  std::size_t rejected = 0;
  for (const KeyframeRecord& r : stream.records) {
    const CorrectionEvent e = pipeline.ingest_keyframe(r);
    ++counts[static_cast<int>(e.type)];
    if (e.geo_rejected) ++rejected;
    if (e.type != EventType::kNone || e.geo_rejected) log += event_to_json(e) + "\n";
  }
  const Scene& scene = pipeline.scene();
  if (!a.events.empty()) write_file_atomic(a.events, log);
  if (!a.trajectory.empty()) {
    save_trajectory(a.trajectory, trajectory_from_poses(scene.keyframes),
                    trajectory_format_for(a.trajectory));
  }
  if (!a.scene_out.empty()) save_scene(a.scene_out, scene);

  std::cout << stream.records.size() << " keyframes, " << scene.geo_correspondences.size()
            << " correspondences (" << rejected << " geo images rejected), "
            << (scene.initialized ? "initialized" : "not initialized") << ", "
            << counts[static_cast<int>(EventType::kCorrected)] << " corrections\n";
  if (!a.ground_truth.empty()) {
    const Ate2d ate = evaluate_ate2d(scene.keyframes, load_poses(a.ground_truth));
    std::cout << ate_line(a.ablation, ate, a.ablation.size()) << "\n";
  }
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> estimates;
  std::vector<std::string> labels;
  std::string ground_truth;
  std::string csv;
};

int run_evaluate(const EvaluateArgs& a) {
  if (!a.labels.empty() && a.labels.size() != a.estimates.size()) {
    throw CLI::ValidationError("--label", "give one label per --estimate");
  }
  const auto truth = load_poses(a.ground_truth);
  std::vector<std::string> labels = a.labels;
  if (labels.empty()) {
    for (const std::string& e : a.estimates) labels.push_back(fs::path(e).stem().string());
  }
  std::size_t width = 6;
  for (const std::string& l : labels) width = std::max(width, l.size());
  std::cout << std::string(width, ' ') << "  2D ATE [m]\n";
  for (std::size_t i = 0; i < a.estimates.size(); ++i) {
    const Ate2d ate = evaluate_ate2d(load_poses(a.estimates[i]), truth);
    std::cout << ate_line(labels[i], ate, width) << "\n";
    if (!a.csv.empty()) {
      fs::path out(a.csv);
      if (a.estimates.size() > 1) {
        out = out.parent_path() /
              (out.stem().string() + "_" + labels[i] + out.extension().string());
      }
      write_file_atomic(out, ate_csv(ate));
    }
  }
  return 0;
}

struct TraceArgs {
  std::string estimate;
  std::string ground_truth;
  std::string out;
  int radius = 2;
  double low = 0.9;
  double high = 1.1;
};

int run_trace(const TraceArgs& a) {
  const auto trace = scale_factor_trace(load_poses(a.estimate), load_poses(a.ground_truth), a.radius);
  std::size_t inside = 0;
  for (const ScaleSample& s : trace) inside += s.factor >= a.low && s.factor <= a.high ? 1 : 0;
  if (!a.out.empty()) write_file_atomic(a.out, scale_trace_csv(trace));
  std::printf("%zu samples, %.1f%% within [%.2f, %.2f]\n", trace.size(),
              100.0 * static_cast<double>(inside) / static_cast<double>(trace.size()), a.low,
              a.high);
  return 0;
}

struct RegressionArgs {
  std::string which = "default";
  int seeds = 20;
  std::string config;
  std::string markdown;
  std::string json;
};

int run_regression_cmd(const RegressionArgs& a) {
  const PipelineConfig base = pipeline_config_from(config_file(a.config));
  std::vector<std::uint64_t> seeds;
  for (int s = 1; s <= a.seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  std::vector<RegressionCase> cases;
  if (a.which == "default") {
    cases = default_regression_cases();
    for (RegressionCase& c : cases) {
      if (c.seeds.size() > seeds.size()) c.seeds = seeds;
    }
  } else if (a.which == "sweep") {
    cases = interval_sweep_cases(seeds);
  } else {
    throw CLI::ValidationError("--cases", "expected default or sweep");
  }
  std::string md = "# Regression report\n\n";
  std::string js = "[\n";
  bool passed = true;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const RegressionReport report = run_regression(cases[i], base);
    passed = passed && report.passed();
    md += report.markdown() + "\n";
    js += report.json() + (i + 1 < cases.size() ? ",\n" : "");
    std::cout << (report.passed() ? "PASS " : "FAIL ") << report.name << " (" << report.seconds
              << " s)\n";
    for (const RegressionCheck& c : report.checks) {
      std::cout << "  " << (c.passed ? "pass " : "FAIL ") << c.name << ": " << c.detail << "\n";
    }
  }
  js += "]\n";
  if (!a.markdown.empty()) write_file_atomic(a.markdown, md);
  if (!a.json.empty()) write_file_atomic(a.json, js);
  return passed ? 0 : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geo-registration and scale-drift correction of monocular maps"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic scenario");
  simulate->add_option("--scenario", sim.scenario, "Canned scenario name")
      ->check(CLI::IsMember(canned_scenario_names()))
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--config", sim.config, "Scenario config file")->check(CLI::ExistingFile);
  simulate->add_option("--set", sim.overrides, "Override a scenario key (key=value)");
  simulate->add_option("--out", sim.out, "Output directory")->required();

  CorrectArgs cor;
  CLI::App* correct = app.add_subcommand("correct", "Run the correction pipeline over a stream");
  correct->add_option("--stream", cor.stream, "Keyframe stream (JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);
  correct->add_option("--scene", cor.scene, "Scene to continue from")->check(CLI::ExistingFile);
  correct->add_option("--config", cor.config, "Pipeline config file")->check(CLI::ExistingFile);
  correct->add_option("--set", cor.overrides, "Override a pipeline key (key=value)");
  correct->add_option("--ablation", cor.ablation, "init, init-pgo, init-ba or ours")
      ->check(CLI::IsMember({"init", "init-pgo", "init-ba", "ours"}))
      ->capture_default_str();
  correct->add_option("--trajectory", cor.trajectory,
                      "Corrected keyframe trajectory (.tum for TUM, otherwise KITTI)");
  correct->add_option("--scene-out", cor.scene_out, "Corrected scene (JSON)");
  correct->add_option("--events", cor.events, "Event log (JSON lines)");
  correct->add_option("--ground-truth", cor.ground_truth, "Ground truth to report the ATE against")
      ->check(CLI::ExistingFile);

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "2D ATE of trajectories against ground truth");
  evaluate->add_option("--estimate", ev.estimates, "Estimated trajectory or scene (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--label", ev.labels, "Row label per estimate");
  evaluate->add_option("--ground-truth", ev.ground_truth, "Ground-truth trajectory or scene")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--csv", ev.csv, "Per-keyframe error CSV");

  TraceArgs tr;
  CLI::App* trace = app.add_subcommand("trace-scale", "Scale-factor trace against ground truth");
  trace->add_option("--estimate", tr.estimate, "Estimated trajectory or scene")
      ->required()
      ->check(CLI::ExistingFile);
  trace->add_option("--ground-truth", tr.ground_truth, "Ground-truth trajectory or scene")
      ->required()
      ->check(CLI::ExistingFile);
  trace->add_option("--out", tr.out, "Scale-factor CSV");
  trace->add_option("--radius", tr.radius, "Median window radius in steps")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  trace->add_option("--low", tr.low, "Lower band edge")->capture_default_str();
  trace->add_option("--high", tr.high, "Upper band edge")->capture_default_str();

  RegressionArgs reg;
  CLI::App* regression = app.add_subcommand("regression", "Run the frozen regression cases");
  regression->add_option("--cases", reg.which, "default or sweep")->capture_default_str();
  regression->add_option("--seeds", reg.seeds, "Seeds per case (1..N)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  regression->add_option("--config", reg.config, "Pipeline config file")->check(CLI::ExistingFile);
  regression->add_option("--markdown", reg.markdown, "Markdown report");
  regression->add_option("--json", reg.json, "JSON summary");

  std::string reference_out;
  CLI::App* reference =
      app.add_subcommand("config-reference", "Write the configuration reference (markdown)");
  reference->add_option("--out", reference_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    configure_logging();
    if (*simulate) return run_simulate(sim);
    if (*correct) return run_correct(cor);
    if (*evaluate) return run_evaluate(ev);
    if (*trace) return run_trace(tr);
    if (*regression) return run_regression_cmd(reg);
    if (*reference) {
      const std::string md = config_reference_markdown();
      if (reference_out.empty()) {
        std::cout << md;
      } else {
        write_file_atomic(reference_out, md);
      }
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
