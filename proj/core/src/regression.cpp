#include "geodrift/regression.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <thread>

#include <json.hpp>

#include "geodrift/config.hpp"
#include "geodrift/errors.hpp"

namespace geodrift {

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

const char* to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::kInitOnly:
      return "init";
    case Ablation::kInitPgo:
      return "init-pgo";
    case Ablation::kInitBa:
      return "init-ba";
    case Ablation::kOurs:
      return "ours";
  }
  return "unknown";
}

Ablation parse_ablation(std::string_view name) {
  for (Ablation a : {Ablation::kInitOnly, Ablation::kInitPgo, Ablation::kInitBa, Ablation::kOurs}) {
    if (name == to_string(a)) return a;
  }
  throw DataError("unknown ablation '" + std::string(name) +
                  "' (expected init, init-pgo, init-ba or ours)");
}

PipelineConfig ablation_config(Ablation ablation, PipelineConfig base) {
  base.enable_pgo = ablation == Ablation::kInitPgo || ablation == Ablation::kOurs;
  base.enable_ba = ablation == Ablation::kInitBa || ablation == Ablation::kOurs;
  return base;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AblationRun run_ablation(const Scenario& scenario, Ablation ablation, const PipelineConfig& base,
                         ScaleBand band) {
  const auto start = std::chrono::steady_clock::now();
  Pipeline pipeline(scenario.header, ablation_config(ablation, base));
  AblationRun run;
  run.ablation = ablation;
  for (const KeyframeRecord& record : scenario.stream) {
    const CorrectionEvent e = pipeline.ingest_keyframe(record);
    if (e.type == EventType::kCorrected) ++run.corrections;
    if (e.geo_rejected) ++run.rejected_geo_images;
  }
  run.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.initialized = pipeline.scene().initialized;
  run.keyframes = pipeline.scene().keyframes;
  const std::map<KeyframeId, SE3> truth = ground_truth_poses(scenario);
  run.ate = evaluate_ate2d(run.keyframes, truth);
  run.trace = scale_factor_trace(run.keyframes, truth);
  std::size_t inside = 0;
  for (const ScaleSample& s : run.trace) {
    const bool in = s.factor >= band.low && s.factor <= band.high;
    if (in) ++inside;
    if (!in && !run.first_band_exit) run.first_band_exit = s.id;
  }
  run.in_band_fraction = static_cast<double>(inside) / static_cast<double>(run.trace.size());
  return run;
}

const std::vector<Ablation>& regression_ablations() {
  static const std::vector<Ablation> a = {Ablation::kInitOnly, Ablation::kInitPgo, Ablation::kOurs};
  return a;
}

RegressionReport run_regression(const RegressionCase& c, const PipelineConfig& base,
                                const std::vector<Ablation>& ablations) {
  const auto start = std::chrono::steady_clock::now();
  RegressionReport report;
  report.name = c.name;
  // Seeds are independent (own scenario and scene); results keep seed order.
  report.seeds.resize(c.seeds.size());
  std::vector<std::exception_ptr> errors(c.seeds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < c.seeds.size(); i = next++) {
      try {
        ScenarioSpec spec = c.spec;
        spec.seed = c.seeds[i];
        const Scenario scenario = generate(spec);
        SeedOutcome& outcome = report.seeds[i];
        outcome.seed = c.seeds[i];
        for (Ablation a : ablations) outcome.runs[a] = run_ablation(scenario, a, base, c.band);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), c.seeds.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (Ablation a : ablations) {
    std::vector<double> ate, sd, band;
    for (const SeedOutcome& s : report.seeds) {
      const AblationRun& r = s.runs.at(a);
      ate.push_back(r.ate.average);
      sd.push_back(r.ate.standard_deviation);
      band.push_back(r.in_band_fraction);
    }
    report.median_ate[a] = median(ate);
    report.median_sd[a] = median(sd);
    report.median_in_band[a] = median(band);
  }

  auto has = [&](Ablation a) { return report.median_ate.contains(a); };
  const RegressionBounds& b = c.bounds;
  if (has(Ablation::kOurs)) {
    const double ate = report.median_ate.at(Ablation::kOurs);
    const double sd = report.median_sd.at(Ablation::kOurs);
    report.checks.push_back({"ours ATE ceiling", ate <= b.max_ours_ate,
                             "median Ave " + fixed(ate, 3) + " m <= " + fixed(b.max_ours_ate, 3)});
    report.checks.push_back({"ours SD ceiling", sd <= b.max_ours_sd,
                             "median SD " + fixed(sd, 3) + " m <= " + fixed(b.max_ours_sd, 3)});
    if (b.min_in_band) {
      const double f = report.median_in_band.at(Ablation::kOurs);
      report.checks.push_back({"ours scale band", f >= *b.min_in_band,
                               "median in-band fraction " + fixed(f, 3) +
                                   " >= " + fixed(*b.min_in_band, 3)});
    }
  }
  if (b.min_init_ate && has(Ablation::kInitOnly)) {
    const double ate = report.median_ate.at(Ablation::kInitOnly);
    report.checks.push_back({"init-only ATE floor", ate >= *b.min_init_ate,
                             "median Ave " + fixed(ate, 3) + " m >= " + fixed(*b.min_init_ate, 3)});
  }
  if (b.check_ordering && has(Ablation::kOurs) && has(Ablation::kInitPgo) &&
      has(Ablation::kInitOnly)) {
    const double ours = report.median_ate.at(Ablation::kOurs);
    const double pgo = report.median_ate.at(Ablation::kInitPgo);
    const double init = report.median_ate.at(Ablation::kInitOnly);
    report.checks.push_back({"ablation ordering", ours <= pgo && pgo <= init,
                             "ours " + fixed(ours, 3) + " <= init-pgo " + fixed(pgo, 3) +
                                 " <= init " + fixed(init, 3)});
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

bool RegressionReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const RegressionCheck& c) { return c.passed; });
}

std::string RegressionReport::markdown() const {
  std::string out = "## " + name + "\n\n";
  out += "| Ablation | median Ave [m] | median SD [m] | median in-band |\n";
  out += "|---|---:|---:|---:|\n";
  for (const auto& [a, ate] : median_ate) {
    out += std::string("| ") + to_string(a) + " | " + fixed(ate) + " | " + fixed(median_sd.at(a)) +
           " | " + fixed(median_in_band.at(a), 3) + " |\n";
  }
  out += "\n| Seed |";
  std::string rule = "|---|";
  for (const auto& [a, ate] : median_ate) {
    out += std::string(" ") + to_string(a) + " Ave |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";
  for (const SeedOutcome& s : seeds) {
    out += "| " + std::to_string(s.seed) + " |";
    for (const auto& [a, run] : s.runs) out += " " + fixed(run.ate.average) + " |";
    out += "\n";
  }
  out += "\n";
  for (const RegressionCheck& c : checks) {
    out += std::string("- ") + (c.passed ? "PASS" : "FAIL") + " " + c.name + ": " + c.detail + "\n";
  }
  out += "\nRuntime " + fixed(seconds, 1) + " s.\n";
  return out;
}

std::string RegressionReport::json() const {
  using nlohmann::json;
  json j = json::object();
  j["format"] = "geodrift-regression";
  j["version"] = 1;
  j["name"] = name;
  j["passed"] = passed();
  j["seconds"] = seconds;
  json medians = json::object();
  for (const auto& [a, ate] : median_ate) {
    medians[to_string(a)] = {{"ate", ate}, {"sd", median_sd.at(a)}, {"in_band", median_in_band.at(a)}};
  }
  j["medians"] = medians;
  json runs = json::array();
  for (const SeedOutcome& s : seeds) {
    json r = json::object();
    r["seed"] = s.seed;
    for (const auto& [a, run] : s.runs) {
      r[to_string(a)] = {{"ate", run.ate.average},
                         {"sd", run.ate.standard_deviation},
                         {"in_band", run.in_band_fraction},
                         {"initialized", run.initialized},
                         {"corrections", run.corrections},
                         {"rejected_geo_images", run.rejected_geo_images},
                         {"seconds", run.seconds}};
    }
    runs.push_back(r);
  }
  j["seeds"] = runs;
  json checks_json = json::array();
  for (const RegressionCheck& c : checks) {
    checks_json.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  j["checks"] = checks_json;
  return j.dump(2) + "\n";
}

std::vector<RegressionCase> default_regression_cases() {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
  std::vector<RegressionCase> cases;

  RegressionCase zero;
  zero.name = "zero-drift";
  zero.spec = canned_scenario("zero-drift");
  zero.seeds = {1, 2, 3};
  // Noise-free: only the solver tolerances separate the ablations.
  zero.bounds.max_ours_ate = 0.01;
  zero.bounds.max_ours_sd = 0.01;
  zero.bounds.check_ordering = false;
  cases.push_back(zero);

  // Medians measured when the case was frozen (20 seeds): Ours Ave 1.06 m,
  // SD 0.73 m, in-band 0.88; INIT+PGO Ave 0.96 m; INIT only Ave 25.8 m.
  // The Ave ceiling, INIT floor and band floor are the fixed acceptance
  // targets; the SD ceiling is about twice the measured median.
  RegressionCase grid;
  grid.name = "city-grid, anchors every 10";
  grid.spec = canned_scenario("city-grid");
  grid.seeds = seeds;
  grid.bounds.max_ours_ate = 2.0;
  grid.bounds.max_ours_sd = 1.5;
  grid.bounds.min_init_ate = 15.0;
  grid.bounds.min_in_band = 0.95;
  cases.push_back(grid);
  return cases;
}

std::vector<RegressionCase> interval_sweep_cases(std::vector<std::uint64_t> seeds) {
  std::vector<RegressionCase> cases;
  for (int interval : {10, 20, 30, 40, 50}) {
    RegressionCase c;
    c.name = "city-grid, anchors every " + std::to_string(interval);
    c.spec = canned_scenario("city-grid");
    c.spec.anchor_interval = interval;
    c.seeds = seeds;
    c.bounds.max_ours_ate = 1e9;
    c.bounds.max_ours_sd = 1e9;
    cases.push_back(c);
  }
  return cases;
}

std::string config_reference_markdown() {
  std::string out =
      "# Configuration reference\n\n"
      "Generated by `geodrift config-reference`; do not edit by hand.\n\n"
      "Configuration files are flat `key = value` text; `#` starts a comment. Unknown keys and "
      "malformed values are rejected with the offending line and column.\n\n"
      "## Pipeline (`geodrift correct --config`)\n\n"
      "| Key | Default | Description |\n|---|---|---|\n";
  const PipelineConfig pipeline;
  for (const auto& k : pipeline_config_keys()) {
    out += "| `" + k.name + "` | `" + k.get(pipeline) + "` | " + k.description + " |\n";
  }
  out +=
      "\n## Scenario (`geodrift simulate --config`)\n\n"
      "| Key | Default | Description |\n|---|---|---|\n";
  const ScenarioSpec spec;
  for (const auto& k : scenario_config_keys()) {
    out += "| `" + k.name + "` | `" + k.get(spec) + "` | " + k.description + " |\n";
  }
  out +=
      "\n## Fixed conventions\n\n"
      "| Setting | Value |\n|---|---|\n"
      "| Rotation storage | unit quaternion, renormalized after composition |\n"
      "| Small-angle / small-scale series | below 1e-6 in rotation angle and log-scale |\n"
      "| Stored poses | world-from-camera; the translation is the camera centre |\n"
      "| World frame | x east, y up (height), z south, origin at a local UTM point |\n"
      "| Camera frame | x right, y down, z forward |\n"
      "| Sim(3) retraction | left multiplication, S <- exp(d) S |\n"
      "| Relative-pose snapshot | dS_ij = S_j S_i^-1 taken before each optimization, so "
      "relative residuals start at zero |\n"
      "| Levenberg-Marquardt schedule | damping divided by 3 after an accepted step, "
      "multiplied by 2 after a rejected one |\n"
      "| Normal equations | dense Cholesky below `solver_dense_threshold` tangent dimensions, "
      "sparse Cholesky above |\n"
      "| Initialization minimal sample | 2 correspondences, horizontal components only; the "
      "refinement uses the full 3D residual |\n"
      "| Initialization plane | principal plane of keyframe positions; collinear trajectories "
      "use the mean camera up direction |\n"
      "| Bundle-adjustment penalty set | geo images of the window whose keyframe is in the "
      "window |\n"
      "| Bundle-adjustment residuals | observations of window points by window keyframes |\n"
      "| Geo-image localization | Levenberg-Marquardt from the keyframe pose, no minimal "
      "solver; rejected below the inlier ratio |\n"
      "| Keyframe stream | JSON lines, header record then one record per keyframe |\n"
      "| Scale-factor trace | centred median over 5 steps, shrinking at the ends |\n"
      "| ATE | mean and population SD of horizontal (xz) distances |\n"
      "| Simulated drift | per-step multipliers on relative motion |\n"
      "| Simulated map points | 5-30 m lateral, 0-10 m above ground, tracks of up to "
      "`max_track_length` consecutive keyframes |\n"
      "| Ablation ordering | asserted on medians over seeds, not per seed |\n";
  return out;
}

}  // namespace geodrift
