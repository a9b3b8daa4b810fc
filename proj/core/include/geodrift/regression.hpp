#pragma once

// Reproducibility harness: runs the pipeline ablations over seeded
// scenarios, checks accuracy bounds and the ablation ordering in aggregate
// (median over seeds), and renders reports and the configuration reference.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geodrift/metrics.hpp"
#include "geodrift/pipeline.hpp"
#include "geodrift/sim.hpp"

namespace geodrift {

enum class Ablation { kInitOnly, kInitPgo, kInitBa, kOurs };

const char* to_string(Ablation ablation);
// Accepts "init", "init-pgo", "init-ba", "ours". Throws DataError otherwise.
Ablation parse_ablation(std::string_view name);
// base with PGO and BA switched per the ablation.
PipelineConfig ablation_config(Ablation ablation, PipelineConfig base = PipelineConfig{});

struct AblationRun {
  Ablation ablation = Ablation::kOurs;
  bool initialized = false;
  Ate2d ate;
  std::vector<ScaleSample> trace;
  double in_band_fraction = 0.0;  // trace samples within the scale band
  // First keyframe whose scale factor leaves the band, if any.
  std::optional<KeyframeId> first_band_exit;
  std::size_t corrections = 0;
  std::size_t rejected_geo_images = 0;
  double seconds = 0.0;
  std::map<KeyframeId, SE3> keyframes;
};

struct ScaleBand {
  double low = 0.9;
  double high = 1.1;
};

// Runs one ablation over a generated scenario. ATE and trace are computed
// against the scenario's ground truth; an uninitialized run (too few
// correspondences) reports the tracker-frame poses.
AblationRun run_ablation(const Scenario& scenario, Ablation ablation,
                         const PipelineConfig& base = PipelineConfig{}, ScaleBand band = {});

struct RegressionBounds {
  double max_ours_ate = 0.0;        // m, ceiling on the median ATE of Ours
  double max_ours_sd = 0.0;         // m, ceiling on the median SD of Ours
  std::optional<double> min_init_ate;  // m, floor on the median ATE of INIT only
  std::optional<double> min_in_band;   // floor on the median in-band fraction of Ours
  bool check_ordering = true;       // Ours <= INIT+PGO <= INIT (medians)
};

struct RegressionCase {
  std::string name;
  ScenarioSpec spec;  // seed is replaced per run
  std::vector<std::uint64_t> seeds;
  RegressionBounds bounds;
  ScaleBand band;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::map<Ablation, AblationRun> runs;
};

struct RegressionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RegressionReport {
  std::string name;
  std::vector<SeedOutcome> seeds;
  std::map<Ablation, double> median_ate;
  std::map<Ablation, double> median_sd;
  std::map<Ablation, double> median_in_band;
  std::vector<RegressionCheck> checks;
  double seconds = 0.0;

  bool passed() const;
  std::string markdown() const;
  std::string json() const;
};

// The three ablations of the comparison: INIT only, INIT+PGO, Ours.
const std::vector<Ablation>& regression_ablations();

// Runs every seed under the given ablations (default: the three above).
RegressionReport run_regression(const RegressionCase& c,
                                const PipelineConfig& base = PipelineConfig{},
                                const std::vector<Ablation>& ablations = regression_ablations());

// Frozen cases: zero drift, city grid with anchors every 10 keyframes.
std::vector<RegressionCase> default_regression_cases();
// City grid with anchor intervals {10, 20, 30, 40, 50}, ordering only.
std::vector<RegressionCase> interval_sweep_cases(std::vector<std::uint64_t> seeds);

double median(std::vector<double> values);

// Every configuration key with its default and description, plus the fixed
// conventions of the implementation.
std::string config_reference_markdown();

}  // namespace geodrift
