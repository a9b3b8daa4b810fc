#pragma once

// Trajectory accuracy in the ground plane and the scale-factor trace.

#include <map>
#include <vector>

#include "geodrift/ids.hpp"
#include "geodrift/manifold.hpp"

namespace geodrift {

struct KeyframeError {
  KeyframeId id;
  double error = 0.0;  // m, xz-plane distance
};

struct Ate2d {
  double average = 0.0;             // m
  double standard_deviation = 0.0;  // m, population
  std::size_t count = 0;
  std::vector<KeyframeError> per_keyframe;
};

// Over keyframes present in both maps. Throws DataError when none overlap.
Ate2d evaluate_ate2d(const std::map<KeyframeId, SE3>& estimate,
                     const std::map<KeyframeId, SE3>& ground_truth);

struct ScaleSample {
  KeyframeId id;
  double raw = 0.0;     // |estimated step| / |true step|
  double factor = 0.0;  // centered median over up to 5 steps
};

// One sample per keyframe whose predecessor (in id order) is present in
// both maps and whose true step is at least 1e-6 m. The median window
// shrinks symmetrically at the ends of the series. Throws DataError when no
// step qualifies.
std::vector<ScaleSample> scale_factor_trace(const std::map<KeyframeId, SE3>& estimate,
                                            const std::map<KeyframeId, SE3>& ground_truth,
                                            int median_radius = 2);

}  // namespace geodrift
