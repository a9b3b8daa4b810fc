#include "geodrift/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "geodrift/errors.hpp"

namespace geodrift {

Ate2d evaluate_ate2d(const std::map<KeyframeId, SE3>& estimate,
                     const std::map<KeyframeId, SE3>& ground_truth) {
  Ate2d out;
  for (const auto& [id, pose] : estimate) {
    const auto it = ground_truth.find(id);
    if (it == ground_truth.end()) continue;
    const Vector3 d = pose.translation() - it->second.translation();
    out.per_keyframe.push_back({id, std::hypot(d.x(), d.z())});
  }
  if (out.per_keyframe.empty()) {
    throw DataError("evaluate: estimate and ground truth share no keyframe ids");
  }
  out.count = out.per_keyframe.size();
  double sum = 0.0;
  for (const KeyframeError& e : out.per_keyframe) sum += e.error;
  out.average = sum / static_cast<double>(out.count);
  double var = 0.0;
  for (const KeyframeError& e : out.per_keyframe) var += (e.error - out.average) * (e.error - out.average);
  out.standard_deviation = std::sqrt(var / static_cast<double>(out.count));
  return out;
}

std::vector<ScaleSample> scale_factor_trace(const std::map<KeyframeId, SE3>& estimate,
                                            const std::map<KeyframeId, SE3>& ground_truth,
                                            int median_radius) {
  if (median_radius < 0) throw DataError("scale trace: median radius must be >= 0");
  std::vector<ScaleSample> out;
  for (auto it = std::next(estimate.begin(), estimate.empty() ? 0 : 1); it != estimate.end(); ++it) {
    const auto prev = std::prev(it);
    const auto g1 = ground_truth.find(it->first);
    const auto g0 = ground_truth.find(prev->first);
    if (g1 == ground_truth.end() || g0 == ground_truth.end()) continue;
    const double truth = (g1->second.translation() - g0->second.translation()).norm();
    if (truth < 1e-6) continue;
    const double est = (it->second.translation() - prev->second.translation()).norm();
    out.push_back({it->first, est / truth, 0.0});
  }
  if (out.empty()) throw DataError("scale trace: no usable keyframe steps");
  const auto n = static_cast<std::ptrdiff_t>(out.size());
  std::vector<double> window;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t r = std::min<std::ptrdiff_t>({median_radius, i, n - 1 - i});
    window.clear();
    for (std::ptrdiff_t j = i - r; j <= i + r; ++j) window.push_back(out[static_cast<std::size_t>(j)].raw);
    std::nth_element(window.begin(), window.begin() + r, window.end());
    out[static_cast<std::size_t>(i)].factor = window[static_cast<std::size_t>(r)];
  }
  return out;
}

}  // namespace geodrift
