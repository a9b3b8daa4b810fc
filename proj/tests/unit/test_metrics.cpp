#include <cmath>

#include <gtest/gtest.h>

#include "geodrift/errors.hpp"
#include "geodrift/metrics.hpp"

namespace geodrift {
namespace {

SE3 at(double x, double y, double z) { return SE3(Rot3(), Vector3(x, y, z)); }

TEST(Ate2dTest, HandComputedAverageAndPopulationSd) {
  const std::map<KeyframeId, SE3> truth{{KeyframeId(0), at(0, 0, 0)},
                                        {KeyframeId(1), at(10, 0, 0)},
                                        {KeyframeId(2), at(20, 0, 0)}};
  // Errors 3 (xz), 0, 5; the height difference is ignored.
  const std::map<KeyframeId, SE3> estimate{{KeyframeId(0), at(0, 7, 3)},
                                           {KeyframeId(1), at(10, -2, 0)},
                                           {KeyframeId(2), at(23, 0, 4)}};
  const Ate2d ate = evaluate_ate2d(estimate, truth);
  EXPECT_EQ(ate.count, 3u);
  EXPECT_NEAR(ate.average, 8.0 / 3.0, 1e-12);
  const double mean = 8.0 / 3.0;
  const double var = ((3 - mean) * (3 - mean) + mean * mean + (5 - mean) * (5 - mean)) / 3.0;
  EXPECT_NEAR(ate.standard_deviation, std::sqrt(var), 1e-12);
  ASSERT_EQ(ate.per_keyframe.size(), 3u);
  EXPECT_NEAR(ate.per_keyframe[2].error, 5.0, 1e-12);
}

TEST(Ate2dTest, UsesOnlySharedKeyframes) {
  const std::map<KeyframeId, SE3> truth{{KeyframeId(0), at(0, 0, 0)}, {KeyframeId(1), at(1, 0, 0)}};
  const std::map<KeyframeId, SE3> estimate{{KeyframeId(1), at(1, 0, 2)}, {KeyframeId(5), at(9, 9, 9)}};
  const Ate2d ate = evaluate_ate2d(estimate, truth);
  EXPECT_EQ(ate.count, 1u);
  EXPECT_NEAR(ate.average, 2.0, 1e-12);
  EXPECT_NEAR(ate.standard_deviation, 0.0, 1e-12);
}

TEST(Ate2dTest, NoSharedKeyframesThrows) {
  const std::map<KeyframeId, SE3> truth{{KeyframeId(0), at(0, 0, 0)}};
  const std::map<KeyframeId, SE3> estimate{{KeyframeId(1), at(0, 0, 0)}};
  EXPECT_THROW(evaluate_ate2d(estimate, truth), DataError);
}

TEST(ScaleTraceTest, ConstantScaleIsFlat) {
  std::map<KeyframeId, SE3> truth;
  std::map<KeyframeId, SE3> estimate;
  for (int k = 0; k < 20; ++k) {
    truth[KeyframeId(k)] = at(2.0 * k, 0, 0);
    estimate[KeyframeId(k)] = at(3.0 * k, 0, 0);
  }
  const auto trace = scale_factor_trace(estimate, truth);
  ASSERT_EQ(trace.size(), 19u);
  for (const ScaleSample& s : trace) {
    EXPECT_NEAR(s.raw, 1.5, 1e-12);
    EXPECT_NEAR(s.factor, 1.5, 1e-12);
  }
  EXPECT_EQ(trace.front().id, KeyframeId(1));
}

TEST(ScaleTraceTest, MedianSuppressesASingleSpike) {
  std::map<KeyframeId, SE3> truth;
  std::map<KeyframeId, SE3> estimate;
  double x = 0.0;
  for (int k = 0; k < 11; ++k) {
    truth[KeyframeId(k)] = at(k, 0, 0);
    estimate[KeyframeId(k)] = at(x, 0, 0);
    x += (k == 4) ? 5.0 : 1.0;
  }
  const auto trace = scale_factor_trace(estimate, truth);
  // Step 4 -> 5 is the spike.
  EXPECT_NEAR(trace[4].raw, 5.0, 1e-12);
  EXPECT_NEAR(trace[4].factor, 1.0, 1e-12);
  const auto raw_only = scale_factor_trace(estimate, truth, 0);
  EXPECT_NEAR(raw_only[4].factor, 5.0, 1e-12);
}

}  // namespace
}  // namespace geodrift
