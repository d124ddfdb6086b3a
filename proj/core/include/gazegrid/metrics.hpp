#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gazegrid/saliency.hpp"

namespace gazegrid {

/// Resolution both maps are resampled to before pixel-level metrics.
inline constexpr std::size_t kMetricWidth = 64;
inline constexpr std::size_t kMetricHeight = 36;
inline constexpr double kKlEpsilon = 1e-7;

struct MetricSize {
  std::size_t width = kMetricWidth;
  std::size_t height = kMetricHeight;
};

struct PixelMetrics {
  double kl_divergence = 0.0;
  double correlation = 0.0;
};

/// D_KL(gt || pred) after resizing, adding 1e-7 per pixel and renormalizing.
double kl_divergence(const SaliencyMap& gt, const SaliencyMap& pred, MetricSize size = {});

/// Pearson correlation over the resized pixel pairs. Throws ConstantMap.
double pearson_cc(const SaliencyMap& gt, const SaliencyMap& pred, MetricSize size = {});

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const std::uint8_t> labels,
                          std::span<const std::uint8_t> decisions);

struct ClassificationScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

/// Zero denominators give 0 for precision, recall and f1.
ClassificationScores prf_accuracy(const ConfusionCounts& counts);

struct ObjectMetrics {
  ConfusionCounts counts;
  ClassificationScores scores;
  double auc = 0.0;
};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Throws DegenerateLabels without both classes.
double auc(std::span<const std::uint8_t> labels, std::span<const double> scores);

/// One operating point: a box is positive iff its score >= threshold.
struct RocPoint {
  double threshold;
  double tpr;
  double fpr;
};

/// Points in order of decreasing threshold, from (0, 0) at threshold +inf
/// through every distinct score down to (1, 1).
struct RocCurve {
  std::vector<RocPoint> points;

  double area() const;  // trapezoidal
};

RocCurve roc_curve(std::span<const std::uint8_t> labels, std::span<const double> scores);

enum class ThresholdRule {
  GeometricMean,     // argmax sqrt(TPR * (1 - FPR))
  DistanceToCorner,  // argmin distance to (FPR 0, TPR 1)
};

struct ThresholdChoice {
  double threshold;
  double objective;  // the G-mean, or minus the distance
  RocPoint point;
};

/// Ties go to the larger threshold. The +inf starting point is never chosen.
ThresholdChoice optimal_threshold(const RocCurve& curve,
                                  ThresholdRule rule = ThresholdRule::GeometricMean);

}  // namespace gazegrid
