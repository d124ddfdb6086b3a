#include "gazegrid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gazegrid/error.hpp"

namespace gazegrid {

namespace {

void check_non_degenerate(const SaliencyMap& map, const char* which) {
  if (!(map.max() > 0.0)) {
    throw Error(ErrorCode::AllZeroMap, std::string(which) + " map is all zero");
  }
}

std::vector<double> eps_distribution(const SaliencyMap& map, MetricSize size) {
  const SaliencyMap resized = resize_bilinear(map, size.width, size.height);
  std::vector<double> p(resized.values().begin(), resized.values().end());
  double total = 0.0;
  for (double& v : p) {
    v += kKlEpsilon;
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::LengthMismatch, "label and score lengths differ");
}

struct ClassTotals {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassTotals class_totals(std::span<const std::uint8_t> labels) {
  ClassTotals t;
  for (auto l : labels) (l ? t.positives : t.negatives) += 1;
  if (t.positives == 0 || t.negatives == 0) {
    throw Error(ErrorCode::DegenerateLabels, "need at least one positive and one negative label");
  }
  return t;
}

}  // namespace

double kl_divergence(const SaliencyMap& gt, const SaliencyMap& pred, MetricSize size) {
  check_non_degenerate(gt, "ground-truth");
  check_non_degenerate(pred, "predicted");
  const auto p = eps_distribution(gt, size);
  const auto q = eps_distribution(pred, size);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(kl, 0.0);
}

double pearson_cc(const SaliencyMap& gt, const SaliencyMap& pred, MetricSize size) {
  const SaliencyMap a = resize_bilinear(gt, size.width, size.height);
  const SaliencyMap b = resize_bilinear(pred, size.width, size.height);
  const auto av = a.values();
  const auto bv = b.values();
  const auto n = static_cast<double>(av.size());
  const double mean_a = std::accumulate(av.begin(), av.end(), 0.0) / n;
  const double mean_b = std::accumulate(bv.begin(), bv.end(), 0.0) / n;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double da = av[i] - mean_a;
    const double db = bv[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (!(var_a > 0.0) || !(var_b > 0.0)) {
    throw Error(ErrorCode::ConstantMap, "correlation undefined for a constant map");
  }
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(std::span<const std::uint8_t> labels,
                          std::span<const std::uint8_t> decisions) {
  check_lengths(labels.size(), decisions.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] != 0;
    const bool said = decisions[i] != 0;
    if (truth && said) ++c.tp;
    else if (!truth && said) ++c.fp;
    else if (!truth) ++c.tn;
    else ++c.fn;
  }
  return c;
}

ClassificationScores prf_accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorCode::EmptyInput, "no boxes were evaluated");
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  ClassificationScores s;
  s.precision = ratio(c.tp, c.tp + c.fp);
  s.recall = ratio(c.tp, c.tp + c.fn);
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  s.accuracy = ratio(c.tp + c.tn, c.total());
  return s;
}

double auc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  check_lengths(labels.size(), scores.size());
  const ClassTotals totals = class_totals(labels);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney U with mid-ranks for ties. Ranks are 1-based; 2x rank keeps
  // the tie midpoints integral.
  double twice_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double twice_mid_rank = static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) twice_rank_sum += twice_mid_rank;
    }
    i = j;
  }
  const auto p = static_cast<double>(totals.positives);
  const auto n = static_cast<double>(totals.negatives);
  const double u = twice_rank_sum / 2.0 - p * (p + 1.0) / 2.0;
  return u / (p * n);
}

double RocCurve::area() const {
  double a = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    a += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return a;
}

RocCurve roc_curve(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  check_lengths(labels.size(), scores.size());
  const ClassTotals totals = class_totals(labels);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  const auto p = static_cast<double>(totals.positives);
  const auto n = static_cast<double>(totals.negatives);
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({s, static_cast<double>(tp) / p, static_cast<double>(fp) / n});
  }
  return curve;
}

ThresholdChoice optimal_threshold(const RocCurve& curve, ThresholdRule rule) {
  auto objective = [rule](const RocPoint& pt) {
    if (rule == ThresholdRule::GeometricMean) return std::sqrt(pt.tpr * (1.0 - pt.fpr));
    return -std::hypot(pt.fpr, 1.0 - pt.tpr);
  };
  const RocPoint* best = nullptr;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& pt : curve.points) {
    if (std::isinf(pt.threshold)) continue;
    const double v = objective(pt);
    if (best == nullptr || v > best_value ||
        (v == best_value && pt.threshold > best->threshold)) {
      best = &pt;
      best_value = v;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorCode::DegenerateLabels, "ROC curve has no finite operating point");
  }
  return {best->threshold, best_value, *best};
}

}  // namespace gazegrid
