#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "netburst/codebook.hpp"
#include "netburst/series.hpp"

namespace netburst {

struct MetricError : DataError {
  using DataError::DataError;
};

// Event-restricted MASE: mean absolute error over test windows where
// truth > t_act, scaled by the in-sample one-step naive MAE of the training
// series. A test segment without event windows yields no_events (excluded
// from aggregates); a constant training series has no scale and throws
// MetricError. event_scale switches the denominator to event-window steps
// only.
struct MaseResult {
  double value = 0.0;
  bool no_events = false;
};

MaseResult mase_events(const TimeSeries& forecast, const TimeSeries& truth,
                       const TimeSeries& train, double t_act,
                       bool event_scale = false);

// 1-Wasserstein distance between two empirical distributions. Equal sample
// counts reduce to the mean absolute difference of sorted samples; unequal
// counts integrate |Fa^-1 - Fb^-1| over the merged quantile grid.
double wasserstein1(const std::vector<double>& a, const std::vector<double>& b);

// Population variance over mean; MetricError when the mean is zero.
double fano(const TimeSeries& series);

// Sample autocorrelation r(0..max_lag); MetricError on zero variance.
std::vector<double> acf(const TimeSeries& series, int max_lag);

// Base-2 Jensen-Shannon divergence between two histograms of equal size, each
// summing to 1 within 1e-9; range [0,1].
double jsd(const std::vector<double>& p, const std::vector<double>& q);

// Normalized token histogram of windows with value > t_act.
std::vector<double> build_activity_histogram(const TimeSeries& series,
                                             double t_act, const Codebook& cb);

// k-means++ seeding followed by Lloyd iterations to an assignment fixed point
// (cap 300); ties break toward the lowest cluster index; deterministic given
// seed.
struct KmeansResult {
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
};

KmeansResult kmeans(const std::vector<std::vector<double>>& points, int k,
                    std::uint64_t seed);

// Mean silhouette over points (Euclidean); singleton-cluster points and
// degenerate a=b=0 points score 0. Needs >= 2 non-empty clusters.
double silhouette(const std::vector<std::vector<double>>& points,
                  const std::vector<int>& assignments);

// First two principal components of the (centered) points, for 2-D exports.
std::vector<std::array<double, 2>> pca2(
    const std::vector<std::vector<double>>& points);

// Complementary CDF over the sample values: (x, P(X > x)) at each distinct x.
std::vector<std::array<double, 2>> ccdf_points(const std::vector<double>& xs);

}  // namespace netburst
