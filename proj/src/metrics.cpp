#include "netburst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netburst/rng.hpp"

namespace netburst {

MaseResult mase_events(const TimeSeries& forecast, const TimeSeries& truth,
                       const TimeSeries& train, double t_act,
                       bool event_scale) {
  if (forecast.values.size() != truth.values.size())
    throw ConfigError("mase_events: forecast and truth lengths differ");
  if (train.values.size() < 2)
    throw MetricError("mase_events: training series needs >= 2 windows");

  KahanSum denom_sum;
  std::size_t denom_n = 0;
  for (std::size_t t = 1; t < train.values.size(); ++t) {
    if (event_scale && !(train.values[t] > t_act)) continue;
    denom_sum.add(std::abs(train.values[t] - train.values[t - 1]));
    ++denom_n;
  }
  if (denom_n == 0)
    throw MetricError("mase_events: no training steps for the scale");
  double denom = denom_sum.value() / static_cast<double>(denom_n);
  if (denom == 0.0)
    throw MetricError("mase_events: constant training series, scale undefined");

  KahanSum num_sum;
  std::size_t events = 0;
  for (std::size_t t = 0; t < truth.values.size(); ++t) {
    if (!(truth.values[t] > t_act)) continue;
    num_sum.add(std::abs(forecast.values[t] - truth.values[t]));
    ++events;
  }
  MaseResult r;
  if (events == 0) {
    r.no_events = true;
    return r;
  }
  r.value = (num_sum.value() / static_cast<double>(events)) / denom;
  return r;
}

double wasserstein1(const std::vector<double>& a,
                    const std::vector<double>& b) {
  if (a.empty() || b.empty())
    throw ConfigError("wasserstein1: empty sample set");
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  if (sa.size() == sb.size()) {
    KahanSum s;
    for (std::size_t i = 0; i < sa.size(); ++i) s.add(std::abs(sa[i] - sb[i]));
    return s.value() / static_cast<double>(sa.size());
  }

  // integral of |Fa^-1(u) - Fb^-1(u)| du over the merged quantile grid
  double na = static_cast<double>(sa.size());
  double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double u = 0.0;
  KahanSum s;
  while (i < sa.size() && j < sb.size()) {
    double next_a = static_cast<double>(i + 1) / na;
    double next_b = static_cast<double>(j + 1) / nb;
    double next = std::min(next_a, next_b);
    s.add((next - u) * std::abs(sa[i] - sb[j]));
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
    u = next;
  }
  return s.value();
}

double fano(const TimeSeries& series) {
  if (series.values.empty()) throw MetricError("fano: empty series");
  KahanSum ms;
  for (double v : series.values) ms.add(v);
  double mean = ms.value() / static_cast<double>(series.values.size());
  if (mean == 0.0) throw MetricError("fano: zero mean, ratio undefined");
  KahanSum vs;
  for (double v : series.values) vs.add((v - mean) * (v - mean));
  double var = vs.value() / static_cast<double>(series.values.size());
  return var / mean;
}

std::vector<double> acf(const TimeSeries& series, int max_lag) {
  std::size_t n = series.values.size();
  if (max_lag < 0 || static_cast<std::size_t>(max_lag) >= n)
    throw ConfigError("acf: max_lag must be < series length");
  KahanSum ms;
  for (double v : series.values) ms.add(v);
  double mean = ms.value() / static_cast<double>(n);
  KahanSum den;
  for (double v : series.values) den.add((v - mean) * (v - mean));
  if (den.value() == 0.0) throw MetricError("acf: zero variance");

  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1);
  for (int lag = 0; lag <= max_lag; ++lag) {
    KahanSum num;
    for (std::size_t t = 0; t + static_cast<std::size_t>(lag) < n; ++t)
      num.add((series.values[t] - mean) *
              (series.values[t + static_cast<std::size_t>(lag)] - mean));
    r[static_cast<std::size_t>(lag)] = num.value() / den.value();
  }
  return r;
}

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size())
    throw ConfigError("jsd: histograms have different bin counts");
  if (p.empty()) throw ConfigError("jsd: empty histograms");
  auto check = [](const std::vector<double>& h, const char* name) {
    KahanSum s;
    for (double x : h) {
      if (x < 0.0) throw ConfigError(std::string("jsd: negative mass in ") + name);
      s.add(x);
    }
    if (std::abs(s.value() - 1.0) > 1e-9)
      throw ConfigError(std::string("jsd: ") + name + " does not sum to 1");
  };
  check(p, "p");
  check(q, "q");

  const double ln2 = std::log(2.0);
  KahanSum acc;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) acc.add(0.5 * p[i] * std::log(p[i] / m) / ln2);
    if (q[i] > 0.0) acc.add(0.5 * q[i] * std::log(q[i] / m) / ln2);
  }
  return acc.value();
}

std::vector<double> build_activity_histogram(const TimeSeries& series,
                                             double t_act,
                                             const Codebook& cb) {
  std::vector<double> h(static_cast<std::size_t>(cb.bins()), 0.0);
  std::size_t active = 0;
  for (double v : series.values) {
    if (!(v > t_act)) continue;
    h[static_cast<std::size_t>(cb.encode(v))] += 1.0;
    ++active;
  }
  if (active == 0)
    throw MetricError("activity histogram: no windows above threshold " +
                      fmt_g17(t_act));
  for (double& x : h) x /= static_cast<double>(active);
  return h;
}

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

KmeansResult kmeans(const std::vector<std::vector<double>>& points, int k,
                    std::uint64_t seed) {
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (points.empty() || static_cast<std::size_t>(k) > points.size())
    throw ConfigError("kmeans: k exceeds number of points");
  std::size_t dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw ConfigError("kmeans: dimension mismatch");

  Rng rng(seed);
  std::vector<std::vector<double>> centroids;
  centroids.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, dist2(points[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(points.size());
    }
    centroids.push_back(points[pick]);
  }

  KmeansResult res;
  res.assignments.assign(points.size(), 0);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      int best = 0;
      double bestd = dist2(points[i], centroids[0]);
      for (int c = 1; c < k; ++c) {
        double d = dist2(points[i], centroids[static_cast<std::size_t>(c)]);
        if (d < bestd) {  // strict: ties keep the lowest index
          bestd = d;
          best = c;
        }
      }
      if (res.assignments[i] != best) {
        res.assignments[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    for (int c = 0; c < k; ++c) {
      std::vector<double> mean(dim, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (res.assignments[i] != c) continue;
        for (std::size_t j = 0; j < dim; ++j) mean[j] += points[i][j];
        ++count;
      }
      if (count == 0) continue;  // empty cluster keeps its centroid
      for (double& m : mean) m /= static_cast<double>(count);
      centroids[static_cast<std::size_t>(c)] = std::move(mean);
    }
  }

  res.inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    res.inertia +=
        dist2(points[i], centroids[static_cast<std::size_t>(res.assignments[i])]);
  res.centroids = std::move(centroids);
  return res;
}

double silhouette(const std::vector<std::vector<double>>& points,
                  const std::vector<int>& assignments) {
  if (points.size() != assignments.size())
    throw ConfigError("silhouette: size mismatch");
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) {
    if (a < 0) throw ConfigError("silhouette: negative cluster index");
    ++sizes[static_cast<std::size_t>(a)];
  }
  std::size_t non_empty = 0;
  for (std::size_t s : sizes) non_empty += s > 0 ? 1 : 0;
  if (non_empty < 2)
    throw ConfigError("silhouette needs at least 2 non-empty clusters");

  KahanSum total;
  std::vector<double> mean_d(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < points.size(); ++i) {
    int own = assignments[i];
    if (sizes[static_cast<std::size_t>(own)] == 1) continue;  // singleton scores 0
    std::vector<KahanSum> acc(static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      acc[static_cast<std::size_t>(assignments[j])].add(
          std::sqrt(dist2(points[i], points[j])));
    }
    double a = acc[static_cast<std::size_t>(own)].value() /
               static_cast<double>(sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, acc[static_cast<std::size_t>(c)].value() /
                          static_cast<double>(sizes[static_cast<std::size_t>(c)]));
    }
    double denom = std::max(a, b);
    total.add(denom > 0.0 ? (b - a) / denom : 0.0);
  }
  return total.value() / static_cast<double>(points.size());
}

std::vector<std::array<double, 2>> pca2(
    const std::vector<std::vector<double>>& points) {
  if (points.empty()) return {};
  std::size_t n = points.size();
  std::size_t d = points.front().size();
  for (const auto& p : points)
    if (p.size() != d) throw ConfigError("pca2: dimension mismatch");

  std::vector<double> mean(d, 0.0);
  for (const auto& p : points)
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
  for (double& m : mean) m /= static_cast<double>(n);

  // covariance, then cyclic Jacobi rotations
  std::vector<double> cov(d * d, 0.0);
  for (const auto& p : points)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        cov[i * d + j] += (p[i] - mean[i]) * (p[j] - mean[j]);
  for (double& c : cov) c /= static_cast<double>(n);

  std::vector<double> vecs(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) vecs[i * d + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) off += cov[i * d + j] * cov[i * d + j];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double apq = cov[p * d + q];
        if (std::abs(apq) < 1e-300) continue;
        double app = cov[p * d + p], aqq = cov[q * d + q];
        double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
        double c = std::cos(theta), s = std::sin(theta);
        for (std::size_t r = 0; r < d; ++r) {
          double arp = cov[r * d + p], arq = cov[r * d + q];
          cov[r * d + p] = c * arp - s * arq;
          cov[r * d + q] = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < d; ++r) {
          double apr = cov[p * d + r], aqr = cov[q * d + r];
          cov[p * d + r] = c * apr - s * aqr;
          cov[q * d + r] = s * apr + c * aqr;
        }
        for (std::size_t r = 0; r < d; ++r) {
          double vrp = vecs[r * d + p], vrq = vecs[r * d + q];
          vecs[r * d + p] = c * vrp - s * vrq;
          vecs[r * d + q] = s * vrp + c * vrq;
        }
      }
    }
  }

  // two largest eigenvalues
  std::size_t i1 = 0, i2 = (d > 1) ? 1 : 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (cov[i * d + i] > cov[i1 * d + i1]) i1 = i;
  }
  double second = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d; ++i) {
    if (i == i1) continue;
    if (cov[i * d + i] > second) {
      second = cov[i * d + i];
      i2 = i;
    }
  }

  auto axis = [&](std::size_t col) {
    std::vector<double> v(d);
    for (std::size_t r = 0; r < d; ++r) v[r] = vecs[r * d + col];
    // deterministic sign: largest-magnitude component positive
    std::size_t big = 0;
    for (std::size_t r = 1; r < d; ++r)
      if (std::abs(v[r]) > std::abs(v[big])) big = r;
    if (v[big] < 0.0)
      for (double& x : v) x = -x;
    return v;
  };
  std::vector<double> ax1 = axis(i1), ax2 = axis(i2);

  std::vector<std::array<double, 2>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0, y = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double c = points[i][j] - mean[j];
      x += c * ax1[j];
      y += c * ax2[j];
    }
    out[i] = {x, y};
  }
  return out;
}

std::vector<std::array<double, 2>> ccdf_points(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  std::vector<double> s = xs;
  std::sort(s.begin(), s.end());
  std::vector<std::array<double, 2>> out;
  std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && s[j] == s[i]) ++j;
    out.push_back({s[i], static_cast<double>(n - j) / static_cast<double>(n)});
    i = j;
  }
  return out;
}

}  // namespace netburst
