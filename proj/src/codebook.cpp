#include "netburst/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace netburst {

namespace {

// Hazen (type-5) empirical quantile: position n*p - 0.5 with linear
// interpolation, clamped to the sample range.
double hazen_quantile(const std::vector<double>& sorted, double p) {
  double n = static_cast<double>(sorted.size());
  double idx = n * p - 0.5;
  if (idx <= 0.0) return sorted.front();
  if (idx >= n - 1.0) return sorted.back();
  double lo = std::floor(idx);
  double frac = idx - lo;
  std::size_t i = static_cast<std::size_t>(lo);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

void check_fit_input(const std::vector<double>& values, int bins) {
  if (values.empty()) throw DataError("cannot fit codebook on empty values");
  if (bins < 2) throw ConfigError("codebook needs at least 2 bins");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("codebook input has non-finite value");
}

}  // namespace

int Codebook::encode(double value) const {
  // upper_bound-1 gives the left-closed bin; edges clamp
  auto it = std::upper_bound(boundaries.begin(), boundaries.end(), value);
  int idx = static_cast<int>(it - boundaries.begin()) - 1;
  if (idx < 0) return 0;
  if (idx >= bins()) return bins() - 1;  // value >= last boundary
  return idx;
}

double Codebook::decode(int token) const {
  if (token < 0 || token >= bins())
    throw ConfigError("token " + std::to_string(token) +
                      " out of range [0, " + std::to_string(bins()) + ")");
  return centroids[static_cast<std::size_t>(token)];
}

Codebook fit_quantile(const std::vector<double>& values, int bins,
                      CentroidStat stat) {
  check_fit_input(values, bins);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back())
    throw DataError("cannot fit quantile codebook: fewer than 2 distinct values");

  Codebook cb;
  cb.scheme = BinScheme::quantile;
  cb.requested_bins = bins;
  cb.boundaries.push_back(sorted.front());
  for (int i = 1; i <= bins; ++i) {
    double b = hazen_quantile(sorted, static_cast<double>(i) / bins);
    if (b > cb.boundaries.back()) cb.boundaries.push_back(b);  // merge ties
  }

  int eff = static_cast<int>(cb.boundaries.size()) - 1;
  std::vector<std::vector<double>> members(static_cast<std::size_t>(eff));
  cb.centroids.assign(static_cast<std::size_t>(eff), 0.0);
  for (double v : sorted)
    members[static_cast<std::size_t>(cb.encode(v))].push_back(v);
  for (int i = 0; i < eff; ++i) {
    auto& m = members[static_cast<std::size_t>(i)];
    if (m.empty()) {
      cb.centroids[static_cast<std::size_t>(i)] =
          0.5 * (cb.boundaries[static_cast<std::size_t>(i)] +
                 cb.boundaries[static_cast<std::size_t>(i) + 1]);
    } else if (stat == CentroidStat::mean) {
      double s = 0.0;
      for (double v : m) s += v;
      cb.centroids[static_cast<std::size_t>(i)] =
          s / static_cast<double>(m.size());
    } else {
      std::size_t h = m.size() / 2;
      cb.centroids[static_cast<std::size_t>(i)] =
          (m.size() % 2 == 1) ? m[h] : 0.5 * (m[h - 1] + m[h]);
    }
  }
  return cb;
}

Codebook fit_uniform(const std::vector<double>& values, int bins) {
  check_fit_input(values, bins);
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (!(hi > lo))
    throw DataError("cannot fit uniform codebook: max equals min");

  Codebook cb;
  cb.scheme = BinScheme::uniform;
  cb.requested_bins = bins;
  cb.boundaries.reserve(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i)
    cb.boundaries.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                     static_cast<double>(bins));
  cb.boundaries.back() = hi;  // no rounding drift at the top edge
  cb.centroids.reserve(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i)
    cb.centroids.push_back(0.5 * (cb.boundaries[static_cast<std::size_t>(i)] +
                                  cb.boundaries[static_cast<std::size_t>(i) + 1]));
  return cb;
}

void save_codebook(const Codebook& cb, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << "netburst-codebook v1\n";
  f << "scheme " << (cb.scheme == BinScheme::quantile ? "quantile" : "uniform")
    << '\n';
  f << "requested_bins " << cb.requested_bins << '\n';
  f << "boundaries " << cb.boundaries.size() << '\n';
  for (double b : cb.boundaries) f << fmt_g17(b) << '\n';
  f << "centroids " << cb.centroids.size() << '\n';
  for (double c : cb.centroids) f << fmt_g17(c) << '\n';
}

Codebook load_codebook(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string tag, word;
  std::getline(f, tag);
  if (tag != "netburst-codebook v1")
    throw DataError(path + ": not a codebook file");
  Codebook cb;
  std::string scheme;
  std::size_t nb = 0, nc = 0;
  f >> word >> scheme;
  if (word != "scheme" || (scheme != "quantile" && scheme != "uniform"))
    throw DataError(path + ": malformed scheme line");
  cb.scheme = scheme == "quantile" ? BinScheme::quantile : BinScheme::uniform;
  f >> word >> cb.requested_bins;
  if (word != "requested_bins") throw DataError(path + ": malformed file");
  f >> word >> nb;
  if (word != "boundaries") throw DataError(path + ": malformed file");
  cb.boundaries.resize(nb);
  for (double& b : cb.boundaries) f >> b;
  f >> word >> nc;
  if (word != "centroids") throw DataError(path + ": malformed file");
  cb.centroids.resize(nc);
  for (double& c : cb.centroids) f >> c;
  if (!f || nc + 1 != nb) throw DataError(path + ": truncated codebook");
  return cb;
}

}  // namespace netburst
