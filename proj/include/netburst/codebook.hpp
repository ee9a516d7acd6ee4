#pragma once

#include <string>
#include <vector>

#include "netburst/common.hpp"

namespace netburst {

enum class BinScheme { quantile, uniform };

enum class CentroidStat { mean, median };

// B-bin scalar discretizer. boundaries has bins()+1 strictly increasing
// entries; bin i is [boundaries[i], boundaries[i+1]), the last bin closed on
// the right. Out-of-range values clamp to the edge bins (codebooks are fit on
// training data only, so test values may fall outside).
struct Codebook {
  BinScheme scheme = BinScheme::quantile;
  int requested_bins = 0;  // bins asked for; ties can merge some away
  std::vector<double> boundaries;
  std::vector<double> centroids;

  int bins() const { return static_cast<int>(centroids.size()); }

  int encode(double value) const;
  double decode(int token) const;
};

// Equal-mass codebook: boundaries are Hazen-interpolated empirical quantiles
// at levels i/B; duplicate boundaries from tied values merge (shrinking the
// effective bin count); centroid of a bin is the mean (or median) of the
// training values it receives.
Codebook fit_quantile(const std::vector<double>& values, int bins,
                      CentroidStat stat = CentroidStat::mean);

// Equal-width codebook over [min, max] with midpoint centroids.
Codebook fit_uniform(const std::vector<double>& values, int bins);

// Text format, one value per line at 17 significant digits so a reload is
// bit-faithful.
void save_codebook(const Codebook& cb, const std::string& path);
Codebook load_codebook(const std::string& path);

}  // namespace netburst
