#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace netburst {

// Error taxonomy mapped to CLI exit codes: ConfigError -> 1, DataError -> 2,
// NumericError -> 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kVersion = "netburst 0.1.0";

// Kahan compensated accumulator; cross-entity aggregates must not depend on
// summation order noise.
class KahanSum {
 public:
  void add(double x) {
    double y = x - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double kahan_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value() / static_cast<double>(xs.size());
}

// Shortest decimal that round-trips a double bit-exactly (17 significant
// digits); used by every text serialization in the toolkit.
std::string fmt_g17(double v);

}  // namespace netburst
