#pragma once

#include <cmath>

#include "ssdef/common.hpp"

namespace ssdef {

// Binomial standard error sqrt(p(1-p)/n) of an accuracy estimate.
inline double binomial_se(double p, long n) {
  require(n > 0, "binomial_se: n must be positive");
  require(p >= 0.0 && p <= 1.0, "binomial_se: p out of range");
  return std::sqrt(p * (1.0 - p) / n);
}

struct TwoProportionTest {
  double p1 = 0, p2 = 0;
  double diff = 0;  // p1 - p2
  double z = 0;     // pooled two-proportion z statistic
  bool significant_95 = false;
};

inline constexpr double kZCritical95 = 1.9599639845400545;  // two-sided

inline TwoProportionTest two_proportion_z(long correct1, long n1, long correct2, long n2) {
  require(n1 > 0 && n2 > 0, "two_proportion_z: empty sample");
  require(correct1 >= 0 && correct1 <= n1 && correct2 >= 0 && correct2 <= n2,
          "two_proportion_z: counts out of range");
  TwoProportionTest t;
  t.p1 = double(correct1) / n1;
  t.p2 = double(correct2) / n2;
  t.diff = t.p1 - t.p2;
  const double pooled = double(correct1 + correct2) / (double(n1) + n2);
  const double var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
  t.z = var > 0 ? t.diff / std::sqrt(var) : 0.0;
  t.significant_95 = std::abs(t.z) > kZCritical95;
  return t;
}

}  // namespace ssdef
