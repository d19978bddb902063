// Copyright 2026 The tlqr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TLQR__STATS_HPP_
#define TLQR__STATS_HPP_

#include <span>
#include <vector>

namespace tlqr
{

struct LinearFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Flat data (zero total variance)
/// that is fit exactly reports r_squared = 1.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct Moments
{
  double mean = 0.0;
  double sd = 0.0;               // sample standard deviation (n - 1)
  double skewness = 0.0;         // population moment ratio m3 / m2^1.5
  double excess_kurtosis = 0.0;  // m4 / m2^2 - 3
};

/// Zero spread reports zero skewness and kurtosis.
Moments sample_moments(std::span<const double> values);

double mean(std::span<const double> values);
double sample_sd(std::span<const double> values);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace tlqr

#endif  // TLQR__STATS_HPP_
