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

#ifndef TLQR__RANDOM_HPP_
#define TLQR__RANDOM_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tlqr
{

using Rng = std::mt19937_64;

/// Stream tags keep closed-loop, open-loop and verification draws independent.
enum class StreamTag : std::uint64_t {
  kClosedLoop = 1,
  kOpenLoop = 2,
  kTheorem3 = 3,
  kExit = 4,
  kRandomInstance = 5,
};

inline std::uint64_t splitmix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based seed for one stream: a pure function of (master, counters...).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> counters)
{
  std::uint64_t h = splitmix64(master);
  for (const auto c : counters) {
    h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  }
  return h;
}

inline Eigen::VectorXd standard_normal(Rng & rng, int n)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = normal(rng);
  }
  return v;
}

}  // namespace tlqr

#endif  // TLQR__RANDOM_HPP_
