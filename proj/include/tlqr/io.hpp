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

#ifndef TLQR__IO_HPP_
#define TLQR__IO_HPP_

#include <cmath>
#include <cstdio>
#include <string>

namespace tlqr
{

/// 12 significant digits; NaN prints as "nan" regardless of sign bit.
inline std::string format_number(double v)
{
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace tlqr

#endif  // TLQR__IO_HPP_
