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

#ifndef TLQR__TYPES_HPP_
#define TLQR__TYPES_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace tlqr
{

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

using VecSeq = std::vector<Vec>;
using MatSeq = std::vector<Mat>;

/// Dimension mismatch, out-of-range index, or malformed input.
class InvalidArgument : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A control component lies outside the model's admissible set.
class BoundViolation : public std::out_of_range
{
public:
  BoundViolation(const std::string & component, const std::string & what)
  : std::out_of_range(what), component_(component)
  {
  }
  const std::string & component() const noexcept { return component_; }

private:
  std::string component_;
};

/// Evaluation at a point where the model or cost is not smooth.
class DomainError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Singular matrix, NaN in a cost, or similar breakdown.
class NumericalFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Unreadable input or unwritable output.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace tlqr

#endif  // TLQR__TYPES_HPP_
