// Copyright 2026 The wassnet Authors.
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

#ifndef WASSNET_ERROR_HPP_
#define WASSNET_ERROR_HPP_

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace wassnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition: bad sizes, mismatched dimensions, out-of-range options.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or document. `field()` names the offending key path.
class ParseError : public Error {
 public:
  ParseError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A configured size cap (atoms, cost entries, support size) would be exceeded.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown. May carry the matrix that triggered it.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what) {}
  NumericalError(const std::string& what, Eigen::MatrixXd offending)
      : Error(what), matrix_(std::move(offending)) {}
  const std::optional<Eigen::MatrixXd>& matrix() const noexcept { return matrix_; }

 private:
  std::optional<Eigen::MatrixXd> matrix_;
};

/// Iterative solver stopped before reaching its tolerance.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A truncation cell carries less probability than can be represented reliably.
class NegligibleMassError : public NumericalError {
 public:
  NegligibleMassError(const std::string& what, double mass)
      : NumericalError(what), mass_(mass) {}
  double mass() const noexcept { return mass_; }

 private:
  double mass_;
};

}  // namespace wassnet

#endif  // WASSNET_ERROR_HPP_
