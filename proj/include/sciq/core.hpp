// Copyright 2026 The sciq Authors.
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

#ifndef SCIQ_CORE_HPP_
#define SCIQ_CORE_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sciq {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IntegrityError : public Error {
  using Error::Error;
};
class ConfigError : public Error {
  using Error::Error;
};
class SizeError : public Error {
  using Error::Error;
};
class SampleError : public Error {
  using Error::Error;
};
class NumericError : public Error {
  using Error::Error;
};
class IoError : public Error {
  using Error::Error;
};
class VersionError : public Error {
  using Error::Error;
};
class CorruptionError : public Error {
  using Error::Error;
};
class MetricError : public Error {
  using Error::Error;
};

}  // namespace sciq

#endif  // SCIQ_CORE_HPP_
