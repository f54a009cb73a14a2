#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ssdef {

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using ArrX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Matd = MatX<double>;
using Vecd = VecX<double>;

// Configuration problems (bad file, bad field value). CLI exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset / file ingestion problems. CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Corrupt or truncated binary artifacts.
struct IntegrityError : DataError {
  using DataError::DataError;
};

// sign with sign(0) = 0
template <class S>
inline S sgn0(S v) {
  return static_cast<S>((v > S(0)) - (v < S(0)));
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace ssdef
