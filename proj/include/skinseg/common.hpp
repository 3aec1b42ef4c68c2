#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace skinseg {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Arr = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using MatF = Mat<float>;
using VecF = Vec<float>;
using MatD = Mat<double>;
using VecD = Vec<double>;

/// Grayscale/binary plane, row index = y, column index = x.
using Plane = Arr<float>;

/// Dataset, file-format, and dimension problems. The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite loss or divergence during training. The CLI maps this to exit code 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace skinseg
