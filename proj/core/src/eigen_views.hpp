#pragma once

#include "hope/tensor.hpp"

#include <Eigen/Core>

namespace hope::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

inline ConstMatrixView view(const Tensor& t) {
  return ConstMatrixView(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                         static_cast<Eigen::Index>(t.cols()));
}

inline MatrixView view(Tensor& t) {
  return MatrixView(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
}

// Rows [first, first + count) of a row-major matrix buffer.
inline ConstMatrixView block_view(const Tensor& t, std::size_t first, std::size_t count) {
  return ConstMatrixView(t.data().data() + first * t.cols(), static_cast<Eigen::Index>(count),
                         static_cast<Eigen::Index>(t.cols()));
}

inline MatrixView block_view(Tensor& t, std::size_t first, std::size_t count) {
  return MatrixView(t.data().data() + first * t.cols(), static_cast<Eigen::Index>(count),
                    static_cast<Eigen::Index>(t.cols()));
}

} // namespace hope::detail
