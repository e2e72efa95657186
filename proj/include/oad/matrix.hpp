#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace oad {

// Dense row-major matrix of doubles. Deliberately minimal: storage plus
// indexed access; numeric work goes through the simd kernels.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw std::invalid_argument("Matrix: value count does not match shape");
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t i, std::size_t j) {
    return values_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * cols_ + j];
  }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  std::span<double> row(std::size_t i) {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  // Stacks `other` below this matrix; column counts must agree.
  void append_rows(const Matrix& other) {
    if (other.empty()) return;
    if (empty()) {
      *this = other;
      return;
    }
    if (other.cols_ != cols_) {
      throw std::invalid_argument("Matrix::append_rows: column mismatch");
    }
    values_.insert(values_.end(), other.values_.begin(), other.values_.end());
    rows_ += other.rows_;
  }

  Matrix take_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t r = 0; r < indices.size(); ++r) {
      const double* src = values_.data() + indices[r] * cols_;
      double* dst = out.values_.data() + r * cols_;
      for (std::size_t j = 0; j < cols_; ++j) dst[j] = src[j];
    }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace oad
