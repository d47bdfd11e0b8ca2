#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "savo/errors.hpp"

namespace savo {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrixXd>;
using ConstMatMap = Eigen::Map<const RowMatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

/// Dense row-major double tensor. All network math runs in 64-bit; the
/// on-disk archive format may hold 32-bit payloads (converted on load).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(compute_numel(shape_)), 0.0);
  }

  Tensor(std::initializer_list<int64_t> shape)
      : Tensor(std::vector<int64_t>(shape)) {}

  static Tensor zeros(std::vector<int64_t> shape) {
    return Tensor(std::move(shape));
  }

  static Tensor full(std::vector<int64_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  const std::vector<int64_t>& shape() const { return shape_; }

  int64_t dim(int i) const {
    if (i < 0 || i >= ndim()) throw_invalid("tensor dim index out of range");
    return shape_[static_cast<size_t>(i)];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  /// Element access for rank-3 (c, h, w) tensors.
  double& at3(int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>((c * shape_[1] + h) * shape_[2] + w)];
  }
  double at3(int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>((c * shape_[1] + h) * shape_[2] + w)];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  void reshape(std::vector<int64_t> shape) {
    if (compute_numel(shape) != numel())
      throw_invalid("reshape changes element count");
    shape_ = std::move(shape);
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Rank-2 view (rows x cols) over the flat storage.
  MatMap mat(int64_t rows, int64_t cols) {
    if (rows * cols != numel()) throw_invalid("matrix view size mismatch");
    return MatMap(data(), rows, cols);
  }
  ConstMatMap mat(int64_t rows, int64_t cols) const {
    if (rows * cols != numel()) throw_invalid("matrix view size mismatch");
    return ConstMatMap(data(), rows, cols);
  }

  VecMap vec() { return VecMap(data(), numel()); }
  ConstVecMap vec() const { return ConstVecMap(data(), numel()); }

 private:
  static int64_t compute_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d < 0) throw_invalid("negative tensor dimension");
      n *= d;
    }
    return n;
  }

  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

}  // namespace savo
