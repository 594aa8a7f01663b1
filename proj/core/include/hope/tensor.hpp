#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hope {

// Buffers start on a 64-byte boundary so that vectorized kernels take the
// same path, and round the same way, wherever the heap places them.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

/// Dense row-major tensor of doubles with an optional gradient buffer.
///
/// Every operation in the library treats tensors as matrices: rank-1 tensors
/// behave as a single row. Zero-length dimensions are allowed so that empty
/// feature blocks can be concatenated.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor identity(std::size_t n);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);
  bool has_grad() const { return requires_grad_ && grad_.size() == data_.size(); }
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }
  void zero_grad();
  double grad_norm() const;

  // Reinterprets the row-major buffer under a new shape of equal size.
  void reshape(std::vector<std::size_t> shape);

  // Throws NumericError naming `what` if any entry is NaN or infinite.
  void check_finite(std::string_view what) const;
  bool all_finite() const;

  std::string shape_string() const;

private:
  std::vector<std::size_t> shape_;
  Buffer data_;
  Buffer grad_;
  bool requires_grad_ = false;
};

// A trainable tensor with a stable name, used by optimizers and checkpoints.
struct NamedParam {
  std::string name;
  Tensor* tensor = nullptr;
};

std::size_t parameter_count(std::span<const NamedParam> params);
void zero_grads(std::span<const NamedParam> params);

} // namespace hope
