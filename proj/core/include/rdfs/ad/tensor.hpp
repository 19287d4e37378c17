#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdfs::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor handle. Copies share storage (like a reference);
/// use clone() for an independent value.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false)
      : storage_(std::make_shared<Storage>()) {
    const std::size_t n = checked_size(shape);
    storage_->shape = std::move(shape);
    storage_->data.assign(n, Real(0));
    storage_->requires_grad = requires_grad;
  }

  Tensor(Shape shape, std::vector<Real> data, bool requires_grad = false)
      : storage_(std::make_shared<Storage>()) {
    const std::size_t n = checked_size(shape);
    if (data.size() != n) {
      throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                  " does not match shape " + shape_string(shape));
    }
    storage_->shape = std::move(shape);
    storage_->data = std::move(data);
    storage_->requires_grad = requires_grad;
  }

  static Tensor scalar(Real value, bool requires_grad = false) {
    return Tensor({1}, {value}, requires_grad);
  }

  bool defined() const { return storage_ != nullptr; }

  const Shape& shape() const { return get().shape; }
  std::size_t rank() const { return get().shape.size(); }
  std::size_t dim(std::size_t axis) const { return get().shape.at(axis); }
  std::size_t size() const { return get().data.size(); }

  std::span<Real> data() { return get().data; }
  std::span<const Real> data() const { return get().data; }
  Real* raw() { return get().data.data(); }
  const Real* raw() const { return get().data.data(); }

  Real item() const {
    if (size() != 1) throw std::invalid_argument("Tensor::item on tensor of shape " + shape_string(shape()));
    return get().data[0];
  }

  bool requires_grad() const { return get().requires_grad; }
  void set_requires_grad(bool flag) { get().requires_grad = flag; }

  bool has_grad() const { return !get().grad.empty(); }

  std::span<const Real> grad() const {
    if (!has_grad()) throw std::logic_error("Tensor::grad: gradient not populated");
    return get().grad;
  }

  /// Gradient buffer, zero-allocated on first use.
  std::span<Real> mutable_grad() {
    auto& s = get();
    if (s.grad.empty()) s.grad.assign(s.data.size(), Real(0));
    return s.grad;
  }

  /// Drops the gradient buffer; has_grad() is false afterwards.
  void zero_grad() { get().grad.clear(); }

  bool shares_storage_with(const Tensor& other) const { return storage_ == other.storage_; }

  Tensor clone() const {
    Tensor out(shape(), std::vector<Real>(data().begin(), data().end()), requires_grad());
    if (has_grad()) out.get().grad = get().grad;
    return out;
  }

  /// Same values, no gradient tracking.
  Tensor detach() const { return Tensor(shape(), std::vector<Real>(data().begin(), data().end())); }

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> values(size());
    for (std::size_t i = 0; i < size(); ++i) values[i] = static_cast<Other>(get().data[i]);
    return Tensor<Other>(shape(), std::move(values), requires_grad());
  }

 private:
  struct Storage {
    Shape shape;
    std::vector<Real> data;
    std::vector<Real> grad;
    bool requires_grad = false;
  };

  static std::size_t checked_size(const Shape& shape) {
    if (shape.empty()) throw std::invalid_argument("Tensor: shape must have at least one extent");
    for (std::size_t extent : shape) {
      if (extent == 0) throw std::invalid_argument("Tensor: zero extent in shape " + shape_string(shape));
    }
    return shape_size(shape);
  }

  Storage& get() const {
    if (!storage_) throw std::logic_error("Tensor: use of undefined tensor");
    return *storage_;
  }

  std::shared_ptr<Storage> storage_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace rdfs::ad
