#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bowlab/errors.hpp"

namespace bowlab::core {

inline std::string shape_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i];
  os << "]";
  return os.str();
}

template <class T>
struct TensorImpl {
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
};

// Dense row-major array with an optional gradient slot. Copies share storage;
// ops record their backward rules on the active Tape.
template <class T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->shape = std::move(shape);
    t.impl_->value.assign(count(t.impl_->shape), T(0));
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<T> data, bool requires_grad = false) {
    const std::size_t n = count(shape);
    if (n != data.size())
      throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                       shape_str(shape));
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->shape = std::move(shape);
    t.impl_->value = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(T v, bool requires_grad = false) { return from({1}, {v}, requires_grad); }

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return impl_->value.size(); }

  std::span<T> values() { return impl_->value; }
  std::span<const T> values() const { return impl_->value; }
  T* data() { return impl_->value.data(); }
  const T* data() const { return impl_->value.data(); }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::span<T> grad() {
    ensure_grad();
    return impl_->grad;
  }
  std::span<const T> grad_view() const { return impl_->grad; }
  void ensure_grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->value.size(), T(0));
  }
  void zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
  }

  T item() const {
    if (numel() != 1) throw ShapeError("item() on non-scalar tensor of shape " + shape_str(shape()));
    return impl_->value[0];
  }

  // Same values, no grad, no history.
  Tensor detach() const { return from(impl_->shape, impl_->value, false); }

  bool all_finite() const {
    for (const T v : impl_->value)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  std::shared_ptr<TensorImpl<T>> impl() const { return impl_; }

  static std::size_t count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape));
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

// Ordered record of forward ops. Creation order is topological by
// construction; backward() replays the list once in reverse. Gradients of op
// outputs (non-leaf tensors) are reset on every call, so only leaf gradients
// accumulate across repeated backward passes.
template <class T>
class Tape {
 public:
  struct Entry {
    const char* name;
    std::shared_ptr<TensorImpl<T>> out;
    std::function<void()> backward;
  };

  void record(const char* name, const Tensor<T>& out, std::function<void()> fn) {
    ops_.push_back({name, out.impl(), std::move(fn)});
  }

  std::size_t size() const { return ops_.size(); }

  void backward(Tensor<T>& loss) {
    if (loss.numel() != 1)
      throw ShapeError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
    for (Entry& e : ops_)
      if (!e.out->grad.empty()) std::fill(e.out->grad.begin(), e.out->grad.end(), T(0));
    loss.ensure_grad();
    loss.grad()[0] += T(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) it->backward();
  }

  static Tape*& current() {
    static thread_local Tape* cur = nullptr;
    return cur;
  }

  // RAII activation; ops only record while a tape is active.
  class Scope {
   public:
    explicit Scope(Tape& t) : prev_(current()) { current() = &t; }
    ~Scope() { current() = prev_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

 private:
  std::vector<Entry> ops_;
};

template <class T>
inline bool recording(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::current() == nullptr) return false;
  for (const Tensor<T>* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

}  // namespace bowlab::core
