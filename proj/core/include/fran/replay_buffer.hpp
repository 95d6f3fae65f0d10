#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "fran/errors.hpp"

namespace fran {

/// Fixed-capacity ring of transitions. Once full, each push overwrites the
/// oldest entry. Index 0 is always the oldest retained entry.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay_capacity", "must be >= 1");
    items_.reserve(capacity);
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[cursor_] = std::move(item);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return items_.empty(); }

  const T& operator[](std::size_t i) const {
    if (i >= items_.size()) throw ShapeError("replay buffer index out of range");
    return items_.size() < capacity_ ? items_[i] : items_[(cursor_ + i) % capacity_];
  }

  /// Uniform sample with replacement.
  template <typename Rng>
  std::vector<const T*> sample(std::size_t count, Rng& rng) const {
    if (items_.empty()) throw LifecycleError("sample from empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<const T*> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(&items_[pick(rng)]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<T> items_;
};

}  // namespace fran
