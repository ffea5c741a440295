#pragma once

#include <cassert>
#include <cstddef>
#include <iterator>
#include <memory>
#include <vector>

namespace sdhp {

/// Append-only sequence whose full chunks are immutable and shared between
/// copies. Copying costs O(size / ChunkSize + ChunkSize) instead of O(size),
/// which keeps particle resampling cheap on long streams. Observable
/// semantics are those of a value type.
template <typename T, std::size_t ChunkSize = 512>
class SharedLog {
 public:
  using value_type = T;

  SharedLog() = default;

  void push_back(const T& value) {
    if (tail_.empty()) tail_.reserve(ChunkSize);
    tail_.push_back(value);
    if (tail_.size() == ChunkSize) {
      chunks_.push_back(std::make_shared<const std::vector<T>>(std::move(tail_)));
      tail_ = {};
    }
  }

  [[nodiscard]] std::size_t size() const { return chunks_.size() * ChunkSize + tail_.size(); }
  [[nodiscard]] bool empty() const { return size() == 0; }

  [[nodiscard]] const T& operator[](std::size_t i) const {
    assert(i < size());
    const std::size_t c = i / ChunkSize;
    if (c < chunks_.size()) return (*chunks_[c])[i % ChunkSize];
    return tail_[i - chunks_.size() * ChunkSize];
  }

  [[nodiscard]] const T& front() const { return (*this)[0]; }
  [[nodiscard]] const T& back() const { return (*this)[size() - 1]; }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& chunk : chunks_)
      for (const T& v : *chunk) f(v);
    for (const T& v : tail_) f(v);
  }

  [[nodiscard]] std::vector<T> to_vector() const {
    std::vector<T> out;
    out.reserve(size());
    for_each([&](const T& v) { out.push_back(v); });
    return out;
  }

  friend bool operator==(const SharedLog& a, const SharedLog& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!(a[i] == b[i])) return false;
    return true;
  }

 private:
  std::vector<std::shared_ptr<const std::vector<T>>> chunks_;
  std::vector<T> tail_;
};

/// Random-access sequence split into shared chunks. A copy shares every
/// chunk; a write or append unshares only the chunk it touches.
template <typename T, std::size_t ChunkSize = 256>
class SharedVector {
 public:
  using value_type = T;

  class const_iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = T;
    using difference_type = std::ptrdiff_t;
    using pointer = const T*;
    using reference = const T&;

    const_iterator() = default;
    const_iterator(const SharedVector* v, std::size_t i) : v_(v), i_(i) {}
    reference operator*() const { return (*v_)[i_]; }
    pointer operator->() const { return &(*v_)[i_]; }
    const_iterator& operator++() {
      ++i_;
      return *this;
    }
    const_iterator operator++(int) {
      auto old = *this;
      ++i_;
      return old;
    }
    friend bool operator==(const const_iterator& a, const const_iterator& b) { return a.i_ == b.i_; }

   private:
    const SharedVector* v_{nullptr};
    std::size_t i_{0};
  };

  SharedVector() = default;

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] bool empty() const { return size_ == 0; }

  [[nodiscard]] const T& operator[](std::size_t i) const {
    assert(i < size_);
    return (*chunks_[i / ChunkSize])[i % ChunkSize];
  }

  /// Writable element; copies its chunk first if another sequence shares it.
  T& mutate(std::size_t i) {
    assert(i < size_);
    return (*own(i / ChunkSize))[i % ChunkSize];
  }

  void push_back(T value) {
    if (size_ % ChunkSize == 0) {
      chunks_.push_back(std::make_shared<std::vector<T>>());
      chunks_.back()->reserve(ChunkSize);
    }
    own(chunks_.size() - 1)->push_back(std::move(value));
    ++size_;
  }

  [[nodiscard]] const_iterator begin() const { return {this, 0}; }
  [[nodiscard]] const_iterator end() const { return {this, size_}; }

  [[nodiscard]] std::vector<T> to_vector() const { return {begin(), end()}; }

  friend bool operator==(const SharedVector& a, const SharedVector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!(a[i] == b[i])) return false;
    return true;
  }

 private:
  std::vector<T>* own(std::size_t c) {
    auto& chunk = chunks_[c];
    if (chunk.use_count() > 1) {
      auto copy = std::make_shared<std::vector<T>>();
      copy->reserve(ChunkSize);
      copy->assign(chunk->begin(), chunk->end());
      chunk = std::move(copy);
    }
    return chunk.get();
  }

  std::vector<std::shared_ptr<std::vector<T>>> chunks_;
  std::size_t size_{0};
};

}  // namespace sdhp
