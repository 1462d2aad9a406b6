#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "direlieff/core.hpp"

namespace direlieff::relieff {

struct Neighbor {
  std::uint64_t instance_id = 0;
  double distance = 0.0;
  std::vector<double> values;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Strict order on (distance, instance id). Equal distances keep the smaller id.
inline bool closer(double d1, std::uint64_t id1, double d2, std::uint64_t id2) {
  return d1 < d2 || (d1 == d2 && id1 < id2);
}

/// Bounded max-heap keeping the `capacity` closest candidates seen so far.
///
/// Because candidates are totally ordered by (distance, id), the retained
/// set does not depend on the order of offers or merges.
class NeighborHeap {
 public:
  explicit NeighborHeap(std::size_t capacity = 0) : capacity_(capacity) {}

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// True when a candidate with this key would be retained.
  bool admits(double distance, std::uint64_t id) const {
    if (capacity_ == 0) return false;
    if (entries_.size() < capacity_) return true;
    const auto& top = entries_.front();
    return closer(distance, id, top.distance, top.instance_id);
  }

  /// Offers an instance; its values are copied only when it is retained.
  bool offer(double distance, const core::Instance& instance);
  bool offer(Neighbor candidate);

  /// Folds `other` in, keeping the closest `capacity` entries of the union.
  void merge(const NeighborHeap& other);

  /// Entries in heap layout (front is the farthest retained neighbor).
  const std::vector<Neighbor>& entries() const noexcept { return entries_; }

  /// Entries ordered nearest first.
  std::vector<Neighbor> sorted() const;

 private:
  void push(Neighbor candidate);

  std::size_t capacity_;
  std::vector<Neighbor> entries_;
};

/// c x m grid of heaps; heap (C, i) collects class-C neighbors of sample i.
class NeighborMatrix {
 public:
  NeighborMatrix() = default;
  NeighborMatrix(std::size_t classes, std::size_t samples, std::size_t k);

  std::size_t classes() const noexcept { return classes_; }
  std::size_t samples() const noexcept { return samples_; }
  std::size_t k() const noexcept { return k_; }

  NeighborHeap& at(std::size_t cls, std::size_t sample) { return heaps_[cls * samples_ + sample]; }
  const NeighborHeap& at(std::size_t cls, std::size_t sample) const {
    return heaps_[cls * samples_ + sample];
  }

  /// Heap-wise merge; dimensions must agree.
  void merge(const NeighborMatrix& other);

  /// Bytes of the wire encoding of this matrix.
  std::size_t serialized_size() const;

 private:
  std::size_t classes_ = 0;
  std::size_t samples_ = 0;
  std::size_t k_ = 0;
  std::vector<NeighborHeap> heaps_;
};

}  // namespace direlieff::relieff
