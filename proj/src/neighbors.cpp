#include "direlieff/neighbors.hpp"

#include <algorithm>

namespace direlieff::relieff {

namespace {

// max-heap: the farthest (distance, id) sits at the front
bool heap_less(const Neighbor& a, const Neighbor& b) {
  return closer(a.distance, a.instance_id, b.distance, b.instance_id);
}

}  // namespace

void NeighborHeap::push(Neighbor candidate) {
  if (entries_.size() < capacity_) {
    entries_.push_back(std::move(candidate));
    std::push_heap(entries_.begin(), entries_.end(), heap_less);
    return;
  }
  std::pop_heap(entries_.begin(), entries_.end(), heap_less);
  entries_.back() = std::move(candidate);
  std::push_heap(entries_.begin(), entries_.end(), heap_less);
}

bool NeighborHeap::offer(double distance, const core::Instance& instance) {
  if (!admits(distance, instance.id)) return false;
  push(Neighbor{instance.id, distance, instance.values});
  return true;
}

bool NeighborHeap::offer(Neighbor candidate) {
  if (!admits(candidate.distance, candidate.instance_id)) return false;
  push(std::move(candidate));
  return true;
}

void NeighborHeap::merge(const NeighborHeap& other) {
  for (const auto& n : other.entries_) {
    if (admits(n.distance, n.instance_id)) push(n);
  }
}

std::vector<Neighbor> NeighborHeap::sorted() const {
  std::vector<Neighbor> out = entries_;
  std::sort(out.begin(), out.end(), heap_less);
  return out;
}

NeighborMatrix::NeighborMatrix(std::size_t classes, std::size_t samples, std::size_t k)
    : classes_(classes), samples_(samples), k_(k), heaps_(classes * samples, NeighborHeap(k)) {}

void NeighborMatrix::merge(const NeighborMatrix& other) {
  if (other.classes_ != classes_ || other.samples_ != samples_ || other.k_ != k_) {
    throw InvalidArgument("cannot merge neighbor matrices of different shapes");
  }
  for (std::size_t h = 0; h < heaps_.size(); ++h) heaps_[h].merge(other.heaps_[h]);
}

std::size_t NeighborMatrix::serialized_size() const {
  // header: classes, samples, k (u32 each); per heap: u32 count; per entry:
  // id (8), distance (8), value count (4), values (8 each)
  std::size_t bytes = 12 + 4 * heaps_.size();
  for (const auto& heap : heaps_) {
    for (const auto& n : heap.entries()) bytes += 20 + 8 * n.values.size();
  }
  return bytes;
}

}  // namespace direlieff::relieff
