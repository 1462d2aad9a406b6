#pragma once

// Partitioned read-only collections and the handful of actions the ranking
// pipeline needs: map, reduce, aggregate, take_sample and count. Partitions
// run concurrently on a fixed-size worker pool; per-partition results are
// always combined on the calling thread in partition order.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "direlieff/core.hpp"
#include "direlieff/error.hpp"

namespace direlieff::engine {

struct EngineConfig {
  std::size_t workers = 1;
  /// Cap on the summed size of per-partition aggregate results.
  std::size_t max_result_bytes = std::size_t{6} << 30;
};

template <class T>
class PartitionedDataset {
 public:
  using value_type = T;
  using Visitor = std::function<void(const T&)>;

  PartitionedDataset() : PartitionedDataset(std::vector<std::vector<T>>(1)) {}

  /// Builds a dataset over in-memory blocks; one block per partition.
  explicit PartitionedDataset(std::vector<std::vector<T>> blocks, bool materialized = false)
      : source_(std::make_shared<StoredSource>(std::move(blocks))), materialized_(materialized) {
    if (source_->partition_count() == 0) {
      throw InvalidArgument("a dataset needs at least one partition");
    }
  }

  std::size_t partition_count() const { return source_->partition_count(); }
  std::size_t partition_size(std::size_t p) const { return source_->partition_size(p); }

  std::vector<std::size_t> partition_sizes() const {
    std::vector<std::size_t> sizes(partition_count());
    for (std::size_t p = 0; p < sizes.size(); ++p) sizes[p] = partition_size(p);
    return sizes;
  }

  /// Visits every element of partition `p` in order. Lazily derived
  /// datasets recompute their elements on every scan.
  void scan(std::size_t p, const Visitor& visit) const { source_->scan(p, visit); }

  std::vector<T> block(std::size_t p) const {
    std::vector<T> out;
    out.reserve(partition_size(p));
    scan(p, [&](const T& x) { out.push_back(x); });
    return out;
  }

  std::vector<std::vector<T>> blocks() const {
    std::vector<std::vector<T>> out;
    for (std::size_t p = 0; p < partition_count(); ++p) out.push_back(block(p));
    return out;
  }

  std::vector<T> collect() const {
    std::vector<T> out;
    for (std::size_t p = 0; p < partition_count(); ++p) {
      scan(p, [&](const T& x) { out.push_back(x); });
    }
    return out;
  }

  /// Caching flag: when set, datasets derived by Engine::map retain their
  /// computed blocks instead of recomputing them from this one.
  bool materialized() const noexcept { return materialized_; }
  PartitionedDataset cached(bool on = true) const {
    PartitionedDataset copy = *this;
    copy.materialized_ = on;
    return copy;
  }

  std::shared_ptr<const core::Schema> schema() const { return schema_; }
  PartitionedDataset with_schema(core::Schema schema) const {
    PartitionedDataset copy = *this;
    copy.schema_ = std::make_shared<const core::Schema>(std::move(schema));
    return copy;
  }

 private:
  template <class U>
  friend class PartitionedDataset;
  friend class Engine;

  struct Source {
    virtual ~Source() = default;
    virtual std::size_t partition_count() const = 0;
    virtual std::size_t partition_size(std::size_t p) const = 0;
    virtual void scan(std::size_t p, const Visitor& visit) const = 0;
  };

  struct StoredSource final : Source {
    explicit StoredSource(std::vector<std::vector<T>> b) : blocks(std::move(b)) {}
    std::size_t partition_count() const override { return blocks.size(); }
    std::size_t partition_size(std::size_t p) const override { return blocks.at(p).size(); }
    void scan(std::size_t p, const Visitor& visit) const override {
      for (const auto& x : blocks.at(p)) visit(x);
    }
    std::vector<std::vector<T>> blocks;
  };

  template <class Parent, class F>
  struct MappedSource final : Source {
    MappedSource(PartitionedDataset<Parent> p, F f) : parent(std::move(p)), fn(std::move(f)) {}
    std::size_t partition_count() const override { return parent.partition_count(); }
    std::size_t partition_size(std::size_t p) const override { return parent.partition_size(p); }
    void scan(std::size_t p, const Visitor& visit) const override {
      parent.scan(p, [&](const Parent& x) { visit(fn(x)); });
    }
    PartitionedDataset<Parent> parent;
    F fn;
  };

  PartitionedDataset(std::shared_ptr<const Source> source, bool materialized,
                     std::shared_ptr<const core::Schema> schema)
      : source_(std::move(source)), materialized_(materialized), schema_(std::move(schema)) {}

  std::shared_ptr<const Source> source_;
  bool materialized_ = false;
  std::shared_ptr<const core::Schema> schema_;
};

/// Uniform integer in [0, bound) from a 64-bit engine, by rejection. Unlike
/// std::uniform_int_distribution the sequence is identical on every platform.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (std::uint64_t{0} - bound) % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % bound;
  }
}

/// Draws `m` distinct positions of [0, n) without replacement with a seeded
/// partial Fisher-Yates shuffle, in draw order. Depends only on (n, m, seed).
inline std::vector<std::uint64_t> sample_positions(std::uint64_t n, std::uint64_t m,
                                                   std::uint64_t seed) {
  if (m > n) {
    throw InvalidArgument("cannot sample " + std::to_string(m) + " of " + std::to_string(n) +
                          " elements without replacement");
  }
  std::mt19937_64 rng(seed);
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;
  auto at = [&](std::uint64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<std::uint64_t> out;
  out.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    const std::uint64_t j = i + uniform_below(rng, n - i);
    const std::uint64_t vi = at(i);
    const std::uint64_t vj = at(j);
    swapped[j] = vi;
    swapped[i] = vj;
    out.push_back(vj);
  }
  return out;
}

/// Maps global positions onto (partition, offset) pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> locate_positions(
    const std::vector<std::size_t>& partition_sizes, const std::vector<std::uint64_t>& positions) {
  std::vector<std::uint64_t> starts(partition_sizes.size() + 1, 0);
  for (std::size_t p = 0; p < partition_sizes.size(); ++p) {
    starts[p + 1] = starts[p] + partition_sizes[p];
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(positions.size());
  for (auto pos : positions) {
    if (pos >= starts.back()) throw InvalidArgument("position out of range");
    // upper_bound finds the first start past pos; skip empty partitions
    auto it = std::upper_bound(starts.begin(), starts.end(), pos);
    const std::size_t p = static_cast<std::size_t>(std::distance(starts.begin(), it)) - 1;
    out.emplace_back(p, static_cast<std::size_t>(pos - starts[p]));
  }
  return out;
}

class Engine {
 public:
  explicit Engine(EngineConfig config = {}) : config_(config) {
    if (config_.workers < 1) throw InvalidArgument("engine needs at least one worker");
  }

  const EngineConfig& config() const noexcept { return config_; }

  /// Runs fn(p) for p in [0, partitions) on up to `workers` threads. The
  /// first failure by partition index is rethrown after all tasks finish.
  template <class F>
  void for_each_partition(std::size_t partitions, F&& fn) const {
    std::vector<std::exception_ptr> errors(partitions);
    const std::size_t threads = std::min(config_.workers, partitions);
    if (threads <= 1) {
      for (std::size_t p = 0; p < partitions; ++p) {
        try {
          fn(p);
        } catch (...) {
          errors[p] = std::current_exception();
          break;
        }
      }
    } else {
      std::atomic<std::size_t> next{0};
      std::atomic<bool> failed{false};
      {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
          pool.emplace_back([&] {
            for (;;) {
              const std::size_t p = next.fetch_add(1);
              if (p >= partitions || failed.load()) return;
              try {
                fn(p);
              } catch (...) {
                errors[p] = std::current_exception();
                failed.store(true);
              }
            }
          });
        }
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  /// Element-wise transform. Lazy unless `ds` is materialized, in which case
  /// the derived blocks are computed now and retained.
  template <class T, class F>
  auto map(const PartitionedDataset<T>& ds, F fn) const
      -> PartitionedDataset<std::decay_t<std::invoke_result_t<F&, const T&>>> {
    using U = std::decay_t<std::invoke_result_t<F&, const T&>>;
    if (ds.materialized()) {
      std::vector<std::vector<U>> out(ds.partition_count());
      for_each_partition(ds.partition_count(), [&](std::size_t p) {
        out[p].reserve(ds.partition_size(p));
        ds.scan(p, [&](const T& x) { out[p].push_back(fn(x)); });
      });
      PartitionedDataset<U> result(std::move(out), true);
      result.schema_ = ds.schema_;
      return result;
    }
    using Source = typename PartitionedDataset<U>::template MappedSource<T, F>;
    return PartitionedDataset<U>(std::make_shared<Source>(ds, std::move(fn)), false, ds.schema_);
  }

  /// Folds with a commutative, associative `g`: within partitions first,
  /// then across partitions in order.
  template <class T, class G>
  T reduce(const PartitionedDataset<T>& ds, G g) const {
    std::vector<std::optional<T>> partials(ds.partition_count());
    for_each_partition(ds.partition_count(), [&](std::size_t p) {
      std::optional<T> acc;
      ds.scan(p, [&](const T& x) {
        if (acc) {
          acc = g(std::move(*acc), x);
        } else {
          acc = x;
        }
      });
      partials[p] = std::move(acc);
    });
    std::optional<T> result;
    for (auto& part : partials) {
      if (!part) continue;
      result = result ? g(std::move(*result), std::move(*part)) : std::move(*part);
    }
    if (!result) throw InvalidArgument("reduce of an empty dataset");
    return std::move(*result);
  }

  /// Two-phase fold: seq(acc, x) accumulates into a fresh copy of `zero` per
  /// partition, comb(into, from) merges partition results in order. The
  /// summed `sizer` of the partition results is checked against
  /// max_result_bytes before combining.
  template <class T, class Acc, class Seq, class Comb, class Sizer = std::nullptr_t>
  Acc aggregate(const PartitionedDataset<T>& ds, const Acc& zero, Seq seq, Comb comb,
                Sizer sizer = nullptr) const {
    std::vector<std::optional<Acc>> partials(ds.partition_count());
    for_each_partition(ds.partition_count(), [&](std::size_t p) {
      Acc acc = zero;
      ds.scan(p, [&](const T& x) { seq(acc, x); });
      partials[p].emplace(std::move(acc));
    });
    if constexpr (!std::is_same_v<Sizer, std::nullptr_t>) {
      std::size_t bytes = 0;
      for (const auto& part : partials) bytes += sizer(*part);
      if (bytes > config_.max_result_bytes) throw CapacityError(bytes, config_.max_result_bytes);
    }
    Acc result = zero;
    for (auto& part : partials) comb(result, std::move(*part));
    return result;
  }

  template <class T>
  std::size_t count(const PartitionedDataset<T>& ds) const {
    std::size_t n = 0;
    for (std::size_t p = 0; p < ds.partition_count(); ++p) n += ds.partition_size(p);
    return n;
  }

  /// `m` distinct elements drawn uniformly over global positions, in draw
  /// order. The draw depends only on (n, m, seed), never on partitioning.
  template <class T>
  std::vector<T> take_sample(const PartitionedDataset<T>& ds, std::size_t m,
                             std::uint64_t seed) const {
    const auto positions = sample_positions(count(ds), m, seed);
    return fetch(ds, locate_positions(ds.partition_sizes(), positions));
  }

  /// Elements at (partition, offset) locations, in request order.
  template <class T>
  std::vector<T> fetch(const PartitionedDataset<T>& ds,
                       const std::vector<std::pair<std::size_t, std::size_t>>& where) const {
    std::unordered_map<std::size_t, std::vector<std::size_t>> wanted;
    for (std::size_t i = 0; i < where.size(); ++i) wanted[where[i].first].push_back(i);
    std::vector<std::optional<T>> out(where.size());
    for (const auto& [p, requests] : wanted) {
      std::unordered_map<std::size_t, std::vector<std::size_t>> by_offset;
      for (auto i : requests) by_offset[where[i].second].push_back(i);
      std::size_t offset = 0;
      ds.scan(p, [&](const T& x) {
        if (auto it = by_offset.find(offset); it != by_offset.end()) {
          for (auto i : it->second) out[i] = x;
        }
        ++offset;
      });
    }
    std::vector<T> result;
    result.reserve(out.size());
    for (auto& x : out) {
      if (!x) throw InvalidArgument("fetch location out of range");
      result.push_back(std::move(*x));
    }
    return result;
  }

 private:
  EngineConfig config_;
};

}  // namespace direlieff::engine
