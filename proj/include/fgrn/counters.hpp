#pragma once

#include <algorithm>
#include <cstdint>

namespace fgrn {

/// Instrumentation for the cost claims. A vector product of length d adds one
/// to vector_multiplications and d to scalar_multiplications. Normalization
/// divisions are tracked on their own and never folded into the headline
/// multiplication figures.
struct OpCounters {
  std::uint64_t vector_multiplications = 0;
  std::uint64_t scalar_multiplications = 0;
  std::uint64_t normalization_divisions = 0;
  std::uint64_t peak_stored_pairs = 0;
  double wall_time = 0.0;

  void add_vector_products(std::uint64_t count, std::uint64_t length) {
    vector_multiplications += count;
    scalar_multiplications += count * length;
  }

  void merge(const OpCounters& other) {
    vector_multiplications += other.vector_multiplications;
    scalar_multiplications += other.scalar_multiplications;
    normalization_divisions += other.normalization_divisions;
    peak_stored_pairs = std::max(peak_stored_pairs, other.peak_stored_pairs);
    wall_time += other.wall_time;
  }

  void reset() { *this = OpCounters{}; }
};

}  // namespace fgrn
