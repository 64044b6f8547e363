#pragma once

#include <cstdint>
#include <vector>

#include "fgrn/counters.hpp"

namespace fgrn {

struct InferenceBenchSpec {
  std::vector<std::size_t> hidden_dims{10};
  std::size_t observed = 10;
  std::size_t alphabet = 2;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  /// Passes timed per implementation; counters are for a single pass.
  std::size_t repetitions = 1000;
};

struct PassCost {
  /// Counters for one full pass with every observed variable known.
  OpCounters pass;
  /// Counters for the diverter alone on the same inputs.
  OpCounters diverter;
  /// Mean seconds per pass.
  double seconds_per_pass = 0.0;
};

struct InferenceBench {
  std::size_t product_size = 0;
  std::size_t arity = 0;
  PassCost optimized;
  PassCost naive;
  /// Largest difference between the two implementations' messages.
  double max_message_diff = 0.0;
};

InferenceBench bench_inference(const InferenceBenchSpec& spec);

struct MlBench {
  OpCounters direct;
  OpCounters fast;
  double seconds_direct = 0.0;
  double seconds_fast = 0.0;
  double max_entry_diff = 0.0;
};

/// One ML update on `samples` random pairs for a rows x cols block, timed
/// over `repetitions` calls; counters are for a single call.
MlBench bench_ml(std::size_t rows, std::size_t cols, std::size_t samples, std::uint64_t seed,
                 std::size_t repetitions = 200);

}  // namespace fgrn
