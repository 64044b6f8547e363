#pragma once

// The supervisor: schedules message passing over a Model for inference and
// drives batch and incremental learning.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fgrn/counters.hpp"
#include "fgrn/model.hpp"
#include "fgrn/worker_pool.hpp"

namespace fgrn {

/// What gets injected into the graph for one pass. A missing bottom entry
/// means the variable is unknown: its backward is uniform and flagged so the
/// SISO block can skip the product.
struct Evidence {
  std::vector<std::optional<Message>> bottom;
  /// Optional replacement for a source's forward message (e.g. a delta on a
  /// cluster). Empty or nullopt entries fall back to the prior.
  std::vector<std::optional<Message>> source_forward;

  static Evidence none(const Model& model);
};

enum class DiverterImpl { kChain, kNaive };

struct PassOptions {
  DiverterImpl diverter = DiverterImpl::kChain;
  /// Replace the SISO product for unknown variables with the uniform message.
  bool unknown_shortcut = true;
  unsigned workers = 1;
};

/// Every link's messages after a pass.
struct Snapshot {
  std::vector<Link> sources;   // S_h, alphabet |S_h|
  std::vector<Link> products;  // selector <-> diverter, alphabet |P| (H > 1 only)
  std::vector<Link> branches;  // diverter <-> SISO_j, alphabet |P|
  std::vector<Link> bottom;    // Y_j (and L), alphabet |Y_j|
  std::vector<bool> known;

  /// Link attached to the diverter from above for hidden component h.
  const Link& top(std::size_t h) const { return products.empty() ? sources[h] : products[h]; }
};

/// Three steps: load evidence; propagate up through SISO blocks and selectors;
/// fire the diverter and propagate down.
Snapshot infer_pass(const Model& model, const Evidence& evidence, const PassOptions& options = {},
                    OpCounters* counters = nullptr);

/// Synchronous flooding schedule used as a reference: every element fires in
/// every step from the previous step's messages, starting from uniform
/// messages everywhere.
Snapshot flood(const Model& model, const Evidence& evidence, std::size_t steps);

enum class TrainMode { kBatch, kIncremental };

struct TrainConfig {
  std::size_t epochs = 20;
  /// K; incremental mode always uses one cycle.
  std::size_t max_ml_iters = 10;
  double ml_tolerance = 1e-6;
  TrainMode mode = TrainMode::kBatch;
  std::uint64_t seed = 0;
  /// Seeded per-epoch reshuffle of the sample order (incremental only).
  bool shuffle = false;
  bool freeze_sources = false;
  /// Lower bound applied to every learned θ entry after each epoch's ML
  /// phase (rows renormalized). 0 keeps the plain recursion, whose entries
  /// can reach exact zeros and make unseen test patterns contradictory.
  double theta_floor = 0.0;
  SourceUpdateRule source_rule = SourceUpdateRule::kProductWithSummedBackwards;
  PassOptions pass;
};

struct EpochRecord {
  std::size_t epoch = 0;
  /// Σ over learnable blocks of Σ_n log(fᵀθb), at the epoch's starting θ.
  double log_likelihood = 0.0;
  /// Same quantity before each ML cycle of the epoch and after the last one.
  std::vector<double> inner_log_likelihood;
  std::size_t ml_iterations = 0;
  /// Samples whose pass met a zero-mass product and were left out.
  std::size_t skipped_samples = 0;
  double max_theta_change = 0.0;
  double wall_time = 0.0;
  std::uint64_t multiplications = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  OpCounters counters;
  /// Per SISO block, the most message pairs held at once.
  std::vector<std::size_t> peak_stored_pairs;
};

TrainReport train_batch(Model& model, const std::vector<Evidence>& samples,
                        const TrainConfig& config);
TrainReport train_incremental(Model& model, const std::vector<Evidence>& samples,
                              const TrainConfig& config);
/// Dispatches on config.mode.
TrainReport train(Model& model, const std::vector<Evidence>& samples, const TrainConfig& config);

}  // namespace fgrn
