#pragma once

#include <cstddef>
#include <vector>

#include "fgrn/dataio.hpp"
#include "fgrn/model.hpp"
#include "fgrn/scheduler.hpp"

namespace fgrn {

struct Evaluation {
  /// Records with a known class.
  std::size_t total = 0;
  std::size_t correct = 0;
  /// Records whose evidence has zero probability under the model; they count
  /// as errors and are left out of the confusion matrix.
  std::size_t contradictory = 0;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;

  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

/// Classifies every record with its class cell hidden.
Evaluation evaluate(const Model& model, const Dataset& data, const PassOptions& options = {});

struct HoldoutConfig {
  std::vector<std::size_t> hidden_dims{20};
  bool naive_bayes = false;
  /// 0 trains on every record and leaves the test side empty.
  double test_fraction = 0.3;
  /// Seeds the split and the initial matrices.
  std::uint64_t seed = 0;
  TrainConfig train;
};

struct HoldoutRun {
  Model model;
  Split split;
  TrainReport report;
  Evaluation train;
  Evaluation test;
  double seconds = 0.0;
};

/// Split, build, train, then evaluate both sides.
HoldoutRun run_holdout(const Dataset& data, const HoldoutConfig& config);

}  // namespace fgrn
