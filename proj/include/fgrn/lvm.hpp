#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fgrn/model.hpp"
#include "fgrn/scheduler.hpp"

namespace fgrn {

struct LvmSpec {
  std::vector<std::size_t> hidden_dims;
  std::vector<VariableInfo> observed;
  std::optional<VariableInfo> class_variable;
  /// Requires a class variable, H = 1 and |L| = |S|. The class block becomes
  /// a frozen identity.
  bool naive_bayes = false;
  std::uint64_t seed = 0;
};

/// Uniform priors, Dirichlet(1) rows for every learnable SISO matrix.
Model build(const LvmSpec& spec);

/// Observed evidence is N entries (one per observed variable, nullopt =
/// missing); the class variable, if any, is appended as b_l.
Evidence make_evidence(const Model& model, const std::vector<std::optional<Message>>& observed,
                       const std::optional<Message>& b_l = std::nullopt);

struct Classification {
  Message f_l;
  std::size_t label = 0;
};

Classification classify(const Model& model, const std::vector<std::optional<Message>>& observed,
                        const PassOptions& options = {});

struct Completion {
  /// Forward messages at every bottom variable, in model order.
  std::vector<Message> forwards;
  std::vector<bool> known;
  /// normalize(f_L ⊙ b_L) when b_L carries information, f_L otherwise.
  std::optional<Message> class_posterior;
};

Completion complete(const Model& model, const std::vector<std::optional<Message>>& observed,
                    const std::optional<Message>& b_l = std::nullopt,
                    const PassOptions& options = {});

/// δ_j on the class backward; returns the forwards at Y_1..Y_N.
std::vector<Message> prototype(const Model& model, std::size_t j, const PassOptions& options = {});

/// δ_j as the source forward (H = 1 only); returns the forwards at Y_1..Y_N.
std::vector<Message> centroid(const Model& model, std::size_t j, const PassOptions& options = {});

}  // namespace fgrn
