#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fgrn/elements.hpp"
#include "fgrn/prob.hpp"

namespace fgrn {

struct VariableInfo {
  std::string name;
  std::vector<std::string> labels;

  std::size_t size() const { return labels.size(); }
};

/// A one-layer latent variable model in reduced normal form.
///
///   S_1 .. S_H      sources (priors)
///      |            selector maps onto the product space P (only when H > 1)
///   [diverter]      arity H + B, attachment order: tops first, then branches
///      |            one branch per bottom variable, alphabet |P|
///   SISO_j          |P| x |Y_j|
///      |
///   Y_1 .. Y_N [L]  bottom variables; the class variable, if any, is last
struct Model {
  std::vector<std::size_t> hidden_dims;
  std::vector<VariableInfo> hidden;
  std::vector<Source> sources;
  std::vector<SelectorMap> selectors;
  Diverter diverter;
  std::vector<SisoBlock> blocks;
  std::vector<VariableInfo> variables;
  std::optional<std::size_t> class_index;
  bool naive_bayes = false;

  std::size_t hidden_count() const { return hidden_dims.size(); }
  std::size_t product_size() const;
  std::size_t bottom_count() const { return blocks.size(); }
  /// N: bottom variables excluding the class variable.
  std::size_t observed_count() const { return blocks.size() - (class_index ? 1 : 0); }
  bool uses_selectors() const { return hidden_dims.size() > 1; }

  /// Checks the wiring invariants; throws ShapeMismatch / InvalidSpec.
  void validate() const;
};

}  // namespace fgrn
