#include "fgrn/model.hpp"

#include <string>

#include "fgrn/errors.hpp"

namespace fgrn {

std::size_t Model::product_size() const {
  std::size_t p = 1;
  for (std::size_t d : hidden_dims) p *= d;
  return p;
}

void Model::validate() const {
  const std::size_t h = hidden_dims.size();
  if (h == 0) throw EmptyDims();
  if (blocks.empty()) throw InvalidSpec("model has no bottom variables");
  if (sources.size() != h) throw ShapeMismatch("one source per hidden variable");
  if (hidden.size() != h) throw ShapeMismatch("one label table per hidden variable");
  for (std::size_t i = 0; i < h; ++i) {
    if (sources[i].prior().size() != hidden_dims[i] || hidden[i].size() != hidden_dims[i]) {
      throw ShapeMismatch("hidden variable " + std::to_string(i) + " alphabet");
    }
  }
  const std::size_t p = product_size();
  if (h > 1) {
    if (selectors.size() != h) throw ShapeMismatch("one selector per hidden variable");
    for (std::size_t i = 0; i < h; ++i) {
      if (selectors[i].radix != hidden_dims[i] || selectors[i].product_size() != p) {
        throw ShapeMismatch("selector " + std::to_string(i));
      }
    }
  } else if (!selectors.empty()) {
    throw ShapeMismatch("single hidden variable takes no selector");
  }
  if (diverter.arity() != h + blocks.size() || diverter.dimension() != p) {
    throw ShapeMismatch("diverter arity or alphabet");
  }
  if (variables.size() != blocks.size()) throw ShapeMismatch("one label table per SISO block");
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (blocks[j].theta().rows() != p || blocks[j].theta().cols() != variables[j].size()) {
      throw ShapeMismatch("SISO block " + std::to_string(j) + " dimensions");
    }
  }
  if (class_index && *class_index != blocks.size() - 1) {
    throw ShapeMismatch("class variable must be the last bottom variable");
  }
  if (naive_bayes && !class_index) throw InvalidSpec("naive Bayes needs a class variable");
}

}  // namespace fgrn
