#pragma once

// Numeric primitives shared by every FGrn element: probability messages,
// row-stochastic matrices and the compact product-space selector maps.
//
// Every reduction runs left to right by index so results are bitwise
// reproducible regardless of how work is split across threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fgrn/counters.hpp"
#include "fgrn/rng.hpp"

namespace fgrn {

/// Nonnegative belief over a discrete alphabet (length >= 2).
class Message {
 public:
  Message() = default;
  explicit Message(std::vector<double> values);

  static Message uniform(std::size_t size);
  static Message delta(std::size_t size, std::size_t index);
  static Message zeros(std::size_t size);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  double sum() const;
  /// True when all entries are bitwise equal.
  bool is_uniform() const;

  friend bool operator==(const Message&, const Message&) = default;

 private:
  std::vector<double> values_;
};

/// Divides by the left-to-right sum. Inputs whose sum is already within
/// 4·d·eps of 1 come back unchanged, which makes the operation idempotent.
Message normalize(const Message& m, OpCounters* counters = nullptr);

/// In-place variant used on hot paths.
void normalize_in_place(std::span<double> values, OpCounters* counters = nullptr);

Message hadamard(const Message& a, const Message& b, OpCounters* counters = nullptr);

/// Lowest index wins ties.
std::size_t argmax(const Message& m);

class RowStochasticMatrix {
 public:
  RowStochasticMatrix() = default;
  /// Row-major entries; every row must sum to 1 within 1e-12.
  RowStochasticMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static RowStochasticMatrix identity(std::size_t n);
  static RowStochasticMatrix uniform(std::size_t rows, std::size_t cols);
  /// Each row drawn from a symmetric Dirichlet(1), i.e. uniform on the simplex.
  static RowStochasticMatrix random(std::size_t rows, std::size_t cols, Rng& rng);
  /// Normalizes each row of a nonnegative accumulator; all-zero rows are
  /// taken from `fallback`.
  static RowStochasticMatrix from_accumulator(std::size_t rows, std::size_t cols,
                                              std::vector<double> accumulator,
                                              const RowStochasticMatrix& fallback);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(entries_).subspan(i * cols_, cols_);
  }
  std::span<const double> entries() const { return entries_; }

  /// Raises every entry below `floor` to `floor` and renormalizes the rows
  /// that changed. floor must be in [0, 1/cols).
  RowStochasticMatrix with_floor(double floor) const;

  /// Largest absolute entrywise difference.
  double max_abs_diff(const RowStochasticMatrix& other) const;

  friend bool operator==(const RowStochasticMatrix&, const RowStochasticMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

/// b_V ∝ θ b_Y
Message matvec_backward(const RowStochasticMatrix& m, const Message& b,
                        OpCounters* counters = nullptr);
/// f_Y ∝ θᵀ f_V
Message matvec_forward(const RowStochasticMatrix& m, const Message& f,
                       OpCounters* counters = nullptr);

/// One hidden component's view of the product space: entry p holds the digit
/// of that component in the mixed-radix expansion of p (component 0 most
/// significant). This is the per-row active column of the Kronecker mapping
/// matrices, read in the transposed orientation.
struct SelectorMap {
  std::size_t component_index = 0;
  std::size_t radix = 0;
  std::vector<std::uint32_t> entries;

  std::size_t product_size() const { return entries.size(); }
};

std::vector<SelectorMap> build_selector_maps(std::span<const std::size_t> dims);

/// Spreads a component message onto the product space.
Message selector_forward(const SelectorMap& map, const Message& f_component,
                         OpCounters* counters = nullptr);
/// Marginalizes a product-space message onto one component.
Message selector_backward(const SelectorMap& map, const Message& b_product,
                          OpCounters* counters = nullptr);

}  // namespace fgrn
