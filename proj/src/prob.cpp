#include "fgrn/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fgrn/errors.hpp"

namespace fgrn {

namespace {

double left_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

std::size_t argmax_of(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void check_length(std::size_t got, std::size_t want) {
  if (got != want) throw LengthMismatch(got, want);
}

}  // namespace

Message::Message(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw ShapeMismatch("message length " + std::to_string(values_.size()) + " < 2");
  }
  for (double x : values_) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidSpec("message entries must be finite and >= 0");
  }
}

Message Message::uniform(std::size_t size) {
  return Message(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Message Message::delta(std::size_t size, std::size_t index) {
  if (index >= size) throw IndexOutOfRange(index, size);
  std::vector<double> v(size, 0.0);
  v[index] = 1.0;
  return Message(std::move(v));
}

Message Message::zeros(std::size_t size) { return Message(std::vector<double>(size, 0.0)); }

double Message::sum() const { return left_sum(values_); }

bool Message::is_uniform() const {
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] != values_[0]) return false;
  }
  return true;
}

void normalize_in_place(std::span<double> values, OpCounters* counters) {
  const double s = left_sum(values);
  if (!(s > 0.0) || !std::isfinite(s)) throw AllZeroMessage();
  // Division leaves the sum within d·eps of 1, so anything inside this band
  // is already a normalized vector and is left alone.
  const double band = 4.0 * static_cast<double>(values.size()) * std::numeric_limits<double>::epsilon();
  if (std::abs(s - 1.0) <= band) return;
  for (double& x : values) x /= s;
  if (counters) counters->normalization_divisions += values.size();
}

Message normalize(const Message& m, OpCounters* counters) {
  Message out = m;
  normalize_in_place(out.mutable_values(), counters);
  return out;
}

Message hadamard(const Message& a, const Message& b, OpCounters* counters) {
  check_length(a.size(), b.size());
  Message out = a;
  auto o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= b[i];
  if (counters) counters->add_vector_products(1, o.size());
  return out;
}

std::size_t argmax(const Message& m) { return argmax_of(m.values()); }

RowStochasticMatrix::RowStochasticMatrix(std::size_t rows, std::size_t cols,
                                         std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows_ < 1 || cols_ < 2) throw ShapeMismatch("matrix needs >= 1 row and >= 2 columns");
  if (entries_.size() != rows_ * cols_) throw LengthMismatch(entries_.size(), rows_ * cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    auto r = row(i);
    for (double x : r) {
      if (!(x >= 0.0 && x <= 1.0)) throw InvalidSpec("matrix entry outside [0,1]");
    }
    if (std::abs(left_sum(r) - 1.0) > 1e-12) {
      throw InvalidSpec("matrix row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

RowStochasticMatrix RowStochasticMatrix::identity(std::size_t n) {
  std::vector<double> e(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
  return RowStochasticMatrix(n, n, std::move(e));
}

RowStochasticMatrix RowStochasticMatrix::uniform(std::size_t rows, std::size_t cols) {
  std::vector<double> e(rows * cols, 1.0 / static_cast<double>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    normalize_in_place(std::span<double>(e).subspan(i * cols, cols));
  }
  return RowStochasticMatrix(rows, cols, std::move(e));
}

RowStochasticMatrix RowStochasticMatrix::random(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> e(rows * cols);
  for (double& x : e) x = rng.exponential();
  for (std::size_t i = 0; i < rows; ++i) {
    normalize_in_place(std::span<double>(e).subspan(i * cols, cols));
  }
  return RowStochasticMatrix(rows, cols, std::move(e));
}

RowStochasticMatrix RowStochasticMatrix::from_accumulator(std::size_t rows, std::size_t cols,
                                                          std::vector<double> accumulator,
                                                          const RowStochasticMatrix& fallback) {
  if (accumulator.size() != rows * cols) throw LengthMismatch(accumulator.size(), rows * cols);
  if (fallback.rows() != rows || fallback.cols() != cols) {
    throw ShapeMismatch("fallback matrix dimensions");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    auto r = std::span<double>(accumulator).subspan(i * cols, cols);
    if (left_sum(r) > 0.0) {
      normalize_in_place(r);
      // A row already inside the normalization band is left as is, which can
      // leave a dominant entry a few ulps above 1.
      for (double& x : r) x = std::min(x, 1.0);
    } else {
      auto old = fallback.row(i);
      std::copy(old.begin(), old.end(), r.begin());
    }
  }
  return RowStochasticMatrix(rows, cols, std::move(accumulator));
}

RowStochasticMatrix RowStochasticMatrix::with_floor(double floor) const {
  if (!(floor >= 0.0 && floor * static_cast<double>(cols_) < 1.0)) {
    throw InvalidSpec("entry floor must be in [0, 1/cols)");
  }
  std::vector<double> e = entries_;
  for (std::size_t i = 0; i < rows_; ++i) {
    auto r = std::span<double>(e).subspan(i * cols_, cols_);
    bool raised = false;
    for (double& x : r) {
      if (x < floor) {
        x = floor;
        raised = true;
      }
    }
    if (!raised) continue;
    normalize_in_place(r);
    for (double& x : r) x = std::min(x, 1.0);
  }
  return RowStochasticMatrix(rows_, cols_, std::move(e));
}

double RowStochasticMatrix::max_abs_diff(const RowStochasticMatrix& other) const {
  check_length(entries_.size(), other.entries_.size());
  double d = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    d = std::max(d, std::abs(entries_[i] - other.entries_[i]));
  }
  return d;
}

Message matvec_backward(const RowStochasticMatrix& m, const Message& b, OpCounters* counters) {
  check_length(b.size(), m.cols());
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * b[j];
    out[i] = acc;
  }
  if (counters) counters->add_vector_products(m.rows(), m.cols());
  normalize_in_place(out, counters);
  return Message(std::move(out));
}

Message matvec_forward(const RowStochasticMatrix& m, const Message& f, OpCounters* counters) {
  check_length(f.size(), m.rows());
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    const double fi = f[i];
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j] * fi;
  }
  if (counters) counters->add_vector_products(m.rows(), m.cols());
  normalize_in_place(out, counters);
  return Message(std::move(out));
}

std::vector<SelectorMap> build_selector_maps(std::span<const std::size_t> dims) {
  if (dims.empty()) throw EmptyDims();
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d < 2) throw InvalidSpec("hidden cardinality must be >= 2");
    if (total > (std::size_t{1} << 26) / d) throw InvalidSpec("product space too large");
    total *= d;
  }
  std::vector<SelectorMap> maps;
  maps.reserve(dims.size());
  std::size_t stride = total;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    stride /= dims[i];
    SelectorMap map{i, dims[i], std::vector<std::uint32_t>(total)};
    for (std::size_t p = 0; p < total; ++p) {
      map.entries[p] = static_cast<std::uint32_t>((p / stride) % dims[i]);
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

Message selector_forward(const SelectorMap& map, const Message& f_component, OpCounters* counters) {
  check_length(f_component.size(), map.radix);
  std::vector<double> out(map.product_size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = f_component[map.entries[p]];
  normalize_in_place(out, counters);
  return Message(std::move(out));
}

Message selector_backward(const SelectorMap& map, const Message& b_product, OpCounters* counters) {
  check_length(b_product.size(), map.product_size());
  std::vector<double> out(map.radix, 0.0);
  for (std::size_t p = 0; p < map.product_size(); ++p) out[map.entries[p]] += b_product[p];
  normalize_in_place(out, counters);
  return Message(std::move(out));
}

}  // namespace fgrn
