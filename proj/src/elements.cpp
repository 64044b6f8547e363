#include "fgrn/elements.hpp"

#include <cmath>
#include <string>

#include "fgrn/errors.hpp"

namespace fgrn {

Message marginal(const Link& link, OpCounters* counters) {
  Message p = hadamard(link.forward, link.backward, counters);
  normalize_in_place(p.mutable_values(), counters);
  return p;
}

// ---------------------------------------------------------------- Source

Source::Source(Message prior, bool frozen) : frozen_(frozen) { set_prior(std::move(prior)); }

void Source::set_prior(Message prior) {
  if (std::abs(prior.sum() - 1.0) > 1e-12) prior = normalize(prior);
  prior_ = std::move(prior);
  accumulator_ = Message::zeros(prior_.size());
}

void Source::set_batch_mode(bool on) {
  batch_mode_ = on;
  accumulator_ = Message::zeros(prior_.size());
}

void Source::accumulate(const Message& backward, SourceUpdateRule rule, OpCounters* counters) {
  if (backward.size() != prior_.size()) throw LengthMismatch(backward.size(), prior_.size());
  Message term = rule == SourceUpdateRule::kAveragePosterior
                     ? hadamard(prior_, backward, counters)
                     : backward;
  normalize_in_place(term.mutable_values(), counters);
  auto acc = accumulator_.mutable_values();
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term[i];
}

const Message& Source::update(SourceUpdateRule rule, OpCounters* counters) {
  Message acc = std::move(accumulator_);
  accumulator_ = Message::zeros(prior_.size());
  if (frozen_) return prior_;
  Message next = rule == SourceUpdateRule::kAveragePosterior ? std::move(acc)
                                                             : hadamard(prior_, acc, counters);
  normalize_in_place(next.mutable_values(), counters);
  prior_ = std::move(next);
  return prior_;
}

// -------------------------------------------------------------- Diverter

Diverter::Diverter(std::size_t arity, std::size_t dimension)
    : arity_(arity), dimension_(dimension) {
  if (arity < 2) throw InvalidSpec("diverter arity must be >= 2");
  if (dimension < 2) throw InvalidSpec("diverter alphabet must be >= 2");
  buffers_.assign(arity - 1, Message::zeros(dimension));
}

void Diverter::check(std::span<const Message> incoming, std::span<Message> outgoing) const {
  if (incoming.size() != arity_) throw LengthMismatch(incoming.size(), arity_);
  if (outgoing.size() != arity_) throw LengthMismatch(outgoing.size(), arity_);
  for (const Message& m : incoming) {
    if (m.size() != dimension_) throw LengthMismatch(m.size(), dimension_);
  }
}

namespace {

void multiply_into(std::span<double> out, std::span<const double> a, std::span<const double> b) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] * b[k];
}

std::span<double> slot_values(Message& slot, std::size_t dimension) {
  if (slot.size() != dimension) slot = Message::zeros(dimension);
  return slot.mutable_values();
}

void finish_output(Message& slot, std::size_t index, OpCounters* counters) {
  try {
    normalize_in_place(slot.mutable_values(), counters);
  } catch (const AllZeroMessage&) {
    throw AllZeroMessage("diverter output " + std::to_string(index));
  }
}

void emit(Message& slot, std::span<const double> values, std::size_t index,
          OpCounters* counters) {
  auto out = slot_values(slot, values.size());
  std::copy(values.begin(), values.end(), out.begin());
  finish_output(slot, index, counters);
}

}  // namespace

void Diverter::propagate_chain(std::span<const Message> incoming, std::span<Message> outgoing,
                               OpCounters* counters) {
  check(incoming, outgoing);
  const std::size_t m = arity_;
  // Outward: buffers_[k] = x_0 ⊙ ... ⊙ x_k.
  {
    auto first = buffers_[0].mutable_values();
    auto x0 = incoming[0].values();
    std::copy(x0.begin(), x0.end(), first.begin());
  }
  for (std::size_t k = 1; k + 1 < m; ++k) {
    multiply_into(buffers_[k].mutable_values(), buffers_[k - 1].values(), incoming[k].values());
  }
  emit(outgoing[m - 1], buffers_[m - 2].values(), m - 1, counters);

  // Return: the running suffix x_{i+1} ⊙ ... ⊙ x_{M-1} takes over the slot
  // whose prefix was just consumed.
  std::size_t suffix = m - 2;
  {
    auto s = buffers_[suffix].mutable_values();
    auto last = incoming[m - 1].values();
    std::copy(last.begin(), last.end(), s.begin());
  }
  for (std::size_t i = m - 2; i >= 1; --i) {
    multiply_into(slot_values(outgoing[i], dimension_), buffers_[i - 1].values(),
                  buffers_[suffix].values());
    finish_output(outgoing[i], i, counters);
    // The prefix in slot i-1 is no longer needed.
    multiply_into(buffers_[i - 1].mutable_values(), buffers_[suffix].values(),
                  incoming[i].values());
    suffix = i - 1;
  }
  emit(outgoing[0], buffers_[suffix].values(), 0, counters);

  if (counters && m >= 3) counters->add_vector_products(3 * (m - 2), dimension_);
}

void Diverter::propagate_naive(std::span<const Message> incoming, std::span<Message> outgoing,
                               OpCounters* counters) const {
  check(incoming, outgoing);
  const std::size_t m = arity_;
  for (std::size_t i = 0; i < m; ++i) {
    auto product = slot_values(outgoing[i], dimension_);
    bool first = true;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      auto x = incoming[j].values();
      if (first) {
        std::copy(x.begin(), x.end(), product.begin());
        first = false;
      } else {
        for (std::size_t k = 0; k < dimension_; ++k) product[k] *= x[k];
      }
    }
    finish_output(outgoing[i], i, counters);
  }
  if (counters) counters->add_vector_products(m * (m - 2), dimension_);
}

std::vector<Message> diverter_propagate_naive(std::span<const Message> incoming,
                                              OpCounters* counters) {
  if (incoming.empty()) throw InvalidSpec("diverter arity must be >= 2");
  Diverter d(incoming.size(), incoming[0].size());
  std::vector<Message> out(incoming.size());
  d.propagate_naive(incoming, out, counters);
  return out;
}

std::vector<Message> diverter_propagate_chain(std::span<const Message> incoming,
                                              OpCounters* counters) {
  if (incoming.empty()) throw InvalidSpec("diverter arity must be >= 2");
  Diverter d(incoming.size(), incoming[0].size());
  std::vector<Message> out(incoming.size());
  d.propagate_chain(incoming, out, counters);
  return out;
}

// -------------------------------------------------------------------- ML

MlAccumulator::MlAccumulator(const RowStochasticMatrix& theta0)
    : theta0_(&theta0),
      accumulator_(theta0.rows() * theta0.cols(), 0.0),
      scratch_(theta0.rows() * theta0.cols(), 0.0) {}

void MlAccumulator::add(const Message& f_v, const Message& b_y, OpCounters* counters) {
  const RowStochasticMatrix& theta = *theta0_;
  const std::size_t rows = theta.rows();
  const std::size_t cols = theta.cols();
  if (f_v.size() != rows) throw LengthMismatch(f_v.size(), rows);
  if (b_y.size() != cols) throw LengthMismatch(b_y.size(), cols);
  ++samples_;

  double denominator = 0.0;
  for (std::size_t l = 0; l < rows; ++l) {
    auto r = theta.row(l);
    const double fl = f_v[l];
    double* w = scratch_.data() + l * cols;
    for (std::size_t m = 0; m < cols; ++m) {
      w[m] = (r[m] * fl) * b_y[m];
      denominator += w[m];
    }
  }
  if (counters) counters->scalar_multiplications += 2 * rows * cols;
  if (!(denominator > 0.0)) return;

  ++valid_;
  log_likelihood_ += std::log(denominator);
  for (std::size_t k = 0; k < accumulator_.size(); ++k) accumulator_[k] += scratch_[k] / denominator;
}

RowStochasticMatrix MlAccumulator::finish() const {
  if (valid_ == 0) throw NoValidSamples();
  return RowStochasticMatrix::from_accumulator(theta0_->rows(), theta0_->cols(), accumulator_,
                                               *theta0_);
}

RowStochasticMatrix ml_update_fast(const RowStochasticMatrix& theta0,
                                   std::span<const MessagePair> pairs, OpCounters* counters) {
  MlAccumulator acc(theta0);
  for (const MessagePair& p : pairs) acc.add(p.f_v, p.b_y, counters);
  return acc.finish();
}

RowStochasticMatrix ml_update_direct(const RowStochasticMatrix& theta0,
                                     std::span<const MessagePair> pairs, OpCounters* counters) {
  const std::size_t rows = theta0.rows();
  const std::size_t cols = theta0.cols();
  std::vector<double> sum(rows * cols, 0.0);
  std::vector<double> input_mass(rows, 0.0);
  std::vector<double> theta_b(rows);
  std::size_t valid = 0;

  for (const MessagePair& p : pairs) {
    if (p.f_v.size() != rows) throw LengthMismatch(p.f_v.size(), rows);
    if (p.b_y.size() != cols) throw LengthMismatch(p.b_y.size(), cols);
    // fᵀ (θ b)
    for (std::size_t l = 0; l < rows; ++l) {
      auto r = theta0.row(l);
      double acc = 0.0;
      for (std::size_t m = 0; m < cols; ++m) acc += r[m] * p.b_y[m];
      theta_b[l] = acc;
    }
    double denominator = 0.0;
    for (std::size_t l = 0; l < rows; ++l) denominator += p.f_v[l] * theta_b[l];
    if (counters) counters->scalar_multiplications += rows * (3 * cols + 1);
    if (!(denominator > 0.0)) continue;
    ++valid;
    for (std::size_t l = 0; l < rows; ++l) {
      input_mass[l] += p.f_v[l];
      auto r = theta0.row(l);
      for (std::size_t m = 0; m < cols; ++m) {
        const double outer = p.f_v[l] * p.b_y[m];
        sum[l * cols + m] += (r[m] * outer) / denominator;
      }
    }
  }
  if (valid == 0) throw NoValidSamples();

  for (std::size_t l = 0; l < rows; ++l) {
    for (std::size_t m = 0; m < cols; ++m) {
      sum[l * cols + m] = input_mass[l] > 0.0 ? sum[l * cols + m] / input_mass[l] : 0.0;
    }
  }
  return RowStochasticMatrix::from_accumulator(rows, cols, std::move(sum), theta0);
}

double pair_log_likelihood(const RowStochasticMatrix& theta, std::span<const MessagePair> pairs) {
  MlAccumulator acc(theta);
  for (const MessagePair& p : pairs) acc.add(p.f_v, p.b_y);
  return acc.log_likelihood();
}

// ------------------------------------------------------------ SisoBlock

SisoBlock::SisoBlock(RowStochasticMatrix theta, bool frozen)
    : theta_(std::move(theta)), frozen_(frozen) {}

void SisoBlock::set_theta(RowStochasticMatrix theta) {
  if (!theta_.entries().empty() &&
      (theta.rows() != theta_.rows() || theta.cols() != theta_.cols())) {
    throw ShapeMismatch("SISO matrix dimensions cannot change");
  }
  theta_ = std::move(theta);
}

void SisoBlock::set_batch_mode(bool on) {
  batch_mode_ = on;
  stored_.clear();
}

Message SisoBlock::forward(const Message& f_v, OpCounters* counters) const {
  if (paused_) throw Paused();
  return matvec_forward(theta_, f_v, counters);
}

Message SisoBlock::backward(const Message& b_y, bool known, OpCounters* counters) const {
  if (b_y.size() != theta_.cols()) throw LengthMismatch(b_y.size(), theta_.cols());
  if (!known) return Message::uniform(theta_.rows());
  return matvec_backward(theta_, b_y, counters);
}

void SisoBlock::store(Message f_v, Message b_y) {
  if (!batch_mode_) throw NotInBatchMode();
  if (f_v.size() != theta_.rows()) throw LengthMismatch(f_v.size(), theta_.rows());
  if (b_y.size() != theta_.cols()) throw LengthMismatch(b_y.size(), theta_.cols());
  stored_.push_back(MessagePair{std::move(f_v), std::move(b_y)});
  peak_stored_ = std::max(peak_stored_, stored_.size());
}

}  // namespace fgrn
