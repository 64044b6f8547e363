#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fgrn/counters.hpp"
#include "fgrn/prob.hpp"

namespace fgrn {

/// A discrete variable edge: one forward and one backward message at a time.
struct Link {
  Link() = default;
  Link(std::string link_name, std::size_t alphabet)
      : name(std::move(link_name)),
        alphabet_size(alphabet),
        forward(Message::uniform(alphabet)),
        backward(Message::uniform(alphabet)) {}

  std::string name;
  std::size_t alphabet_size = 0;
  Message forward;
  Message backward;
};

/// normalize(forward ⊙ backward)
Message marginal(const Link& link, OpCounters* counters = nullptr);

enum class SourceUpdateRule {
  /// prior ← normalize(prior ⊙ Σ_n b[n])
  kProductWithSummedBackwards,
  /// prior ← normalize(Σ_n normalize(prior ⊙ b[n]))
  kAveragePosterior,
};

class Source {
 public:
  Source() = default;
  explicit Source(Message prior, bool frozen = false);

  const Message& prior() const { return prior_; }
  const Message& accumulator() const { return accumulator_; }
  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen) { frozen_ = frozen; }
  void set_prior(Message prior);

  bool batch_mode() const { return batch_mode_; }
  /// Leaving batch mode discards any partial accumulation.
  void set_batch_mode(bool on);

  /// Adds one incoming backward message (normalized) to the accumulator.
  void accumulate(const Message& backward,
                  SourceUpdateRule rule = SourceUpdateRule::kProductWithSummedBackwards,
                  OpCounters* counters = nullptr);

  /// Applies and clears the accumulator; returns the (possibly unchanged) prior.
  const Message& update(SourceUpdateRule rule = SourceUpdateRule::kProductWithSummedBackwards,
                        OpCounters* counters = nullptr);

 private:
  Message prior_;
  Message accumulator_;
  bool frozen_ = false;
  bool batch_mode_ = false;
};

/// Replicator block. Attachment order is fixed at construction and is part of
/// the model, because the chain algorithm's association order depends on it.
class Diverter {
 public:
  Diverter() = default;
  Diverter(std::size_t arity, std::size_t dimension);

  std::size_t arity() const { return arity_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t buffer_count() const { return buffers_.size(); }

  /// Double cascade: prefix products on the way out, suffix products on the
  /// way back in the same M-1 slots. 3(M-2) vector products for M >= 3.
  void propagate_chain(std::span<const Message> incoming, std::span<Message> outgoing,
                       OpCounters* counters = nullptr);

  /// Product of all-but-one for every output: M(M-2) vector products.
  void propagate_naive(std::span<const Message> incoming, std::span<Message> outgoing,
                       OpCounters* counters = nullptr) const;

 private:
  void check(std::span<const Message> incoming, std::span<Message> outgoing) const;

  std::size_t arity_ = 0;
  std::size_t dimension_ = 0;
  std::vector<Message> buffers_;
};

std::vector<Message> diverter_propagate_naive(std::span<const Message> incoming,
                                              OpCounters* counters = nullptr);
std::vector<Message> diverter_propagate_chain(std::span<const Message> incoming,
                                              OpCounters* counters = nullptr);

/// One stored learning sample: the forward reaching the block from the
/// diverter side and the backward reaching it from the observation side.
struct MessagePair {
  Message f_v;
  Message b_y;
};

/// Streams samples into the ML recursion with θ⁰ held fixed. finish() yields
/// the same matrix ml_update_fast would for the same samples in the same order.
class MlAccumulator {
 public:
  explicit MlAccumulator(const RowStochasticMatrix& theta0);

  /// Per entry: w = (θ⁰_lm f_l) b_m, whose running sum is fᵀθ⁰b.
  /// 2|V||Y| scalar multiplications. Zero-denominator samples are skipped.
  void add(const Message& f_v, const Message& b_y, OpCounters* counters = nullptr);

  std::size_t samples() const { return samples_; }
  std::size_t valid_samples() const { return valid_; }
  /// Σ log(fᵀθ⁰b) over valid samples.
  double log_likelihood() const { return log_likelihood_; }

  /// Throws NoValidSamples if nothing usable was added.
  RowStochasticMatrix finish() const;

 private:
  const RowStochasticMatrix* theta0_;
  std::vector<double> accumulator_;
  std::vector<double> scratch_;
  std::size_t samples_ = 0;
  std::size_t valid_ = 0;
  double log_likelihood_ = 0.0;
};

/// Straight evaluation of the ML recursion including the per-row input-mass
/// divisor; N(3|Y|+1)|V| scalar multiplications.
RowStochasticMatrix ml_update_direct(const RowStochasticMatrix& theta0,
                                     std::span<const MessagePair> pairs,
                                     OpCounters* counters = nullptr);

/// Hadamard moved inside the sum, denominator accumulated while the terms are
/// generated; 2N|V||Y| scalar multiplications.
RowStochasticMatrix ml_update_fast(const RowStochasticMatrix& theta0,
                                   std::span<const MessagePair> pairs,
                                   OpCounters* counters = nullptr);

/// Σ_n log(fᵀθb) over pairs with a positive denominator.
double pair_log_likelihood(const RowStochasticMatrix& theta, std::span<const MessagePair> pairs);

class SisoBlock {
 public:
  SisoBlock() = default;
  explicit SisoBlock(RowStochasticMatrix theta, bool frozen = false);

  const RowStochasticMatrix& theta() const { return theta_; }
  void set_theta(RowStochasticMatrix theta);

  /// Frozen blocks are skipped by learning (e.g. the naive-Bayes class block).
  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen) { frozen_ = frozen; }

  bool paused() const { return paused_; }
  void set_paused(bool paused) { paused_ = paused; }

  bool batch_mode() const { return batch_mode_; }
  /// Switching batch mode either way drops stored pairs.
  void set_batch_mode(bool on);

  /// Throws Paused while paused.
  Message forward(const Message& f_v, OpCounters* counters = nullptr) const;

  /// Unknown observations short-circuit to the exact uniform message.
  Message backward(const Message& b_y, bool known, OpCounters* counters = nullptr) const;

  void store(Message f_v, Message b_y);
  void clear_store() { stored_.clear(); }
  std::span<const MessagePair> stored_pairs() const { return stored_; }
  std::size_t peak_stored_pairs() const { return peak_stored_; }
  void reset_peak() { peak_stored_ = stored_.size(); }

 private:
  RowStochasticMatrix theta_;
  std::vector<MessagePair> stored_;
  std::size_t peak_stored_ = 0;
  bool frozen_ = false;
  bool paused_ = false;
  bool batch_mode_ = false;
};

}  // namespace fgrn
