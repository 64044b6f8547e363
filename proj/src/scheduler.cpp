#include "fgrn/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <numeric>
#include <string>

#include "fgrn/errors.hpp"
#include "fgrn/rng.hpp"

namespace fgrn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_evidence(const Model& model, const Evidence& ev) {
  if (ev.bottom.size() != model.bottom_count()) {
    throw ShapeMismatch("evidence has " + std::to_string(ev.bottom.size()) +
                        " bottom entries, model has " + std::to_string(model.bottom_count()));
  }
  for (std::size_t j = 0; j < ev.bottom.size(); ++j) {
    if (ev.bottom[j] && ev.bottom[j]->size() != model.variables[j].size()) {
      throw ShapeMismatch("evidence for " + model.variables[j].name);
    }
  }
  if (!ev.source_forward.empty()) {
    if (ev.source_forward.size() != model.hidden_count()) {
      throw ShapeMismatch("source override count");
    }
    for (std::size_t h = 0; h < ev.source_forward.size(); ++h) {
      if (ev.source_forward[h] && ev.source_forward[h]->size() != model.hidden_dims[h]) {
        throw ShapeMismatch("source override for " + model.hidden[h].name);
      }
    }
  }
}

// Links in their initial state (uniform everywhere), evidence and priors loaded.
Snapshot load(const Model& model, const Evidence& ev) {
  check_evidence(model, ev);
  const std::size_t p = model.product_size();
  Snapshot s;
  for (std::size_t h = 0; h < model.hidden_count(); ++h) {
    s.sources.emplace_back(model.hidden[h].name, model.hidden_dims[h]);
    const bool override = !ev.source_forward.empty() && ev.source_forward[h].has_value();
    s.sources[h].forward = override ? normalize(*ev.source_forward[h]) : model.sources[h].prior();
    if (model.uses_selectors()) s.products.emplace_back("P" + std::to_string(h), p);
  }
  for (std::size_t j = 0; j < model.bottom_count(); ++j) {
    s.branches.emplace_back("V" + std::to_string(j), p);
    s.bottom.emplace_back(model.variables[j].name, model.variables[j].size());
    s.known.push_back(ev.bottom[j].has_value());
    if (ev.bottom[j]) s.bottom[j].backward = normalize(*ev.bottom[j]);
  }
  return s;
}

Link& top_link(Snapshot& s, std::size_t h) { return s.products.empty() ? s.sources[h] : s.products[h]; }

void fire_diverter(const Model& model, Snapshot& s, DiverterImpl impl, OpCounters* counters) {
  const std::size_t hcount = model.hidden_count();
  std::vector<Message> in;
  in.reserve(model.diverter.arity());
  for (std::size_t h = 0; h < hcount; ++h) in.push_back(top_link(s, h).forward);
  for (const Link& b : s.branches) in.push_back(b.backward);
  std::vector<Message> out(in.size());
  if (impl == DiverterImpl::kChain) {
    Diverter scratch = model.diverter;
    scratch.propagate_chain(in, out, counters);
  } else {
    model.diverter.propagate_naive(in, out, counters);
  }
  for (std::size_t h = 0; h < hcount; ++h) top_link(s, h).backward = std::move(out[h]);
  for (std::size_t j = 0; j < s.branches.size(); ++j) s.branches[j].forward = std::move(out[hcount + j]);
}

// Runs fn(j, counters) for every SISO block, split over the pool, and merges
// per-chunk counters in chunk order.
template <class Fn>
void for_each_block(std::size_t n, WorkerPool* pool, OpCounters* counters, Fn&& fn) {
  const unsigned chunks = pool ? pool->size() : 1;
  std::vector<OpCounters> local(chunks);
  parallel_ranges(pool, n, [&](std::size_t begin, std::size_t end, unsigned chunk) {
    for (std::size_t j = begin; j < end; ++j) fn(j, &local[chunk]);
  });
  if (counters) {
    for (const auto& c : local) counters->merge(c);
  }
}

Snapshot run_pass(const Model& model, const Evidence& ev, const PassOptions& opt,
                  OpCounters* counters, WorkerPool* pool, bool emit_bottom) {
  // Step 1: evidence into backward messages at the bottom, priors at the top.
  Snapshot s = load(model, ev);

  // Step 2: up through the SISO blocks and the selectors.
  for_each_block(model.bottom_count(), pool, counters, [&](std::size_t j, OpCounters* c) {
    const bool compute = s.known[j] || !opt.unknown_shortcut;
    s.branches[j].backward = model.blocks[j].backward(s.bottom[j].backward, compute, c);
  });
  for (std::size_t h = 0; h < s.products.size(); ++h) {
    s.products[h].forward = selector_forward(model.selectors[h], s.sources[h].forward, counters);
  }

  // Step 3: the diverter is the barrier; everything below depends on it.
  fire_diverter(model, s, opt.diverter, counters);
  for (std::size_t h = 0; h < s.products.size(); ++h) {
    s.sources[h].backward = selector_backward(model.selectors[h], s.products[h].backward, counters);
  }
  if (emit_bottom) {
    for_each_block(model.bottom_count(), pool, counters, [&](std::size_t j, OpCounters* c) {
      if (model.blocks[j].paused()) return;
      s.bottom[j].forward = model.blocks[j].forward(s.branches[j].forward, c);
    });
  }
  return s;
}

std::unique_ptr<WorkerPool> make_pool(unsigned workers) {
  if (workers <= 1) return nullptr;
  return std::make_unique<WorkerPool>(workers);
}

struct Learner {
  Learner(Model& m, const std::vector<Evidence>& data, const TrainConfig& c)
      : model(m), samples(data), cfg(c), pool(make_pool(c.pass.workers)) {
    if (samples.empty()) throw EmptyDataset();
    if (cfg.epochs == 0) throw InvalidSpec("epochs must be >= 1");
    if (cfg.max_ml_iters == 0) throw InvalidSpec("ML iterations must be >= 1");
    model.validate();
    for (const Evidence& ev : samples) check_evidence(model, ev);
    for (std::size_t j = 0; j < model.bottom_count(); ++j) {
      if (!model.blocks[j].frozen()) learnable.push_back(j);
    }
    if (cfg.freeze_sources) {
      for (Source& src : model.sources) src.set_frozen(true);
    }
    order.resize(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }

  // Upward half of a pass plus the diverter: the block inputs a learning
  // sample needs, without the downward SISO products.
  // A sample that contradicts the current parameters has no valid learning
  // pair anywhere; like a zero-denominator pair it is skipped.
  std::optional<Snapshot> observe(const Evidence& ev, OpCounters* counters, std::size_t& skipped) {
    try {
      return run_pass(model, ev, cfg.pass, counters, pool.get(), false);
    } catch (const AllZeroMessage&) {
      ++skipped;
      return std::nullopt;
    }
  }

  void accumulate_sources(const Snapshot& s, OpCounters* counters) {
    for (std::size_t h = 0; h < model.sources.size(); ++h) {
      model.sources[h].accumulate(s.sources[h].backward, cfg.source_rule, counters);
    }
  }

  void update_sources(OpCounters* counters) {
    for (Source& src : model.sources) src.update(cfg.source_rule, counters);
  }

  void set_batch_mode(bool on) {
    for (Source& src : model.sources) src.set_batch_mode(on);
    for (std::size_t j : learnable) model.blocks[j].set_batch_mode(on);
  }

  TrainReport finish(TrainReport report) {
    for (const SisoBlock& b : model.blocks) {
      report.peak_stored_pairs.push_back(b.peak_stored_pairs());
      report.counters.peak_stored_pairs =
          std::max<std::uint64_t>(report.counters.peak_stored_pairs, b.peak_stored_pairs());
    }
    return report;
  }

  Model& model;
  const std::vector<Evidence>& samples;
  const TrainConfig& cfg;
  std::unique_ptr<WorkerPool> pool;
  std::vector<std::size_t> learnable;
  std::vector<std::size_t> order;
};

}  // namespace

Evidence Evidence::none(const Model& model) {
  Evidence ev;
  ev.bottom.resize(model.bottom_count());
  return ev;
}

Snapshot infer_pass(const Model& model, const Evidence& evidence, const PassOptions& options,
                    OpCounters* counters) {
  auto pool = make_pool(options.workers);
  return run_pass(model, evidence, options, counters, pool.get(), true);
}

Snapshot flood(const Model& model, const Evidence& evidence, std::size_t steps) {
  Snapshot s = load(model, evidence);
  for (std::size_t step = 0; step < steps; ++step) {
    const Snapshot old = s;
    for (std::size_t j = 0; j < s.branches.size(); ++j) {
      s.branches[j].backward = model.blocks[j].backward(old.bottom[j].backward, old.known[j]);
      if (!model.blocks[j].paused()) {
        s.bottom[j].forward = model.blocks[j].forward(old.branches[j].forward);
      }
    }
    for (std::size_t h = 0; h < s.products.size(); ++h) {
      s.products[h].forward = selector_forward(model.selectors[h], old.sources[h].forward);
      s.sources[h].backward = selector_backward(model.selectors[h], old.products[h].backward);
    }
    // The diverter reads the previous step's inbound messages and writes only
    // outbound ones, so firing it on a copy keeps the step synchronous.
    Snapshot div = old;
    fire_diverter(model, div, DiverterImpl::kChain, nullptr);
    for (std::size_t h = 0; h < model.hidden_count(); ++h) top_link(s, h).backward = top_link(div, h).backward;
    for (std::size_t j = 0; j < s.branches.size(); ++j) s.branches[j].forward = div.branches[j].forward;
  }
  return s;
}

TrainReport train_batch(Model& model, const std::vector<Evidence>& samples,
                        const TrainConfig& config) {
  Learner learner(model, samples, config);
  TrainReport report;
  learner.set_batch_mode(true);
  for (std::size_t j : learner.learnable) model.blocks[j].reset_peak();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = Clock::now();
    OpCounters counters;
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t n : learner.order) {
      const auto observed = learner.observe(samples[n], &counters, rec.skipped_samples);
      if (!observed) continue;
      const Snapshot& s = *observed;
      for (std::size_t j : learner.learnable) {
        model.blocks[j].store(s.branches[j].forward, s.bottom[j].backward);
      }
      learner.accumulate_sources(s, &counters);
    }

    // ML cycles per block. Blocks are independent, so they can be split over
    // workers; each block's iteration count is its own.
    const std::size_t nl = learner.learnable.size();
    std::vector<std::vector<double>> ll(nl);
    std::vector<double> delta(nl, 0.0);
    for_each_block(nl, learner.pool.get(), &counters, [&](std::size_t i, OpCounters* c) {
      SisoBlock& block = model.blocks[learner.learnable[i]];
      const auto pairs = block.stored_pairs();
      for (std::size_t k = 0; k < config.max_ml_iters; ++k) {
        MlAccumulator acc(block.theta());
        for (const MessagePair& p : pairs) acc.add(p.f_v, p.b_y, c);
        RowStochasticMatrix next = acc.finish();
        ll[i].push_back(acc.log_likelihood());
        const double change = next.max_abs_diff(block.theta());
        delta[i] = std::max(delta[i], change);
        block.set_theta(std::move(next));
        if (change < config.ml_tolerance) break;
      }
      ll[i].push_back(pair_log_likelihood(block.theta(), pairs));
      if (config.theta_floor > 0.0) {
        RowStochasticMatrix floored = block.theta().with_floor(config.theta_floor);
        delta[i] = std::max(delta[i], floored.max_abs_diff(block.theta()));
        block.set_theta(std::move(floored));
      }
    });
    learner.update_sources(&counters);
    for (std::size_t j : learner.learnable) model.blocks[j].clear_store();

    std::size_t longest = 0;
    for (const auto& series : ll) longest = std::max(longest, series.size());
    rec.ml_iterations = longest > 0 ? longest - 1 : 0;
    rec.inner_log_likelihood.assign(longest, 0.0);
    for (const auto& series : ll) {
      for (std::size_t t = 0; t < longest; ++t) {
        rec.inner_log_likelihood[t] += series[std::min(t, series.size() - 1)];
      }
    }
    rec.log_likelihood = longest > 0 ? rec.inner_log_likelihood.front() : 0.0;
    for (double d : delta) rec.max_theta_change = std::max(rec.max_theta_change, d);
    rec.multiplications = counters.scalar_multiplications;
    counters.wall_time = seconds_since(start);
    rec.wall_time = counters.wall_time;
    report.counters.merge(counters);
    report.epochs.push_back(std::move(rec));
  }
  report = learner.finish(std::move(report));
  learner.set_batch_mode(false);
  return report;
}

TrainReport train_incremental(Model& model, const std::vector<Evidence>& samples,
                              const TrainConfig& config) {
  Learner learner(model, samples, config);
  TrainReport report;
  Rng rng(config.seed);
  learner.set_batch_mode(false);
  for (Source& src : model.sources) src.set_batch_mode(true);
  for (std::size_t j : learner.learnable) model.blocks[j].reset_peak();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = Clock::now();
    OpCounters counters;
    if (config.shuffle) {
      auto& o = learner.order;
      for (std::size_t i = o.size(); i > 1; --i) std::swap(o[i - 1], o[rng.below(i)]);
    }
    // One ML cycle per epoch: each pair is folded into the running sums the
    // moment it is produced and then dropped.
    std::vector<MlAccumulator> acc;
    acc.reserve(learner.learnable.size());
    for (std::size_t j : learner.learnable) acc.emplace_back(model.blocks[j].theta());
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t n : learner.order) {
      const auto observed = learner.observe(samples[n], &counters, rec.skipped_samples);
      if (!observed) continue;
      const Snapshot& s = *observed;
      for_each_block(acc.size(), learner.pool.get(), &counters, [&](std::size_t i, OpCounters* c) {
        const std::size_t j = learner.learnable[i];
        acc[i].add(s.branches[j].forward, s.bottom[j].backward, c);
      });
      learner.accumulate_sources(s, &counters);
    }

    rec.ml_iterations = acc.empty() ? 0 : 1;
    std::vector<RowStochasticMatrix> next(acc.size());
    for_each_block(acc.size(), learner.pool.get(), nullptr,
                   [&](std::size_t i, OpCounters*) {
                     next[i] = acc[i].finish();
                     if (config.theta_floor > 0.0) next[i] = next[i].with_floor(config.theta_floor);
                   });
    for (std::size_t i = 0; i < acc.size(); ++i) {
      SisoBlock& block = model.blocks[learner.learnable[i]];
      rec.log_likelihood += acc[i].log_likelihood();
      rec.max_theta_change = std::max(rec.max_theta_change, next[i].max_abs_diff(block.theta()));
      block.set_theta(std::move(next[i]));
    }
    rec.inner_log_likelihood = {rec.log_likelihood};
    learner.update_sources(&counters);

    rec.multiplications = counters.scalar_multiplications;
    counters.wall_time = seconds_since(start);
    rec.wall_time = counters.wall_time;
    report.counters.merge(counters);
    report.epochs.push_back(std::move(rec));
  }
  for (Source& src : model.sources) src.set_batch_mode(false);
  return learner.finish(std::move(report));
}

TrainReport train(Model& model, const std::vector<Evidence>& samples, const TrainConfig& config) {
  return config.mode == TrainMode::kBatch ? train_batch(model, samples, config)
                                          : train_incremental(model, samples, config);
}

}  // namespace fgrn
