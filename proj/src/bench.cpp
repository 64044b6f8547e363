#include "fgrn/bench.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "fgrn/errors.hpp"
#include "fgrn/lvm.hpp"
#include "fgrn/rng.hpp"

namespace fgrn {

namespace {

using Clock = std::chrono::steady_clock;

double max_diff(const std::vector<Link>& a, const std::vector<Link>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].alphabet_size; ++k) {
      d = std::max(d, std::abs(a[i].forward[k] - b[i].forward[k]));
      d = std::max(d, std::abs(a[i].backward[k] - b[i].backward[k]));
    }
  }
  return d;
}

PassCost measure(const Model& model, const Evidence& ev, const PassOptions& options, std::size_t repetitions,
                 Snapshot& snapshot) {
  PassCost cost;
  snapshot = infer_pass(model, ev, options, &cost.pass);

  std::vector<Message> in;
  for (std::size_t h = 0; h < model.hidden_count(); ++h) in.push_back(snapshot.top(h).forward);
  for (const Link& b : snapshot.branches) in.push_back(b.backward);
  std::vector<Message> out(in.size());
  Diverter diverter = model.diverter;
  if (options.diverter == DiverterImpl::kChain) diverter.propagate_chain(in, out, &cost.diverter);
  else diverter.propagate_naive(in, out, &cost.diverter);

  const auto start = Clock::now();
  for (std::size_t r = 0; r < repetitions; ++r) infer_pass(model, ev, options);
  const double total = std::chrono::duration<double>(Clock::now() - start).count();
  cost.pass.wall_time = total;
  cost.seconds_per_pass = repetitions ? total / static_cast<double>(repetitions) : 0.0;
  return cost;
}

}  // namespace

InferenceBench bench_inference(const InferenceBenchSpec& spec) {
  if (spec.observed == 0) throw InvalidSpec("bench needs at least one observed variable");
  LvmSpec lvm;
  lvm.hidden_dims = spec.hidden_dims;
  lvm.seed = spec.seed;
  for (std::size_t j = 0; j < spec.observed; ++j) {
    VariableInfo v{"Y" + std::to_string(j + 1), {}};
    for (std::size_t k = 0; k < spec.alphabet; ++k) v.labels.push_back(std::to_string(k));
    lvm.observed.push_back(std::move(v));
  }
  const Model model = build(lvm);

  Rng rng(spec.seed ^ 0x5eedULL);
  Evidence ev = Evidence::none(model);
  for (auto& b : ev.bottom) b = Message::delta(spec.alphabet, rng.below(spec.alphabet));

  InferenceBench out;
  out.product_size = model.product_size();
  out.arity = model.diverter.arity();
  PassOptions opt;
  opt.workers = spec.workers;
  Snapshot fast, slow;
  out.optimized = measure(model, ev, opt, spec.repetitions, fast);
  opt.diverter = DiverterImpl::kNaive;
  out.naive = measure(model, ev, opt, spec.repetitions, slow);
  out.max_message_diff = std::max({max_diff(fast.sources, slow.sources), max_diff(fast.products, slow.products),
                                   max_diff(fast.branches, slow.branches), max_diff(fast.bottom, slow.bottom)});
  return out;
}

MlBench bench_ml(std::size_t rows, std::size_t cols, std::size_t samples, std::uint64_t seed,
                 std::size_t repetitions) {
  if (rows < 2 || cols < 2 || samples < 1) throw InvalidSpec("ML bench needs rows >= 2, cols >= 2, samples >= 1");
  Rng rng(seed);
  const RowStochasticMatrix theta = RowStochasticMatrix::random(rows, cols, rng);
  std::vector<MessagePair> pairs;
  for (std::size_t n = 0; n < samples; ++n) {
    std::vector<double> f(rows), b(cols);
    for (double& x : f) x = rng.uniform01();
    for (double& x : b) x = rng.uniform01();
    pairs.push_back({normalize(Message(f)), normalize(Message(b))});
  }

  MlBench out;
  const auto direct = ml_update_direct(theta, pairs, &out.direct);
  const auto fast = ml_update_fast(theta, pairs, &out.fast);
  out.max_entry_diff = direct.max_abs_diff(fast);

  auto time = [&](auto&& fn) {
    const auto start = Clock::now();
    for (std::size_t r = 0; r < repetitions; ++r) fn();
    const double total = std::chrono::duration<double>(Clock::now() - start).count();
    return repetitions ? total / static_cast<double>(repetitions) : 0.0;
  };
  out.seconds_direct = time([&] { ml_update_direct(theta, pairs); });
  out.seconds_fast = time([&] { ml_update_fast(theta, pairs); });
  return out;
}

}  // namespace fgrn
