#include "fgrn/evaluate.hpp"

#include <chrono>

#include "fgrn/errors.hpp"
#include "fgrn/lvm.hpp"

namespace fgrn {

Evaluation evaluate(const Model& model, const Dataset& data, const PassOptions& options) {
  check_compatible(model, data);
  if (!data.class_index) throw InvalidSpec("evaluation needs a class column");
  const std::size_t l = *data.class_index;
  const std::size_t labels = data.variables[l].size();
  Evaluation e;
  e.confusion.assign(labels, std::vector<std::size_t>(labels, 0));
  for (const auto& record : data.records) {
    if (!record[l]) continue;
    ++e.total;
    Evidence ev = to_evidence(data, record, false);
    ev.bottom.pop_back();
    try {
      const auto c = classify(model, ev.bottom, options);
      ++e.confusion[*record[l]][c.label];
      if (c.label == *record[l]) ++e.correct;
    } catch (const AllZeroMessage&) {
      ++e.contradictory;
    }
  }
  return e;
}

HoldoutRun run_holdout(const Dataset& data, const HoldoutConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  HoldoutRun run{build(lvm_spec(data, config.hidden_dims, config.naive_bayes, config.seed)), {}, {}, {}, {}, 0.0};
  if (config.test_fraction > 0.0) {
    run.split = split(data, config.test_fraction, config.seed);
  } else {
    run.split.train = data;
    run.split.test = data;
    run.split.test.records.clear();
  }
  run.report = train(run.model, to_evidence(run.split.train), config.train);
  if (data.class_index) {
    run.train = evaluate(run.model, run.split.train, config.train.pass);
    if (run.split.test.size() > 0) run.test = evaluate(run.model, run.split.test, config.train.pass);
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace fgrn
