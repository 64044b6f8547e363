#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fgrn/bench.hpp"
#include "fgrn/dataio.hpp"
#include "fgrn/errors.hpp"
#include "fgrn/evaluate.hpp"
#include "fgrn/lvm.hpp"
#include "fgrn/model_io.hpp"

using namespace fgrn;

namespace {

struct Common {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool csv = false;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(part, &used);
      if (used != part.size() || v < 0) throw std::invalid_argument(part);
      dims.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw InvalidSpec("bad hidden dimension list '" + text + "'");
    }
  }
  if (dims.empty()) throw EmptyDims();
  return dims;
}

void print_evaluation(const std::string& side, const Evaluation& e, const VariableInfo& cls, const Common& c) {
  if (c.csv) {
    std::cout << "accuracy," << side << ',' << e.total << ',' << e.correct << ',' << e.contradictory << ','
              << num(e.accuracy()) << '\n';
    for (std::size_t t = 0; t < e.confusion.size(); ++t)
      for (std::size_t p = 0; p < e.confusion[t].size(); ++p)
        std::cout << "confusion," << side << ',' << cls.labels[t] << ',' << cls.labels[p] << ',' << e.confusion[t][p]
                  << '\n';
    return;
  }
  std::cout << side << " accuracy: " << fixed(100.0 * e.accuracy(), 2) << "% (" << e.correct << "/" << e.total;
  if (e.contradictory) std::cout << ", " << e.contradictory << " contradictory";
  std::cout << ")\n  true\\pred";
  for (const auto& l : cls.labels) std::cout << '\t' << l;
  std::cout << '\n';
  for (std::size_t t = 0; t < e.confusion.size(); ++t) {
    std::cout << "  " << cls.labels[t];
    for (std::size_t n : e.confusion[t]) std::cout << '\t' << n;
    std::cout << '\n';
  }
}

void print_epochs(const TrainReport& report, const Common& c) {
  if (c.csv) {
    std::cout << "epoch,log_likelihood,ml_iterations,skipped_samples,max_theta_change,multiplications,seconds\n";
  } else {
    std::cout << "epoch  log-likelihood        ml-iters  skipped  max-dtheta     mults         seconds\n";
  }
  for (const auto& e : report.epochs) {
    if (c.csv) {
      std::cout << e.epoch << ',' << num(e.log_likelihood) << ',' << e.ml_iterations << ',' << e.skipped_samples << ','
                << num(e.max_theta_change) << ',' << e.multiplications << ',' << num(e.wall_time) << '\n';
    } else {
      char line[160];
      std::snprintf(line, sizeof line, "%5zu  %-20.10g  %8zu  %7zu  %-12.4g  %-12llu  %.3f\n", e.epoch,
                    e.log_likelihood, e.ml_iterations, e.skipped_samples, e.max_theta_change,
                    static_cast<unsigned long long>(e.multiplications), e.wall_time);
      std::cout << line;
    }
  }
}

// ---- train ----

struct TrainArgs {
  std::string data, schema, out, hidden = "20", mode = "batch", source_rule = "product";
  std::size_t epochs = 20, k = 10;
  double tolerance = 1e-6, test_fraction = 0.3, theta_floor = 1e-9;
  bool freeze_source = false, naive_bayes = false, shuffle = false;
};

int cmd_train(const TrainArgs& a, const Common& c) {
  const Dataset data = load_csv(a.data, load_schema(a.schema));
  HoldoutConfig cfg;
  cfg.hidden_dims = parse_dims(a.hidden);
  cfg.naive_bayes = a.naive_bayes;
  cfg.test_fraction = a.test_fraction;
  cfg.seed = c.seed;
  cfg.train.epochs = a.epochs;
  cfg.train.max_ml_iters = a.k;
  cfg.train.ml_tolerance = a.tolerance;
  cfg.train.mode = a.mode == "incremental" ? TrainMode::kIncremental : TrainMode::kBatch;
  cfg.train.seed = c.seed;
  cfg.train.shuffle = a.shuffle;
  cfg.train.freeze_sources = a.freeze_source;
  cfg.train.theta_floor = a.theta_floor;
  cfg.train.source_rule =
      a.source_rule == "average" ? SourceUpdateRule::kAveragePosterior : SourceUpdateRule::kProductWithSummedBackwards;
  cfg.train.pass.workers = c.workers;

  const HoldoutRun run = run_holdout(data, cfg);
  print_epochs(run.report, c);
  if (data.class_index) {
    const VariableInfo& cls = data.variables[*data.class_index];
    print_evaluation("train", run.train, cls, c);
    if (run.split.test.size() > 0) print_evaluation("test", run.test, cls, c);
  }
  if (!a.out.empty()) {
    const Metadata md{{"data", a.data},
                      {"schema", a.schema},
                      {"hidden", join(cfg.hidden_dims)},
                      {"mode", a.mode},
                      {"epochs", std::to_string(a.epochs)},
                      {"k", std::to_string(a.k)},
                      {"tolerance", num(a.tolerance)},
                      {"theta_floor", num(a.theta_floor)},
                      {"freeze_source", a.freeze_source ? "1" : "0"},
                      {"source_rule", a.source_rule},
                      {"shuffle", a.shuffle ? "1" : "0"},
                      {"test_fraction", num(a.test_fraction)},
                      {"split_seed", std::to_string(c.seed)}};
    save_model(a.out, run.model, md);
    if (!c.csv) std::cout << "model written to " << a.out << '\n';
  }
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string model, data, schema;
  std::optional<double> test_fraction;
};

int cmd_eval(const EvalArgs& a, const Common& c) {
  const ModelFile file = load_model(a.model);
  const Dataset data = load_csv(a.data, load_schema(a.schema));
  check_compatible(file.model, data);
  if (!data.class_index) throw InvalidSpec("evaluation needs a class column");
  const double fraction = a.test_fraction ? *a.test_fraction : std::stod(metadata_value(file.metadata, "test_fraction", "0"));
  const std::uint64_t seed = std::stoull(metadata_value(file.metadata, "split_seed", "0"));
  PassOptions opts;
  opts.workers = c.workers;
  const VariableInfo& cls = data.variables[*data.class_index];
  if (fraction > 0.0) {
    const Split s = split(data, fraction, seed);
    print_evaluation("train", evaluate(file.model, s.train, opts), cls, c);
    print_evaluation("test", evaluate(file.model, s.test, opts), cls, c);
  } else {
    print_evaluation("all", evaluate(file.model, data, opts), cls, c);
  }
  return 0;
}

// ---- infer ----

struct InferArgs {
  std::string model, task = "classify", evidence_file, class_label;
  std::vector<std::string> set;
  std::size_t index = 0;
};

std::size_t label_index(const VariableInfo& v, const std::string& label) {
  for (std::size_t k = 0; k < v.labels.size(); ++k)
    if (v.labels[k] == label) return k;
  throw UnknownLabel("'" + label + "' for " + v.name);
}

void print_message(const std::string& name, const VariableInfo& v, const Message& m, const Common& c,
                   const std::string& tag = "") {
  if (c.csv) {
    for (std::size_t k = 0; k < m.size(); ++k)
      std::cout << name << ',' << v.labels[k] << ',' << num(m[k]) << (tag.empty() ? "" : "," + tag) << '\n';
    return;
  }
  std::cout << name << (tag.empty() ? "" : " (" + tag + ")") << ":";
  for (std::size_t k = 0; k < m.size(); ++k) std::cout << "  " << v.labels[k] << '=' << fixed(m[k], 6);
  std::cout << '\n';
}

int cmd_infer(const InferArgs& a, const Common& c) {
  const Model model = load_model(a.model).model;
  const std::size_t n = model.observed_count();
  PassOptions opts;
  opts.workers = c.workers;

  std::vector<std::string> assignments = a.set;
  if (!a.evidence_file.empty()) {
    std::ifstream in(a.evidence_file);
    if (!in) throw ParseError("cannot open evidence file '" + a.evidence_file + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      assignments.push_back(line);
    }
  }
  std::vector<std::optional<Message>> observed(n);
  for (const std::string& s : assignments) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("evidence '" + s + "' is not name=label");
    const std::string name = s.substr(0, eq), label = s.substr(eq + 1);
    std::size_t v = 0;
    while (v < n && model.variables[v].name != name) ++v;
    if (v == n) throw UnknownLabel("no observed variable '" + name + "'");
    if (label == "?") continue;
    observed[v] = Message::delta(model.variables[v].size(), label_index(model.variables[v], label));
  }

  if (a.task == "classify") {
    const auto r = classify(model, observed, opts);
    const VariableInfo& cls = model.variables[*model.class_index];
    print_message(cls.name, cls, r.f_l, c);
    if (!c.csv) std::cout << "predicted: " << cls.labels[r.label] << '\n';
  } else if (a.task == "complete") {
    std::optional<Message> b_l;
    if (!a.class_label.empty()) {
      if (!model.class_index) throw InvalidSpec("model has no class variable");
      const VariableInfo& cls = model.variables[*model.class_index];
      b_l = Message::delta(cls.size(), label_index(cls, a.class_label));
    }
    const auto r = complete(model, observed, b_l, opts);
    for (std::size_t v = 0; v < n; ++v)
      print_message(model.variables[v].name, model.variables[v], r.forwards[v], c, r.known[v] ? "known" : "inferred");
    if (r.class_posterior) {
      const VariableInfo& cls = model.variables[*model.class_index];
      print_message(cls.name, cls, *r.class_posterior, c, "class");
    }
  } else {
    const auto f = a.task == "prototype" ? prototype(model, a.index, opts) : centroid(model, a.index, opts);
    for (std::size_t v = 0; v < f.size(); ++v) print_message(model.variables[v].name, model.variables[v], f[v], c);
  }
  return 0;
}

// ---- bench ----

struct BenchArgs {
  std::string hidden = "10", impl = "both";
  std::size_t observed = 10, alphabet = 2, repeat = 1000;
  std::size_t ml_rows = 4, ml_cols = 4, ml_samples = 25;
};

int cmd_bench(const BenchArgs& a, const Common& c) {
  InferenceBenchSpec spec;
  spec.hidden_dims = parse_dims(a.hidden);
  spec.observed = a.observed;
  spec.alphabet = a.alphabet;
  spec.seed = c.seed;
  spec.workers = c.workers;
  spec.repetitions = a.repeat;
  const InferenceBench b = bench_inference(spec);
  const MlBench ml = bench_ml(a.ml_rows, a.ml_cols, a.ml_samples, c.seed, a.repeat);

  struct Row {
    std::string name;
    const OpCounters* total;
    const OpCounters* diverter;
    double seconds;
  };
  std::vector<Row> rows;
  if (a.impl != "naive") rows.push_back({"optimized", &b.optimized.pass, &b.optimized.diverter, b.optimized.seconds_per_pass});
  if (a.impl != "optimized") rows.push_back({"naive", &b.naive.pass, &b.naive.diverter, b.naive.seconds_per_pass});

  if (c.csv) {
    std::cout << "kind,impl,scalar_multiplications,diverter_multiplications,vector_multiplications,"
                 "normalization_divisions,seconds\n";
    for (const auto& r : rows)
      std::cout << "inference," << r.name << ',' << r.total->scalar_multiplications << ','
                << r.diverter->scalar_multiplications << ',' << r.total->vector_multiplications << ','
                << r.total->normalization_divisions << ',' << num(r.seconds) << '\n';
    std::cout << "ml,fast," << ml.fast.scalar_multiplications << ",0," << ml.fast.vector_multiplications << ",0,"
              << num(ml.seconds_fast) << '\n';
    std::cout << "ml,direct," << ml.direct.scalar_multiplications << ",0," << ml.direct.vector_multiplications << ",0,"
              << num(ml.seconds_direct) << '\n';
    return 0;
  }
  std::cout << "inference: H=" << spec.hidden_dims.size() << " |P|=" << b.product_size << " N=" << a.observed
            << " |Y|=" << a.alphabet << " M=" << b.arity << "\n";
  std::cout << "impl        scalar-mults  diverter  normalizations  us/pass\n";
  for (const auto& r : rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%-10s  %12llu  %8llu  %14llu  %.3f\n", r.name.c_str(),
                  static_cast<unsigned long long>(r.total->scalar_multiplications),
                  static_cast<unsigned long long>(r.diverter->scalar_multiplications),
                  static_cast<unsigned long long>(r.total->normalization_divisions), 1e6 * r.seconds);
    std::cout << line;
  }
  if (rows.size() == 2) std::cout << "max message difference: " << num(b.max_message_diff) << '\n';
  std::cout << "ml update: |V|=" << a.ml_rows << " |Y|=" << a.ml_cols << " N=" << a.ml_samples << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "fast    %llu mults  %.3f us\ndirect  %llu mults  %.3f us\nmax entry difference: %g\n",
                static_cast<unsigned long long>(ml.fast.scalar_multiplications), 1e6 * ml.seconds_fast,
                static_cast<unsigned long long>(ml.direct.scalar_multiplications), 1e6 * ml.seconds_direct,
                ml.max_entry_diff);
  std::cout << line;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor graph latent variable models: training, inference, evaluation, benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--seed", common.seed, "Seed for initialization, splits and shuffles");
  app.add_option("--workers", common.workers, "Worker threads for message propagation")->check(CLI::Range(1u, 256u));
  app.add_flag("--csv", common.csv, "Machine-readable rows instead of tables");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a CSV file");
  train_cmd->add_option("--data", ta.data, "CSV data file")->required();
  train_cmd->add_option("--schema", ta.schema, "Schema file")->required();
  train_cmd->add_option("--hidden", ta.hidden, "Hidden cardinalities, e.g. 20 or 2,3");
  train_cmd->add_option("--epochs", ta.epochs, "Training epochs");
  train_cmd->add_option("--k", ta.k, "ML iterations per batch epoch");
  train_cmd->add_option("--mode", ta.mode, "batch or incremental")->check(CLI::IsMember({"batch", "incremental"}));
  train_cmd->add_option("--tolerance", ta.tolerance, "Stop the inner ML loop below this change");
  train_cmd->add_option("--test-fraction", ta.test_fraction, "Held-out fraction (0 trains on everything)");
  train_cmd->add_option("--theta-floor", ta.theta_floor, "Lower bound on learned matrix entries (0 disables)");
  train_cmd->add_option("--source-rule", ta.source_rule, "product or average")
      ->check(CLI::IsMember({"product", "average"}));
  train_cmd->add_flag("--freeze-source", ta.freeze_source, "Keep source priors fixed");
  train_cmd->add_flag("--naive-bayes", ta.naive_bayes, "Identity class block (needs |L| = |S|)");
  train_cmd->add_flag("--shuffle", ta.shuffle, "Reshuffle samples every epoch (incremental)");
  train_cmd->add_option("--out", ta.out, "Model file to write");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy of a saved model");
  eval_cmd->add_option("--model", ea.model, "Model file")->required();
  eval_cmd->add_option("--data", ea.data, "CSV data file")->required();
  eval_cmd->add_option("--schema", ea.schema, "Schema file")->required();
  eval_cmd->add_option("--test-fraction", ea.test_fraction, "Override the split stored in the model");

  InferArgs ia;
  auto* infer_cmd = app.add_subcommand("infer", "Query a saved model");
  infer_cmd->add_option("--model", ia.model, "Model file")->required();
  infer_cmd->add_option("--task", ia.task, "classify, complete, prototype or centroid")
      ->check(CLI::IsMember({"classify", "complete", "prototype", "centroid"}));
  infer_cmd->add_option("--set", ia.set, "Evidence name=label (repeatable, label ? for missing)");
  infer_cmd->add_option("--evidence-file", ia.evidence_file, "File of name=label lines");
  infer_cmd->add_option("--index", ia.index, "Class (prototype) or hidden state (centroid)");
  infer_cmd->add_option("--class-label", ia.class_label, "Clamp the class when completing");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Operation counts and timings");
  bench_cmd->add_option("--hidden", ba.hidden, "Hidden cardinalities");
  bench_cmd->add_option("--observed", ba.observed, "Observed variables N");
  bench_cmd->add_option("--alphabet", ba.alphabet, "Observed alphabet size |Y|");
  bench_cmd->add_option("--impl", ba.impl, "naive, optimized or both")
      ->check(CLI::IsMember({"naive", "optimized", "both"}));
  bench_cmd->add_option("--ml-rows", ba.ml_rows, "ML bench |V|");
  bench_cmd->add_option("--ml-cols", ba.ml_cols, "ML bench |Y|");
  bench_cmd->add_option("--ml-samples", ba.ml_samples, "ML bench N");
  bench_cmd->add_option("--repeat", ba.repeat, "Timed repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) return cmd_train(ta, common);
    if (*eval_cmd) return cmd_eval(ea, common);
    if (*infer_cmd) return cmd_infer(ia, common);
    return cmd_bench(ba, common);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
