#include "fgrn/lvm.hpp"

#include <set>
#include <string>

#include "fgrn/errors.hpp"
#include "fgrn/rng.hpp"

namespace fgrn {

namespace {

void check_variable(const VariableInfo& v) {
  if (v.labels.size() < 2) throw InvalidSpec("variable " + v.name + " needs >= 2 labels");
  std::set<std::string> seen(v.labels.begin(), v.labels.end());
  if (seen.size() != v.labels.size()) throw InvalidSpec("variable " + v.name + " has duplicate labels");
}

const std::size_t& class_slot(const Model& model) {
  if (!model.class_index) throw InvalidSpec("model has no class variable");
  return *model.class_index;
}

std::vector<Message> observed_forwards(const Model& model, Snapshot& s) {
  std::vector<Message> out;
  for (std::size_t j = 0; j < model.observed_count(); ++j) out.push_back(std::move(s.bottom[j].forward));
  return out;
}

}  // namespace

Model build(const LvmSpec& spec) {
  if (spec.hidden_dims.empty()) throw InvalidSpec("at least one hidden variable is required");
  if (spec.observed.empty()) throw InvalidSpec("at least one observed variable is required");
  for (std::size_t d : spec.hidden_dims) {
    if (d < 2) throw InvalidSpec("hidden cardinality must be >= 2");
  }
  for (const auto& v : spec.observed) check_variable(v);
  if (spec.class_variable) check_variable(*spec.class_variable);
  if (spec.naive_bayes) {
    if (!spec.class_variable) throw InvalidSpec("naive Bayes needs a class variable");
    if (spec.hidden_dims.size() != 1 || spec.hidden_dims[0] != spec.class_variable->size()) {
      throw InvalidSpec("naive Bayes needs a single hidden variable with |S| = |L|");
    }
  }

  Model m;
  m.hidden_dims = spec.hidden_dims;
  const std::size_t h = spec.hidden_dims.size();
  for (std::size_t i = 0; i < h; ++i) {
    VariableInfo info{h == 1 ? "S" : "S" + std::to_string(i + 1), {}};
    for (std::size_t k = 0; k < spec.hidden_dims[i]; ++k) info.labels.push_back(std::to_string(k));
    m.hidden.push_back(std::move(info));
    m.sources.emplace_back(Message::uniform(spec.hidden_dims[i]));
  }
  if (h > 1) m.selectors = build_selector_maps(spec.hidden_dims);
  const std::size_t p = m.product_size();

  Rng rng(spec.seed);
  for (const auto& v : spec.observed) {
    m.blocks.emplace_back(RowStochasticMatrix::random(p, v.size(), rng));
    m.variables.push_back(v);
  }
  if (spec.class_variable) {
    const auto& l = *spec.class_variable;
    if (spec.naive_bayes) {
      m.blocks.emplace_back(RowStochasticMatrix::identity(l.size()), true);
    } else {
      m.blocks.emplace_back(RowStochasticMatrix::random(p, l.size(), rng));
    }
    m.variables.push_back(l);
    m.class_index = m.blocks.size() - 1;
  }
  m.naive_bayes = spec.naive_bayes;
  m.diverter = Diverter(h + m.blocks.size(), p);
  m.validate();
  return m;
}

Evidence make_evidence(const Model& model, const std::vector<std::optional<Message>>& observed,
                       const std::optional<Message>& b_l) {
  if (observed.size() != model.observed_count()) {
    throw ShapeMismatch("expected " + std::to_string(model.observed_count()) +
                        " observed entries, got " + std::to_string(observed.size()));
  }
  Evidence ev;
  ev.bottom = observed;
  if (model.class_index) {
    ev.bottom.push_back(b_l);
  } else if (b_l) {
    throw InvalidSpec("model has no class variable");
  }
  return ev;
}

Classification classify(const Model& model, const std::vector<std::optional<Message>>& observed,
                        const PassOptions& options) {
  const std::size_t l = class_slot(model);
  Snapshot s = infer_pass(model, make_evidence(model, observed), options);
  Classification c{std::move(s.bottom[l].forward), 0};
  c.label = argmax(c.f_l);
  return c;
}

Completion complete(const Model& model, const std::vector<std::optional<Message>>& observed,
                    const std::optional<Message>& b_l, const PassOptions& options) {
  // A uniform class backward carries nothing; treat it as unknown so the
  // shortcut applies and the posterior product can be skipped.
  std::optional<Message> label = b_l;
  if (label && normalize(*label).is_uniform()) label.reset();
  Snapshot s = infer_pass(model, make_evidence(model, observed, label), options);
  Completion out;
  out.known = s.known;
  if (model.class_index) {
    const Link& l = s.bottom[*model.class_index];
    out.class_posterior = label ? marginal(l) : l.forward;
  }
  for (auto& link : s.bottom) out.forwards.push_back(std::move(link.forward));
  return out;
}

std::vector<Message> prototype(const Model& model, std::size_t j, const PassOptions& options) {
  const std::size_t l = class_slot(model);
  const std::size_t size = model.variables[l].size();
  if (j >= size) throw IndexOutOfRange(j, size);
  std::vector<std::optional<Message>> none(model.observed_count());
  Snapshot s = infer_pass(model, make_evidence(model, none, Message::delta(size, j)), options);
  return observed_forwards(model, s);
}

std::vector<Message> centroid(const Model& model, std::size_t j, const PassOptions& options) {
  if (model.hidden_count() != 1) throw InvalidSpec("centroids need a single hidden variable");
  const std::size_t size = model.hidden_dims[0];
  if (j >= size) throw IndexOutOfRange(j, size);
  Evidence ev = Evidence::none(model);
  ev.source_forward = {Message::delta(size, j)};
  Snapshot s = infer_pass(model, ev, options);
  return observed_forwards(model, s);
}

}  // namespace fgrn
