#pragma once

// Shared builders for tests that compare the library against joint_oracle.

#include <optional>
#include <string>
#include <vector>

#include "fgrn/lvm.hpp"
#include "fgrn/rng.hpp"
#include "joint_oracle.hpp"

namespace fixtures {

inline fgrn::VariableInfo variable(const std::string& name, std::size_t size) {
  fgrn::VariableInfo v{name, {}};
  for (std::size_t k = 0; k < size; ++k) v.labels.push_back(name + "_" + std::to_string(k));
  return v;
}

inline oracle::Mat to_mat(const fgrn::RowStochasticMatrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline oracle::Vec to_vec(const fgrn::Message& m) { return {m.values().begin(), m.values().end()}; }

inline oracle::Lvm to_oracle(const fgrn::Model& model) {
  oracle::Lvm m;
  m.dims = model.hidden_dims;
  for (const auto& src : model.sources) m.priors.push_back(to_vec(src.prior()));
  for (const auto& b : model.blocks) m.theta.push_back(to_mat(b.theta()));
  return m;
}

/// Random one-layer LVM with |P| <= 8, N <= 4 bottom variables, |Y| <= 4,
/// and non-uniform random priors.
inline fgrn::Model random_model(fgrn::Rng& rng) {
  static const std::vector<std::vector<std::size_t>> shapes = {
      {2}, {3}, {4}, {5}, {6}, {7}, {8}, {2, 2}, {2, 3}, {3, 2}, {2, 4}, {4, 2}, {2, 2, 2}};
  fgrn::LvmSpec spec;
  spec.hidden_dims = shapes[rng.below(shapes.size())];
  spec.seed = rng.next();
  const std::size_t n = 1 + rng.below(4);
  for (std::size_t j = 0; j < n; ++j) spec.observed.push_back(variable("Y" + std::to_string(j), 2 + rng.below(3)));
  fgrn::Model model = fgrn::build(spec);
  for (auto& src : model.sources) {
    auto v = oracle::random_vec(rng, src.prior().size());
    for (double& x : v) x += 0.05;
    src.set_prior(fgrn::Message(v));
  }
  return model;
}

/// Each bottom variable is missing, a delta, or a strictly positive soft
/// vector with equal odds.
inline fgrn::Evidence random_evidence(fgrn::Rng& rng, const fgrn::Model& model) {
  fgrn::Evidence ev = fgrn::Evidence::none(model);
  for (std::size_t j = 0; j < model.bottom_count(); ++j) {
    const std::size_t d = model.variables[j].size();
    switch (rng.below(3)) {
      case 0:
        break;
      case 1:
        ev.bottom[j] = fgrn::Message::delta(d, rng.below(d));
        break;
      default: {
        auto v = oracle::random_vec(rng, d);
        for (double& x : v) x += 0.01;
        ev.bottom[j] = fgrn::Message(v);
      }
    }
  }
  return ev;
}

inline oracle::Observations to_oracle(const fgrn::Evidence& ev) {
  oracle::Observations out;
  for (const auto& b : ev.bottom) {
    if (b) out.push_back(to_vec(*b));
    else out.push_back(std::nullopt);
  }
  return out;
}

inline double diff(const fgrn::Message& a, const oracle::Vec& b) { return oracle::max_abs_diff(to_vec(a), b); }

/// Largest deviation of any forward, backward or marginal in the snapshot
/// from the enumeration oracle.
inline double max_error(const fgrn::Model& model, const fgrn::Evidence& ev, const fgrn::Snapshot& s) {
  const oracle::Expected e = oracle::expected_links(to_oracle(model), to_oracle(ev));
  double worst = 0.0;
  auto check = [&](const std::vector<fgrn::Link>& links, const std::vector<oracle::LinkValues>& want) {
    for (std::size_t i = 0; i < links.size(); ++i) {
      worst = std::max(worst, diff(links[i].forward, want[i].forward));
      worst = std::max(worst, diff(links[i].backward, want[i].backward));
      worst = std::max(worst, diff(fgrn::marginal(links[i]), want[i].marginal));
    }
  };
  check(s.sources, e.sources);
  check(s.products, e.products);
  check(s.branches, e.branches);
  check(s.bottom, e.bottom);
  return worst;
}

}  // namespace fixtures
