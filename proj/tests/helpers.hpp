#pragma once

#include <random>
#include <vector>

#include "oracles.hpp"
#include "ttm/hmm.hpp"
#include "ttm/model.hpp"

namespace testing_util {

// Activity with a fixed duration.
inline ttm::Activity fixed(int id, double d, std::vector<int> parents, std::vector<int> required) {
  ttm::Activity a;
  a.id = id;
  a.parents = std::move(parents);
  a.required = std::move(required);
  a.t_min = a.t_exp = a.t_max = d;
  return a;
}

// Chain a0 -> a1 -> ... with fixed durations and one resource of availability 1
// that nobody uses.
inline ttm::ProcessModel fixed_chain(const std::vector<double>& durations) {
  ttm::ProcessModel model;
  for (std::size_t j = 0; j < durations.size(); ++j) {
    std::vector<int> parents;
    if (j > 0) parents.push_back(static_cast<int>(j - 1));
    model.activities.push_back(fixed(static_cast<int>(j), durations[j], parents, {0}));
  }
  model.availability = {1};
  return model;
}

// Random dense toy HMM with some structural zeros. Emissions take values in
// {0, 1} as well as the open interval so impossible symbols occur.
inline oracle::ToyHmm random_toy(std::mt19937_64& gen, std::size_t states, std::size_t resources) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto row = [&](std::size_t k) {
    std::vector<double> r(k);
    double total = 0.0;
    for (auto& x : r) {
      x = u(gen) < 0.25 ? 0.0 : u(gen);
      total += x;
    }
    if (total == 0.0) {
      r[std::uniform_int_distribution<std::size_t>(0, k - 1)(gen)] = 1.0;
      total = 1.0;
    }
    for (auto& x : r) x /= total;
    return r;
  };
  oracle::ToyHmm toy;
  toy.initial = row(states);
  for (std::size_t i = 0; i < states; ++i) toy.transition.push_back(row(states));
  for (std::size_t i = 0; i < states; ++i) {
    std::vector<double> e(resources);
    for (auto& x : e) {
      const double c = u(gen);
      x = c < 0.1 ? 0.0 : (c < 0.2 ? 1.0 : u(gen));
    }
    toy.emission.push_back(e);
  }
  return toy;
}

// Same model as an Hmm; state i carries the label {i + 1}.
inline ttm::Hmm to_hmm(const oracle::ToyHmm& toy) {
  std::vector<ttm::ActivitySet> labels;
  for (std::size_t i = 0; i < toy.initial.size(); ++i) labels.push_back({static_cast<int>(i) + 1});
  return ttm::Hmm::from_parts(labels, toy.initial, toy.transition, toy.emission);
}

inline std::vector<std::vector<std::uint8_t>> random_symbols(std::mt19937_64& gen, std::size_t length,
                                                             std::size_t resources) {
  std::vector<std::vector<std::uint8_t>> obs(length, std::vector<std::uint8_t>(resources));
  for (auto& s : obs)
    for (auto& b : s) b = static_cast<std::uint8_t>(gen() & 1U);
  return obs;
}

inline ttm::ObservationSequence to_sequence(const std::vector<std::vector<std::uint8_t>>& obs) {
  ttm::ObservationSequence seq;
  for (const auto& s : obs) seq.push_back({s});
  return seq;
}

}  // namespace testing_util
