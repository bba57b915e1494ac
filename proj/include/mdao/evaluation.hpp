#pragma once

// Result of a model evaluation that may be physically infeasible. Infeasible
// points are data (the optimizer treats them as violated constraints), so
// they travel as values instead of exceptions.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "mdao/datamodel.hpp"

namespace mdao {

template <class T>
struct Evaluation {
  std::optional<T> value;
  std::string infeasible_reason;

  static Evaluation ok(T v) { return Evaluation{std::move(v), {}}; }
  static Evaluation infeasible(std::string why) { return Evaluation{std::nullopt, std::move(why)}; }

  bool feasible() const { return value.has_value(); }
  const T& operator*() const { return *value; }
  const T* operator->() const { return &*value; }
};

/// A competence maps the current tree to a tree holding its outputs.
using CompetenceFunction = std::function<Evaluation<ParameterTree>(const ParameterTree&)>;
using CompetenceRegistry = std::map<std::string, CompetenceFunction, std::less<>>;

}  // namespace mdao
