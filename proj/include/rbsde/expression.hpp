#pragma once

#include <memory>
#include <string>

#include "rbsde/lattice.hpp"

namespace rbsde {

/// Arithmetic expression over the node state: variables `t`, `W1..Wp`,
/// `N1..Nd`, constants `pi` and `e`, operators + - * / ^ and functions exp,
/// log, sqrt, abs, min, max. Parse errors raise ConfigError.
class Expression {
 public:
  struct Node;

  Expression() = default;
  static Expression parse(const std::string& text, int brownian_dim, int jump_channels);
  static Expression constant(double value);

  double operator()(const NodeState& s) const;
  bool is_constant() const;
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace rbsde
