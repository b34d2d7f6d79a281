#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace unitsel {

using VarId = int;

// Assignment of states to variables, keyed by variable id.
using Instantiation = std::map<VarId, int>;

struct Variable {
  VarId id = 0;
  std::string name;
  std::vector<std::string> states;

  int cardinality() const { return static_cast<int>(states.size()); }
};

// Non-negative table over a scope sorted ascending by variable id. Values are
// laid out row-major with the last scope variable varying fastest. An empty
// scope is a scalar factor holding one value.
class Factor {
 public:
  Factor();  // scalar 1
  Factor(std::vector<VarId> scope, std::vector<int> cards, std::vector<double> values);

  static Factor scalar(double value);
  static Factor constant(std::vector<VarId> scope, std::vector<int> cards, double value);

  const std::vector<VarId>& scope() const { return scope_; }
  const std::vector<int>& cards() const { return cards_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool is_scalar() const { return scope_.empty(); }

  bool mentions(VarId var) const;
  int cardinality_of(VarId var) const;

  double operator[](std::size_t index) const { return values_[index]; }

  // Entry for an instantiation that assigns (at least) every scope variable.
  double at(const Instantiation& inst) const;
  std::size_t index_of(const Instantiation& inst) const;
  // Assignment of scope variables for a flat index.
  Instantiation assignment_at(std::size_t index) const;

  double total() const;

  friend bool operator==(const Factor&, const Factor&) = default;

 private:
  std::vector<VarId> scope_;
  std::vector<int> cards_;
  std::vector<double> values_;
};

// For every cell of a max_out result, one argmax assignment of the removed
// variables. Ties resolve to the smallest state index, scanning removed
// variables in ascending id order.
class MaximizerTable {
 public:
  MaximizerTable() = default;
  MaximizerTable(std::vector<VarId> reduced_scope, std::vector<int> reduced_cards,
                 std::vector<VarId> removed, std::vector<int> argmax_states);

  const std::vector<VarId>& reduced_scope() const { return reduced_scope_; }
  const std::vector<VarId>& removed() const { return removed_; }
  bool empty() const { return removed_.empty(); }

  // Argmax of the removed variables given values for the reduced scope.
  Instantiation lookup(const Instantiation& context) const;

 private:
  std::vector<VarId> reduced_scope_;
  std::vector<int> reduced_cards_;
  std::vector<VarId> removed_;
  std::vector<int> argmax_;  // cells x removed.size()
};

struct MaxOutResult {
  Factor factor;
  MaximizerTable maximizers;
};

Factor multiply(const Factor& f, const Factor& g);
Factor multiply_all(std::span<const Factor> factors);
Factor sum_out(const Factor& f, std::span<const VarId> vars);
MaxOutResult max_out(const Factor& f, std::span<const VarId> vars);
// Pointwise quotient over identical scopes; 0/0 = 0.
Factor divide(const Factor& f, const Factor& g);
// Zero every entry inconsistent with e; scope unchanged.
Factor reduce(const Factor& f, const Instantiation& e);

bool approx_equal(const Factor& f, const Factor& g, double rel_tol = 1e-9);

}  // namespace unitsel
