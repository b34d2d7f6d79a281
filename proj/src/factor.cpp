#include "unitsel/factor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "unitsel/errors.hpp"

namespace unitsel {

namespace {

std::size_t product(const std::vector<int>& cards) {
  std::size_t n = 1;
  for (int c : cards) n *= static_cast<std::size_t>(c);
  return n;
}

std::vector<std::size_t> strides_of(const std::vector<int>& cards) {
  std::vector<std::size_t> strides(cards.size());
  std::size_t s = 1;
  for (std::size_t i = cards.size(); i-- > 0;) {
    strides[i] = s;
    s *= static_cast<std::size_t>(cards[i]);
  }
  return strides;
}

// Stride of each `target` variable inside `scope` (0 when absent).
std::vector<std::size_t> projected_strides(const std::vector<VarId>& target,
                                           const std::vector<VarId>& scope,
                                           const std::vector<int>& cards) {
  auto strides = strides_of(cards);
  std::vector<std::size_t> out(target.size(), 0);
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto it = std::lower_bound(scope.begin(), scope.end(), target[i]);
    if (it != scope.end() && *it == target[i]) out[i] = strides[it - scope.begin()];
  }
  return out;
}

// Odometer over a scope, last variable fastest, tracking linear offsets into
// any number of projected tables.
class Odometer {
 public:
  Odometer(const std::vector<int>& cards, std::vector<std::vector<std::size_t>> strides)
      : cards_(cards), digits_(cards.size(), 0), strides_(std::move(strides)),
        offsets_(strides_.size(), 0) {}

  std::size_t offset(std::size_t table) const { return offsets_[table]; }
  int digit(std::size_t i) const { return digits_[i]; }

  void advance() {
    for (std::size_t i = cards_.size(); i-- > 0;) {
      if (++digits_[i] < cards_[i]) {
        for (std::size_t t = 0; t < strides_.size(); ++t) offsets_[t] += strides_[t][i];
        return;
      }
      for (std::size_t t = 0; t < strides_.size(); ++t)
        offsets_[t] -= strides_[t][i] * static_cast<std::size_t>(cards_[i] - 1);
      digits_[i] = 0;
    }
  }

 private:
  const std::vector<int>& cards_;
  std::vector<int> digits_;
  std::vector<std::vector<std::size_t>> strides_;
  std::vector<std::size_t> offsets_;
};

void check_vars_in_scope(const Factor& f, std::span<const VarId> vars, const char* op) {
  for (VarId v : vars) {
    if (!f.mentions(v)) {
      std::ostringstream msg;
      msg << op << ": variable " << v << " is not in the factor scope";
      throw StructuralError(msg.str());
    }
  }
}

struct SplitScope {
  std::vector<VarId> kept;
  std::vector<int> kept_cards;
  std::vector<VarId> removed;
  std::vector<int> removed_cards;
};

SplitScope split(const Factor& f, std::span<const VarId> vars) {
  std::vector<VarId> sorted(vars.begin(), vars.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  SplitScope s;
  for (std::size_t i = 0; i < f.scope().size(); ++i) {
    VarId v = f.scope()[i];
    if (std::binary_search(sorted.begin(), sorted.end(), v)) {
      s.removed.push_back(v);
      s.removed_cards.push_back(f.cards()[i]);
    } else {
      s.kept.push_back(v);
      s.kept_cards.push_back(f.cards()[i]);
    }
  }
  return s;
}

}  // namespace

Factor::Factor() : values_{1.0} {}

Factor::Factor(std::vector<VarId> scope, std::vector<int> cards, std::vector<double> values)
    : scope_(std::move(scope)), cards_(std::move(cards)), values_(std::move(values)) {
  if (scope_.size() != cards_.size())
    throw StructuralError("factor scope and cardinality lists differ in length");
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (cards_[i] < 1) throw StructuralError("factor variable with cardinality < 1");
    if (i > 0 && scope_[i - 1] >= scope_[i])
      throw StructuralError("factor scope must be strictly ascending by variable id");
  }
  if (values_.size() != product(cards_))
    throw StructuralError("factor table length does not match its scope");
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw StructuralError("factor entries must be finite and non-negative");
  }
}

Factor Factor::scalar(double value) { return Factor({}, {}, {value}); }

Factor Factor::constant(std::vector<VarId> scope, std::vector<int> cards, double value) {
  std::size_t n = product(cards);
  return Factor(std::move(scope), std::move(cards), std::vector<double>(n, value));
}

bool Factor::mentions(VarId var) const {
  return std::binary_search(scope_.begin(), scope_.end(), var);
}

int Factor::cardinality_of(VarId var) const {
  auto it = std::lower_bound(scope_.begin(), scope_.end(), var);
  if (it == scope_.end() || *it != var) throw StructuralError("variable not in factor scope");
  return cards_[it - scope_.begin()];
}

std::size_t Factor::index_of(const Instantiation& inst) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    auto it = inst.find(scope_[i]);
    if (it == inst.end()) throw StructuralError("instantiation does not cover the factor scope");
    if (it->second < 0 || it->second >= cards_[i])
      throw StructuralError("state index out of range");
    index = index * static_cast<std::size_t>(cards_[i]) + static_cast<std::size_t>(it->second);
  }
  return index;
}

double Factor::at(const Instantiation& inst) const { return values_[index_of(inst)]; }

Instantiation Factor::assignment_at(std::size_t index) const {
  Instantiation inst;
  for (std::size_t i = scope_.size(); i-- > 0;) {
    auto c = static_cast<std::size_t>(cards_[i]);
    inst[scope_[i]] = static_cast<int>(index % c);
    index /= c;
  }
  return inst;
}

double Factor::total() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

MaximizerTable::MaximizerTable(std::vector<VarId> reduced_scope, std::vector<int> reduced_cards,
                               std::vector<VarId> removed, std::vector<int> argmax_states)
    : reduced_scope_(std::move(reduced_scope)), reduced_cards_(std::move(reduced_cards)),
      removed_(std::move(removed)), argmax_(std::move(argmax_states)) {}

Instantiation MaximizerTable::lookup(const Instantiation& context) const {
  Instantiation out;
  if (removed_.empty()) return out;
  std::size_t cell = 0;
  for (std::size_t i = 0; i < reduced_scope_.size(); ++i) {
    auto it = context.find(reduced_scope_[i]);
    if (it == context.end()) throw StructuralError("maximizer lookup is missing a context variable");
    cell = cell * static_cast<std::size_t>(reduced_cards_[i]) + static_cast<std::size_t>(it->second);
  }
  for (std::size_t j = 0; j < removed_.size(); ++j) out[removed_[j]] = argmax_[cell * removed_.size() + j];
  return out;
}

Factor multiply(const Factor& f, const Factor& g) {
  std::vector<VarId> scope;
  std::vector<int> cards;
  std::size_t i = 0, j = 0;
  const auto& fs = f.scope();
  const auto& gs = g.scope();
  while (i < fs.size() || j < gs.size()) {
    if (j == gs.size() || (i < fs.size() && fs[i] < gs[j])) {
      scope.push_back(fs[i]);
      cards.push_back(f.cards()[i++]);
    } else if (i == fs.size() || gs[j] < fs[i]) {
      scope.push_back(gs[j]);
      cards.push_back(g.cards()[j++]);
    } else {
      if (f.cards()[i] != g.cards()[j]) {
        std::ostringstream msg;
        msg << "multiply: variable " << fs[i] << " has cardinality " << f.cards()[i] << " and "
            << g.cards()[j];
        throw StructuralError(msg.str());
      }
      scope.push_back(fs[i]);
      cards.push_back(f.cards()[i]);
      ++i;
      ++j;
    }
  }
  std::size_t n = product(cards);
  std::vector<double> values(n);
  Odometer odo(cards, {projected_strides(scope, fs, f.cards()), projected_strides(scope, gs, g.cards())});
  for (std::size_t k = 0; k < n; ++k, odo.advance()) values[k] = f[odo.offset(0)] * g[odo.offset(1)];
  return Factor(std::move(scope), std::move(cards), std::move(values));
}

Factor multiply_all(std::span<const Factor> factors) {
  Factor result;
  for (const auto& f : factors) result = multiply(result, f);
  return result;
}

Factor sum_out(const Factor& f, std::span<const VarId> vars) {
  check_vars_in_scope(f, vars, "sum_out");
  if (vars.empty()) return f;
  auto s = split(f, vars);
  std::vector<double> values(product(s.kept_cards), 0.0);
  Odometer odo(f.cards(), {projected_strides(f.scope(), s.kept, s.kept_cards)});
  for (std::size_t k = 0; k < f.size(); ++k, odo.advance()) values[odo.offset(0)] += f[k];
  return Factor(std::move(s.kept), std::move(s.kept_cards), std::move(values));
}

MaxOutResult max_out(const Factor& f, std::span<const VarId> vars) {
  check_vars_in_scope(f, vars, "max_out");
  if (vars.empty()) return {f, MaximizerTable{}};
  auto s = split(f, vars);
  std::size_t cells = product(s.kept_cards);
  std::vector<double> values(cells, 0.0);
  std::vector<bool> seen(cells, false);
  std::vector<int> argmax(cells * s.removed.size(), 0);

  // Removed-variable positions within f's scope, for reading digits.
  std::vector<std::size_t> removed_pos;
  for (std::size_t i = 0; i < f.scope().size(); ++i)
    if (std::binary_search(s.removed.begin(), s.removed.end(), f.scope()[i])) removed_pos.push_back(i);

  // Row-major traversal visits removed assignments of each cell in
  // lexicographic order, so a strict comparison keeps the smallest tie.
  Odometer odo(f.cards(), {projected_strides(f.scope(), s.kept, s.kept_cards)});
  for (std::size_t k = 0; k < f.size(); ++k, odo.advance()) {
    std::size_t cell = odo.offset(0);
    if (!seen[cell] || f[k] > values[cell]) {
      seen[cell] = true;
      values[cell] = f[k];
      for (std::size_t j = 0; j < removed_pos.size(); ++j)
        argmax[cell * removed_pos.size() + j] = odo.digit(removed_pos[j]);
    }
  }
  MaximizerTable table(s.kept, s.kept_cards, s.removed, std::move(argmax));
  return {Factor(std::move(s.kept), std::move(s.kept_cards), std::move(values)), std::move(table)};
}

Factor divide(const Factor& f, const Factor& g) {
  if (f.scope() != g.scope() || f.cards() != g.cards())
    throw StructuralError("divide: factors must share an identical scope");
  std::vector<double> values(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (g[k] == 0.0) {
      if (f[k] > 0.0) throw ConsistencyError("divide: positive entry over a zero denominator");
      values[k] = 0.0;
    } else {
      values[k] = f[k] / g[k];
    }
  }
  return Factor(f.scope(), f.cards(), std::move(values));
}

Factor reduce(const Factor& f, const Instantiation& e) {
  std::vector<std::pair<std::size_t, int>> constraints;  // scope position, state
  for (std::size_t i = 0; i < f.scope().size(); ++i) {
    auto it = e.find(f.scope()[i]);
    if (it != e.end()) constraints.emplace_back(i, it->second);
  }
  if (constraints.empty()) return f;
  std::vector<double> values(f.values());
  Odometer odo(f.cards(), {});
  for (std::size_t k = 0; k < f.size(); ++k, odo.advance()) {
    for (auto [pos, state] : constraints) {
      if (odo.digit(pos) != state) {
        values[k] = 0.0;
        break;
      }
    }
  }
  return Factor(f.scope(), f.cards(), std::move(values));
}

bool approx_equal(const Factor& f, const Factor& g, double rel_tol) {
  if (f.scope() != g.scope() || f.cards() != g.cards()) return false;
  for (std::size_t k = 0; k < f.size(); ++k) {
    double a = f[k], b = g[k];
    if (std::abs(a - b) > rel_tol * std::max({1.0, std::abs(a), std::abs(b)})) return false;
  }
  return true;
}

}  // namespace unitsel
