#pragma once

// Goal-directed, depth-bounded proof search for the multiplicative and
// quantifier fragment {1, *, -o, all, ex, @, !, atoms, predicates}.
// Sound (every returned term is re-checked by the kernel); absence at
// the bound is not a non-provability theorem.

#include <optional>

#include "gts/qill.hpp"

namespace gts::qill {

/// True when the formula stays within the searchable fragment.
bool in_search_fragment(const FormulaPtr& f);

/// Searches for a proof term of `goal` under `ctx`, using at most
/// `depth` rule applications along any branch. Throws gts::Error when
/// the goal or a context formula leaves the fragment.
std::optional<TermPtr> bounded_search(const Context& ctx, const FormulaPtr& goal, int depth);

}  // namespace gts::qill
