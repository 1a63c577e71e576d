#pragma once

// Text forms for every syntax. The printers emit exactly the grammars the
// parsers read, so print-then-parse is the identity on ASTs.

#include <string>

#include "gts/dpo.hpp"
#include "gts/graph.hpp"
#include "gts/qill.hpp"

namespace gts {

std::string to_text(const ConstituentPtr& c);
std::string to_text(const GraphExpression& e);       // "{x:A} |= C"
std::string graph_decl_text(const std::string& name, const GraphExpression& e);
std::string rule_decl_text(const dpo::RuleExpr& r);

std::string to_text(const qill::FormulaPtr& f);
std::string to_text(const qill::TermPtr& t);
std::string to_text(const qill::Sequent& s);         // "Gamma: ...; Delta: ... |- M :: f;"

}  // namespace gts
