#pragma once

// Parsers for the text formats: workspace declarations (node/edge types,
// graphs, rules, formulas, sequents) and standalone fragments.

#include <map>
#include <string>
#include <vector>

#include "gts/dpo.hpp"
#include "gts/graph.hpp"
#include "gts/qill.hpp"

namespace gts {

struct ParseError : Error {
  ParseError(const std::string& what) : Error(what) {}
};

struct Workspace {
  TypeGraph tg;
  std::map<std::string, GraphExpression> graphs;
  std::map<std::string, dpo::RuleExpr> rules;
  std::map<std::string, qill::FormulaPtr> formulas;
  std::map<std::string, qill::Sequent> sequents;

  /// Assembles the transformation system around the named start graph.
  dpo::GTS make_gts(const std::string& initial = "G0") const;
};

Workspace parse_workspace_text(const std::string& text, const std::string& filename = "<input>");
Workspace parse_workspace_files(const std::vector<std::string>& paths);

qill::FormulaPtr parse_formula_text(const std::string& text, const TypeGraph& tg);
qill::Sequent parse_sequent_text(const std::string& text, const TypeGraph& tg);

}  // namespace gts
