#pragma once

// The translation between graph expressions and QILL: encoding to typing
// derivations, decoding, rule translation, graph-formula equivalence and
// proof certificates for DPO steps, traces and constraint violations.

#include <optional>

#include "gts/dpo.hpp"
#include "gts/graph.hpp"
#include "gts/qill.hpp"

namespace gts::enc {

/// A typed node entry n :: A @ x of a graph context.
struct TypedNodeEntry {
  std::string node;     // node name in the expression
  std::string ty;       // node type A
  std::string ind_var;  // referring individual variable x (in Gamma)
  std::string ref_var;  // linear reference variable n (in Delta)
};

/// A typed edge component entry c :: L(x...) of a graph context.
struct TypedEdgeEntry {
  std::string var;  // linear variable c
  std::string label;
  std::vector<std::string> args;  // individual variables
  std::string edge_id;            // component identity in the expression
};

/// Multiset of typed nodes and typed edge components; the linear context
/// of a graph derivation, in bijection with the ground components.
struct GraphContext {
  std::vector<TypedNodeEntry> nodes;
  std::vector<TypedEdgeEntry> edges;

  std::size_t size() const { return nodes.size() + edges.size(); }
};

/// A graph derivation: the introduction-only typing derivation encoding a
/// graph expression, with the bookkeeping that ties context entries back
/// to ground components.
struct GraphDerivation {
  qill::Sequent conclusion;  // Gamma; Delta |- term :: type
  GraphContext context;

  const qill::FormulaPtr& main_type() const { return conclusion.ty; }
  const qill::TermPtr& main_term() const { return conclusion.term; }
};

/// True when the term uses only the graph-derivation forms (axioms and
/// the 1/tensor/existential introductions).
bool introduction_only(const qill::TermPtr& t);

GraphDerivation encode_expr(const GraphExpression& e);
qill::FormulaPtr encode_type(const GraphExpression& e);
GraphContext encode_context(const GraphExpression& e);

/// Inverse of the encoding: rebuilds a graph expression from a graph
/// formula and a consistent graph context. Throws gts::Error on input
/// outside the graph fragment or on a formula/context mismatch.
GraphExpression decode(const TypeGraph& tg, const qill::FormulaPtr& gamma,
                       const GraphContext& delta);

/// all x:A... . [L]^T -o [R]^T, with no reference factors on rule sides.
qill::FormulaPtr encode_rule(const dpo::RuleExpr& r);

/// Decides linear equivalence of two graph formulas by decoding both and
/// checking structural congruence. Valid only on the graph fragment.
bool formula_equiv(const TypeGraph& tg, const qill::FormulaPtr& f1, const qill::FormulaPtr& f2);

/// A kernel-checked sequent, optionally tied to the rewrite trace it
/// certifies.
struct Certificate {
  qill::Sequent sequent;
  std::optional<dpo::DerivationSeq> trace;
};

/// Raised when a certificate cannot be built for resource-count reasons
/// (e.g. fewer linear rule instances than the trace needs).
struct CertifyRefused : Error {
  explicit CertifyRefused(const std::string& what) : Error(what) {}
};

/// When E1 << E2, an explicit kernel-checked proof of
/// [E1]^T -o [E2]^T; absent otherwise.
std::optional<Certificate> heating_implication(const GraphExpression& e1,
                                               const GraphExpression& e2);

/// Certificate for one DPO step: Gamma; rule |- term :: [G]^T -o [H]^T.
Certificate certify_step(const GraphExpression& g, const dpo::RuleExpr& rule,
                         const dpo::Match& match);

/// Same step materialized with the source graph as a linear premise:
/// Gamma; g::[G]^T, rule |- term :: [H]^T.
Certificate certify_step_composed(const GraphExpression& g, const dpo::RuleExpr& rule,
                                  const dpo::Match& match);

enum class TraceStyle {
  NonlinearRules,    // rules in Gamma, reusable
  LinearInstances,   // one linear rule instance per step
};

/// Certificate for a whole trace. With LinearInstances, `provided_rules`
/// (rule name -> count) overrides the per-step instance multiset; the
/// builder refuses when an instance is missing.
Certificate certify_trace(const dpo::GTS& gts, const dpo::DerivationSeq& trace, TraceStyle style,
                          const std::optional<std::map<std::string, int>>& provided_rules =
                              std::nullopt);

/// The Obs-8 shaped encoding of a whole system.
struct GtsEncoding {
  std::vector<qill::Binding> gamma;        // referring individual variables for delta0
  std::vector<qill::Binding> rule_gamma;   // Gamma_P: one formula per rule
  GraphContext delta0;                     // ground components of the start graph
};

GtsEncoding encode_gts(const dpo::GTS& gts);

/// If the trace's final graph entails `alpha` by a constructible
/// introduction-style proof, a certificate of
///   Gamma, Gamma_P; Delta0, not-alpha |- error term :: bot.
/// Absent otherwise (no claim of non-entailment).
std::optional<Certificate> constraint_violation(const dpo::GTS& gts,
                                                const dpo::DerivationSeq& trace,
                                                const qill::FormulaPtr& alpha);

}  // namespace gts::enc
