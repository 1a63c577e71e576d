#pragma once

// DPO rule expressions, match enumeration under the gluing condition,
// rule application and bounded reachability search.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gts/graph.hpp"

namespace gts::dpo {

/// A rule  Lambda x1:A1,...,xk:Ak. L => R  with a discrete shared
/// interface of typed variables.
struct RuleExpr {
  std::string name;
  std::vector<NodeName> iface_vars;  // variables with their node types
  ConstituentPtr lhs;
  ConstituentPtr rhs;
};

RuleExpr make_rule(const TypeGraph& tg, std::string name, std::vector<NodeName> iface_vars,
                   ConstituentPtr lhs, ConstituentPtr rhs);

/// A transformation system: type graph, named rules, closed start graph.
struct GTS {
  TypeGraph type_graph;
  std::map<std::string, RuleExpr> rules;
  GraphExpression initial;
};

/// A match of a rule in a closed graph.
struct Match {
  std::string rule;
  std::map<NodeName, NodeName> interface_map;     // d: iface var -> node of G
  std::map<std::string, std::string> edge_map;    // lhs edge id -> G edge id (injective)
  std::map<NodeName, NodeName> bound_map;         // bn(lhs) -> node of G (injective)
  NormalGraph residual;                           // context C: preserved nodes + unmatched edges
};

/// Independent re-check of the DPO conditions for a candidate match.
struct ConditionReport {
  struct Item {
    std::string condition;
    bool ok;
    std::string detail;
  };
  std::vector<Item> items;

  bool ok() const {
    for (const auto& i : items)
      if (!i.ok) return false;
    return true;
  }
};

/// All matches of `rule` in closed `g`, in a deterministic order.
std::vector<Match> find_matches(const GraphExpression& g, const RuleExpr& rule);

/// Re-checks totality, typing, injectivity, identification and dangling
/// conditions from scratch; reports each condition separately.
ConditionReport verify_dpo_conditions(const GraphExpression& g, const RuleExpr& rule,
                                      const Match& match);

/// Where each node/edge of the derived graph came from.
struct ApplyTrace {
  GraphExpression result;
  std::map<std::string, std::string> preserved_nodes;  // H node name -> G node name
  std::map<std::string, std::string> created_nodes;    // H node name -> rhs bound node name
  std::map<std::string, std::string> residual_edges;   // H edge id -> G edge id
  std::map<std::string, std::string> created_edges;    // H edge id -> rhs edge id
};

ApplyTrace apply_detailed(const GraphExpression& g, const RuleExpr& rule, const Match& match);

/// The derived graph of a direct transformation.
GraphExpression apply(const GraphExpression& g, const RuleExpr& rule, const Match& match);

/// A rewrite trace: states[0] is the start graph and applying steps[i]
/// to states[i] yields states[i+1].
struct DerivationSeq {
  std::vector<std::pair<std::string, Match>> steps;
  std::vector<GraphExpression> states;
};

struct Unlimited {};
struct ExactMultiset {
  std::map<std::string, int> rules;
};
struct AtLeast {
  std::map<std::string, int> rules;
};
using ReachMode = std::variant<Unlimited, ExactMultiset, AtLeast>;

enum class ReachStatus { Found, NotReachable, FrontierExhausted };

struct ReachResult {
  ReachStatus status;
  std::optional<DerivationSeq> trace;
};

/// Breadth-first search for a shortest trace from the initial graph to a
/// state congruent to `target`, deduplicated by canonical key, with the
/// rule-usage constraint of `mode`. `max_states` caps the explored set;
/// exceeding it is reported as FrontierExhausted, distinct from absence.
ReachResult reachable(const GTS& gts, const GraphExpression& target, int max_steps,
                      const ReachMode& mode = Unlimited{}, std::size_t max_states = 100000);

/// Canonical keys of every state reachable within `max_steps`, with a
/// shortest trace to each.
std::map<std::string, DerivationSeq> reachable_set(const GTS& gts, int max_steps,
                                                   std::size_t max_states = 100000);

}  // namespace gts::dpo
