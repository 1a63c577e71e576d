#pragma once

// Typed hypergraph expressions: interface + constituent syntax, node
// classification, structural congruence, normal forms, heating and
// substitution.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace gts {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Fixed vocabulary of node types and edge types with arities.
struct TypeGraph {
  std::set<std::string> node_types;
  std::map<std::string, std::vector<std::string>> edge_types;  // label -> arity

  bool has_node_type(const std::string& t) const { return node_types.count(t) > 0; }
  const std::vector<std::string>* arity(const std::string& label) const {
    auto it = edge_types.find(label);
    return it == edge_types.end() ? nullptr : &it->second;
  }
  // Every node type used in an arity must be declared.
  void validate() const;
};

/// A node occurrence: identifier plus its node type.
struct NodeName {
  std::string name;
  std::string ty;

  auto operator<=>(const NodeName&) const = default;
};

using NodeSet = std::set<NodeName>;

struct EdgeComp {
  std::string id;  // distinct per expression; ignored by congruence
  std::string label;
  std::vector<NodeName> args;
};

bool same_shape(const EdgeComp& a, const EdgeComp& b);  // label + args, id ignored

class Constituent;
using ConstituentPtr = std::shared_ptr<const Constituent>;

/// Constituent syntax: edge components, Nil, parallel composition and
/// node restriction. Values are immutable; subtrees are shared.
class Constituent {
 public:
  enum class Kind { Edge, Nil, Par, Nu };

  Kind kind;
  EdgeComp edge;            // Kind::Edge
  ConstituentPtr left;      // Kind::Par
  ConstituentPtr right;     // Kind::Par
  NodeName bound;           // Kind::Nu
  ConstituentPtr body;      // Kind::Nu

  static ConstituentPtr nil();
  static ConstituentPtr make_edge(EdgeComp e);
  static ConstituentPtr par(ConstituentPtr l, ConstituentPtr r);
  static ConstituentPtr nu(NodeName n, ConstituentPtr b);
};

NodeSet free_nodes(const ConstituentPtr& c);
NodeSet bound_nodes(const ConstituentPtr& c);
NodeSet connected_nodes(const ConstituentPtr& c);

/// A graph expression X |= C. `interface` is the set of free (gluable)
/// nodes; every free node of `body` must be in it.
struct GraphExpression {
  NodeSet interface;
  ConstituentPtr body;

  bool closed() const { return interface.empty(); }
};

/// Validating factory: checks types and arities against `tg`, fn(body)
/// within the interface, distinct edge ids, and alpha-renames bound
/// nodes so they are pairwise distinct and disjoint from the interface.
GraphExpression make_expression(const TypeGraph& tg, NodeSet interface, ConstituentPtr body);

/// Node sets of an expression, per-role.
struct NodeClassification {
  NodeSet free;            // the interface
  NodeSet bound;           // restricted in the body
  NodeSet connected;       // occurring in some edge component
  NodeSet isolated_bound;  // bound minus connected
  NodeSet isolated_free;   // interface minus free nodes of the body
};

NodeClassification classify(const GraphExpression& e);

/// X |= nu prefix. (c1 || ... || ck), Nil-free unless empty.
struct NormalGraph {
  NodeSet interface;
  std::vector<NodeName> prefix;     // bound nodes, outermost first
  std::vector<EdgeComp> components;

  GraphExpression as_expression() const;
};

/// Congruent normal form. Bound nodes are renamed to a canonical scheme
/// (n0, n1, ... in canonical-labeling order, primed on collision with
/// interface names) and components are sorted canonically.
NormalGraph normalize(const GraphExpression& e);

/// Nodes and edge components of an expression: (n(E), ec(E)).
struct GroundComponents {
  NodeSet nodes;
  std::vector<EdgeComp> edges;  // multiset; syntactic order
};

GroundComponents ground_components(const GraphExpression& e);

/// Witness for structural congruence: a bijective renaming of bound
/// nodes plus a compatible bijection of edge components by id.
struct CongruenceWitness {
  std::map<NodeName, NodeName> node_map;        // bn(E1) -> bn(E2)
  std::map<std::string, std::string> edge_map;  // E1 edge id -> E2 edge id
};

std::optional<CongruenceWitness> congruent(const GraphExpression& e1, const GraphExpression& e2);

/// E1 << E2: E2 is obtained from E1, modulo congruence, by restricting
/// the returned subset of E1's interface.
std::optional<NodeSet> heating(const GraphExpression& e1, const GraphExpression& e2);

/// Capture-avoiding substitution of free nodes. Domain must lie in the
/// interface and map types must agree; bound nodes are renamed first
/// when an image would be captured.
GraphExpression substitute(const GraphExpression& e, const std::map<NodeName, NodeName>& map);

/// Canonical string with: key(E1) == key(E2) iff congruent(E1, E2).
std::string canonical_key(const GraphExpression& e);

/// Bound nodes in the canonical-labeling order used by normalize,
/// under their original names.
std::vector<NodeName> canonical_bound_order(const GraphExpression& e);

std::string node_list_to_string(const NodeSet& nodes);

}  // namespace gts
