#pragma once

// Shared test fixtures: expression builders, a seeded random expression
// generator, a congruence shuffler that applies the structural axioms,
// and brute-force oracles kept independent of the library code paths.

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "gts/dpo.hpp"
#include "gts/graph.hpp"

namespace gts::test {

inline TypeGraph bond_tg() {
  TypeGraph tg;
  tg.node_types = {"A"};
  tg.edge_types = {{"b", {"A", "A"}}};
  return tg;
}

// Two node types and three edge types; the generator's vocabulary.
inline TypeGraph rich_tg() {
  TypeGraph tg;
  tg.node_types = {"A", "B"};
  tg.edge_types = {{"b", {"A", "A"}}, {"c", {"A", "B"}}, {"d", {"B"}}};
  return tg;
}

// Unary predicates used in the non-provability suites.
inline TypeGraph obs3_tg() {
  TypeGraph tg;
  tg.node_types = {"A"};
  tg.edge_types = {{"b", {"A", "A"}}, {"b1", {"A"}}, {"b2", {"A"}}};
  return tg;
}

inline NodeName nn(const std::string& name, const std::string& ty = "A") { return {name, ty}; }

inline ConstituentPtr edge(const std::string& id, const std::string& label,
                           std::vector<NodeName> args) {
  return Constituent::make_edge(EdgeComp{id, label, std::move(args)});
}
inline ConstituentPtr nil() { return Constituent::nil(); }
inline ConstituentPtr par(ConstituentPtr l, ConstituentPtr r) {
  return Constituent::par(std::move(l), std::move(r));
}
inline ConstituentPtr nu(const NodeName& n, ConstituentPtr body) {
  return Constituent::nu(n, std::move(body));
}

inline GraphExpression expr(const TypeGraph& tg, NodeSet iface, ConstituentPtr body) {
  return make_expression(tg, std::move(iface), std::move(body));
}

// ---- random expressions -----------------------------------------------------

inline GraphExpression random_expr(std::mt19937& rng, const TypeGraph& tg, int max_nodes,
                                   int max_edges) {
  auto pick = [&rng](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  std::vector<std::string> types(tg.node_types.begin(), tg.node_types.end());

  int node_count = 1 + pick(max_nodes);
  std::vector<NodeName> pool;
  for (int i = 0; i < node_count; ++i)
    pool.push_back({"a" + std::to_string(i), types[static_cast<size_t>(pick(static_cast<int>(types.size())))]});

  NodeSet iface;
  std::vector<NodeName> bound;
  for (const auto& n : pool) {
    if (pick(2) == 0)
      iface.insert(n);
    else
      bound.push_back(n);
  }

  std::vector<std::pair<std::string, std::vector<std::string>>> labels(tg.edge_types.begin(),
                                                                       tg.edge_types.end());
  std::vector<ConstituentPtr> leaves;
  int edge_count = pick(max_edges + 1);
  int id = 0;
  for (int i = 0; i < edge_count; ++i) {
    const auto& [label, arity] = labels[static_cast<size_t>(pick(static_cast<int>(labels.size())))];
    std::vector<NodeName> args;
    bool ok = true;
    for (const auto& ty : arity) {
      std::vector<NodeName> candidates;
      for (const auto& n : pool)
        if (n.ty == ty) candidates.push_back(n);
      if (candidates.empty()) {
        ok = false;
        break;
      }
      args.push_back(candidates[static_cast<size_t>(pick(static_cast<int>(candidates.size())))]);
    }
    if (ok) leaves.push_back(edge("e" + std::to_string(id++), label, std::move(args)));
  }
  if (pick(3) == 0) leaves.push_back(nil());
  if (leaves.empty()) leaves.push_back(nil());

  while (leaves.size() > 1) {
    size_t i = static_cast<size_t>(pick(static_cast<int>(leaves.size())));
    size_t j = static_cast<size_t>(pick(static_cast<int>(leaves.size() - 1)));
    if (j >= i) ++j;
    ConstituentPtr merged = par(leaves[i], leaves[j]);
    if (i > j) std::swap(i, j);
    leaves.erase(leaves.begin() + static_cast<long>(j));
    leaves[i] = merged;
  }
  ConstituentPtr body = leaves[0];
  std::shuffle(bound.begin(), bound.end(), rng);
  for (const auto& n : bound) body = nu(n, body);
  return make_expression(tg, iface, body);
}

// ---- congruence shuffling -----------------------------------------------------

namespace detail {

using Path = std::vector<int>;

inline void collect_sites(const ConstituentPtr& c, Path& path,
                          std::vector<std::pair<std::string, Path>>& out) {
  switch (c->kind) {
    case Constituent::Kind::Par:
      out.push_back({"comm", path});
      out.push_back({"nil_intro", path});
      if (c->left->kind == Constituent::Kind::Par) out.push_back({"assoc_r", path});
      if (c->right->kind == Constituent::Kind::Par) out.push_back({"assoc_l", path});
      if (c->left->kind == Constituent::Kind::Nil) out.push_back({"nil_left", path});
      if (c->right->kind == Constituent::Kind::Nil) out.push_back({"nil_right", path});
      if (c->right->kind == Constituent::Kind::Nu) out.push_back({"scope_out", path});
      path.push_back(0);
      collect_sites(c->left, path, out);
      path.back() = 1;
      collect_sites(c->right, path, out);
      path.pop_back();
      break;
    case Constituent::Kind::Nu:
      out.push_back({"alpha", path});
      out.push_back({"nil_intro", path});
      if (c->body->kind == Constituent::Kind::Nu) out.push_back({"nu_swap", path});
      if (c->body->kind == Constituent::Kind::Par) out.push_back({"scope_in", path});
      path.push_back(0);
      collect_sites(c->body, path, out);
      path.pop_back();
      break;
    default:
      out.push_back({"nil_intro", path});
      break;
  }
}

inline ConstituentPtr apply_at(const ConstituentPtr& c, const Path& path, size_t idx,
                               const std::string& ax, std::mt19937& rng,
                               std::set<std::string>& names) {
  if (idx < path.size()) {
    int dir = path[idx];
    if (c->kind == Constituent::Kind::Par) {
      if (dir == 0) return Constituent::par(apply_at(c->left, path, idx + 1, ax, rng, names), c->right);
      return Constituent::par(c->left, apply_at(c->right, path, idx + 1, ax, rng, names));
    }
    return Constituent::nu(c->bound, apply_at(c->body, path, idx + 1, ax, rng, names));
  }
  if (ax == "comm") return Constituent::par(c->right, c->left);
  if (ax == "assoc_l") {
    // a || (b || c)  ->  (a || b) || c
    return Constituent::par(Constituent::par(c->left, c->right->left), c->right->right);
  }
  if (ax == "assoc_r") {
    // (a || b) || c  ->  a || (b || c)
    return Constituent::par(c->left->left, Constituent::par(c->left->right, c->right));
  }
  if (ax == "nil_intro") return Constituent::par(c, Constituent::nil());
  if (ax == "nil_left") return c->right;
  if (ax == "nil_right") return c->left;
  if (ax == "nu_swap") return Constituent::nu(c->body->bound, Constituent::nu(c->bound, c->body->body));
  if (ax == "alpha") {
    std::string fresh;
    for (int i = 0;; ++i) {
      fresh = "r" + std::to_string(std::uniform_int_distribution<int>(0, 999)(rng)) + "_" +
              std::to_string(i);
      if (!names.count(fresh)) break;
    }
    names.insert(fresh);
    NodeName nb{fresh, c->bound.ty};
    std::map<NodeName, NodeName> ren{{c->bound, nb}};
    std::function<ConstituentPtr(const ConstituentPtr&)> rn = [&](const ConstituentPtr& k) -> ConstituentPtr {
      switch (k->kind) {
        case Constituent::Kind::Nil:
          return k;
        case Constituent::Kind::Edge: {
          EdgeComp e = k->edge;
          for (auto& a : e.args)
            if (a == c->bound) a = nb;
          return Constituent::make_edge(std::move(e));
        }
        case Constituent::Kind::Par:
          return Constituent::par(rn(k->left), rn(k->right));
        case Constituent::Kind::Nu:
          return Constituent::nu(k->bound == c->bound ? nb : k->bound, rn(k->body));
      }
      return k;
    };
    return Constituent::nu(nb, rn(c->body));
  }
  if (ax == "scope_in") {
    // nu n. (l || r) -> l || nu n. r, valid when n is not free in l
    NodeSet fl = free_nodes(c->body->left);
    if (fl.count(c->bound))
      return Constituent::nu(c->bound,
                             Constituent::par(c->body->right, c->body->left));  // commute instead
    return Constituent::par(c->body->left, Constituent::nu(c->bound, c->body->right));
  }
  if (ax == "scope_out") {
    // l || nu n. r -> nu n. (l || r); the bound name never occurs in l
    return Constituent::nu(c->right->bound, Constituent::par(c->left, c->right->body));
  }
  return c;
}

}  // namespace detail

/// Applies `steps` random congruence axioms; the result is congruent to
/// the input by construction.
inline GraphExpression axiom_shuffle(std::mt19937& rng, const GraphExpression& e, int steps) {
  ConstituentPtr body = e.body;
  std::set<std::string> names;
  for (const auto& n : e.interface) names.insert(n.name);
  for (const auto& n : bound_nodes(body)) names.insert(n.name);
  for (int s = 0; s < steps; ++s) {
    std::vector<std::pair<std::string, detail::Path>> sites;
    detail::Path path;
    detail::collect_sites(body, path, sites);
    if (sites.empty()) break;
    auto& [ax, p] =
        sites[std::uniform_int_distribution<size_t>(0, sites.size() - 1)(rng)];
    body = detail::apply_at(body, p, 0, ax, rng, names);
  }
  return GraphExpression{e.interface, body};
}

// ---- oracles ----------------------------------------------------------------

/// Exhaustive congruence check: tries every type-respecting bijection of
/// bound nodes and compares the ground components directly.
inline bool congruent_oracle(const GraphExpression& e1, const GraphExpression& e2) {
  if (e1.interface != e2.interface) return false;
  GroundComponents g1 = ground_components(e1);
  GroundComponents g2 = ground_components(e2);
  std::vector<NodeName> b1, b2;
  for (const auto& n : bound_nodes(e1.body)) b1.push_back(n);
  for (const auto& n : bound_nodes(e2.body)) b2.push_back(n);
  if (b1.size() != b2.size()) return false;
  if (g1.edges.size() != g2.edges.size()) return false;

  std::sort(b2.begin(), b2.end());
  auto render = [](const EdgeComp& e, const std::map<NodeName, NodeName>& sigma) {
    std::string s = e.label + "(";
    for (const auto& a : e.args) {
      auto it = sigma.find(a);
      s += (it == sigma.end() ? a.name : it->second.name) + ";";
    }
    return s + ")";
  };
  do {
    std::map<NodeName, NodeName> sigma;
    bool typed = true;
    for (size_t i = 0; i < b1.size(); ++i) {
      if (b1[i].ty != b2[i].ty) {
        typed = false;
        break;
      }
      sigma[b1[i]] = b2[i];
    }
    if (!typed) continue;
    std::multiset<std::string> lhs, rhs;
    for (const auto& e : g1.edges) lhs.insert(render(e, sigma));
    for (const auto& e : g2.edges) rhs.insert(render(e, {}));
    if (lhs == rhs) return true;
  } while (std::next_permutation(b2.begin(), b2.end()));
  return false;
}

inline bool same_match(const dpo::Match& a, const dpo::Match& b) {
  return a.rule == b.rule && a.interface_map == b.interface_map && a.bound_map == b.bound_map &&
         a.edge_map == b.edge_map;
}

/// Enumerates every type-respecting triple (d, m_v, m_e) and keeps those
/// verify_dpo_conditions accepts. Independent of find_matches.
inline std::vector<dpo::Match> brute_force_matches(const GraphExpression& g,
                                                   const dpo::RuleExpr& rule) {
  GroundComponents gc = ground_components(g);
  std::vector<NodeName> nodes(gc.nodes.begin(), gc.nodes.end());
  std::vector<EdgeComp> gedges = gc.edges;
  NodeSet vars_set(rule.iface_vars.begin(), rule.iface_vars.end());
  GroundComponents lgc = ground_components(GraphExpression{vars_set, rule.lhs});
  std::vector<NodeName> lbound;
  for (const auto& n : bound_nodes(rule.lhs)) lbound.push_back(n);
  std::vector<EdgeComp> ledges = lgc.edges;
  std::sort(ledges.begin(), ledges.end(),
            [](const EdgeComp& a, const EdgeComp& b) { return a.id < b.id; });

  std::vector<dpo::Match> out;
  std::map<NodeName, NodeName> d, mv;
  std::map<std::string, std::string> me;

  std::function<void(size_t)> pick_edges = [&](size_t i) {
    if (i == ledges.size()) {
      dpo::Match m{rule.name, d, me, mv, {}};
      if (dpo::verify_dpo_conditions(g, rule, m).ok()) out.push_back(m);
      return;
    }
    std::set<std::string> used;
    for (const auto& [l, gid] : me) used.insert(gid);
    for (const auto& ge : gedges) {
      if (used.count(ge.id)) continue;
      me[ledges[i].id] = ge.id;
      pick_edges(i + 1);
      me.erase(ledges[i].id);
    }
  };
  std::function<void(size_t)> pick_bound = [&](size_t i) {
    if (i == lbound.size()) {
      pick_edges(0);
      return;
    }
    std::set<NodeName> used;
    for (const auto& [b, h] : mv) used.insert(h);
    for (const auto& h : nodes) {
      if (used.count(h)) continue;
      mv[lbound[i]] = h;
      pick_bound(i + 1);
      mv.erase(lbound[i]);
    }
  };
  std::function<void(size_t)> pick_vars = [&](size_t i) {
    if (i == rule.iface_vars.size()) {
      pick_bound(0);
      return;
    }
    for (const auto& h : nodes) {
      d[rule.iface_vars[i]] = h;
      pick_vars(i + 1);
      d.erase(rule.iface_vars[i]);
    }
  };
  pick_vars(0);
  return out;
}

}  // namespace gts::test
