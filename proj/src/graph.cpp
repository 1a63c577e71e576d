#include "gts/graph.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

namespace gts {

void TypeGraph::validate() const {
  for (const auto& [label, ar] : edge_types) {
    for (const auto& t : ar) {
      if (!has_node_type(t))
        throw Error("edge type '" + label + "' uses undeclared node type '" + t + "'");
    }
    if (node_types.count(label))
      throw Error("name '" + label + "' declared as both node and edge type");
  }
}

bool same_shape(const EdgeComp& a, const EdgeComp& b) {
  return a.label == b.label && a.args == b.args;
}

ConstituentPtr Constituent::nil() {
  auto c = std::make_shared<Constituent>();
  c->kind = Kind::Nil;
  return c;
}

ConstituentPtr Constituent::make_edge(EdgeComp e) {
  auto c = std::make_shared<Constituent>();
  c->kind = Kind::Edge;
  c->edge = std::move(e);
  return c;
}

ConstituentPtr Constituent::par(ConstituentPtr l, ConstituentPtr r) {
  auto c = std::make_shared<Constituent>();
  c->kind = Kind::Par;
  c->left = std::move(l);
  c->right = std::move(r);
  return c;
}

ConstituentPtr Constituent::nu(NodeName n, ConstituentPtr b) {
  auto c = std::make_shared<Constituent>();
  c->kind = Kind::Nu;
  c->bound = std::move(n);
  c->body = std::move(b);
  return c;
}

namespace {

void walk(const ConstituentPtr& c, const std::function<void(const Constituent&)>& f) {
  f(*c);
  switch (c->kind) {
    case Constituent::Kind::Par:
      walk(c->left, f);
      walk(c->right, f);
      break;
    case Constituent::Kind::Nu:
      walk(c->body, f);
      break;
    default:
      break;
  }
}

void collect_free(const ConstituentPtr& c, std::set<NodeName>& bound_here, NodeSet& out) {
  switch (c->kind) {
    case Constituent::Kind::Edge:
      for (const auto& a : c->edge.args)
        if (!bound_here.count(a)) out.insert(a);
      break;
    case Constituent::Kind::Nil:
      break;
    case Constituent::Kind::Par:
      collect_free(c->left, bound_here, out);
      collect_free(c->right, bound_here, out);
      break;
    case Constituent::Kind::Nu: {
      bool fresh = bound_here.insert(c->bound).second;
      collect_free(c->body, bound_here, out);
      if (fresh) bound_here.erase(c->bound);
      break;
    }
  }
}

// Rename node occurrences, free and bound alike. Used internally where
// the renaming is known to be capture-free.
ConstituentPtr rename_all(const ConstituentPtr& c, const std::map<NodeName, NodeName>& m) {
  auto lookup = [&m](const NodeName& n) {
    auto it = m.find(n);
    return it == m.end() ? n : it->second;
  };
  switch (c->kind) {
    case Constituent::Kind::Nil:
      return c;
    case Constituent::Kind::Edge: {
      EdgeComp e = c->edge;
      for (auto& a : e.args) a = lookup(a);
      return Constituent::make_edge(std::move(e));
    }
    case Constituent::Kind::Par:
      return Constituent::par(rename_all(c->left, m), rename_all(c->right, m));
    case Constituent::Kind::Nu:
      return Constituent::nu(lookup(c->bound), rename_all(c->body, m));
  }
  return c;
}

std::string fresh_name(const std::string& base, const std::set<std::string>& taken) {
  if (!taken.count(base)) return base;
  for (int i = 0;; ++i) {
    std::string cand = base + "_" + std::to_string(i);
    if (!taken.count(cand)) return cand;
  }
}

// Syntactic normal form: scope-extruded prefix (pre-order) and the edge
// components in left-to-right order. Assumes the Barendregt convention.
struct RawNormal {
  std::vector<NodeName> prefix;
  std::vector<EdgeComp> components;
};

RawNormal raw_normal(const ConstituentPtr& body) {
  RawNormal out;
  walk(body, [&out](const Constituent& c) {
    if (c.kind == Constituent::Kind::Nu) out.prefix.push_back(c.bound);
    if (c.kind == Constituent::Kind::Edge) out.components.push_back(c.edge);
  });
  return out;
}

// ---- canonical labeling -------------------------------------------------
//
// Bound nodes are colored by iterative refinement over (type, incidence
// signature); remaining ties are broken by trying every order within a
// color cell and keeping the lexicographically least serialization.

struct Labeling {
  const NodeSet& interface;
  const RawNormal& raw;
  std::map<NodeName, std::string> color;  // bound nodes only

  explicit Labeling(const NodeSet& iface, const RawNormal& rn) : interface(iface), raw(rn) {
    for (const auto& n : raw.prefix) color[n] = "B:" + n.ty;
    refine();
  }

  std::string color_of(const NodeName& n) const {
    auto it = color.find(n);
    if (it != color.end()) return it->second;
    return "F:" + n.name + ":" + n.ty;
  }

  void refine() {
    for (size_t round = 0; round < color.size() + 1; ++round) {
      std::map<NodeName, std::string> next;
      for (const auto& [n, c] : color) {
        std::vector<std::string> sig;
        for (const auto& e : raw.components) {
          for (size_t i = 0; i < e.args.size(); ++i) {
            if (e.args[i] != n) continue;
            std::string s = e.label + "/" + std::to_string(i) + "(";
            for (const auto& a : e.args) s += color_of(a) + ",";
            sig.push_back(s + ")");
          }
        }
        std::sort(sig.begin(), sig.end());
        std::string acc = c + "|";
        for (const auto& s : sig) acc += s + ";";
        next[n] = acc;
      }
      // Compress to rank strings so colors stay short across rounds.
      std::set<std::string> distinct;
      for (const auto& [n, c] : next) distinct.insert(c);
      std::map<std::string, std::string> rank;
      int i = 0;
      for (const auto& c : distinct) rank[c] = "B#" + std::to_string(i++);
      bool changed = false;
      for (auto& [n, c] : color) {
        std::string r = rank[next[n]];
        if (r != c) changed = true;
        c = r;
      }
      if (!changed) break;
    }
  }

  // Cells of bound nodes grouped by color, cells ordered by color.
  std::vector<std::vector<NodeName>> cells() const {
    std::map<std::string, std::vector<NodeName>> by_color;
    for (const auto& n : raw.prefix) by_color[color.at(n)].push_back(n);
    std::vector<std::vector<NodeName>> out;
    for (auto& [c, ns] : by_color) {
      std::sort(ns.begin(), ns.end());
      out.push_back(ns);
    }
    return out;
  }
};

std::string serialize(const NodeSet& interface, const RawNormal& raw,
                      const std::vector<NodeName>& order) {
  std::map<NodeName, size_t> index;
  for (size_t i = 0; i < order.size(); ++i) index[order[i]] = i;
  auto tok = [&index](const NodeName& n) {
    auto it = index.find(n);
    if (it != index.end()) return "b" + std::to_string(it->second);
    return "f:" + n.name;
  };
  std::vector<std::string> comps;
  for (const auto& e : raw.components) {
    std::string s = e.label + "(";
    for (const auto& a : e.args) s += tok(a) + ",";
    comps.push_back(s + ")");
  }
  std::sort(comps.begin(), comps.end());
  std::ostringstream os;
  os << "iface{";
  for (const auto& n : interface) os << n.name << ":" << n.ty << ",";
  os << "};nu{";
  for (const auto& n : order) os << n.ty << ",";
  os << "};comps{";
  for (const auto& s : comps) os << s << ";";
  os << "}";
  return os.str();
}

// Enumerate per-cell permutations, tracking the least serialization.
void least_order(const NodeSet& interface, const RawNormal& raw,
                 std::vector<std::vector<NodeName>>& cells, size_t cell_idx,
                 std::vector<NodeName>& acc, std::string& best,
                 std::vector<NodeName>& best_order) {
  if (cell_idx == cells.size()) {
    std::string s = serialize(interface, raw, acc);
    if (best.empty() || s < best) {
      best = s;
      best_order = acc;
    }
    return;
  }
  auto& cell = cells[cell_idx];
  std::sort(cell.begin(), cell.end());
  do {
    size_t mark = acc.size();
    acc.insert(acc.end(), cell.begin(), cell.end());
    least_order(interface, raw, cells, cell_idx + 1, acc, best, best_order);
    acc.resize(mark);
  } while (std::next_permutation(cell.begin(), cell.end()));
}

struct Canonical {
  std::string key;
  std::vector<NodeName> order;  // canonical order of the bound nodes
};

Canonical canonicalize(const NodeSet& interface, const RawNormal& raw) {
  Labeling lab(interface, raw);
  auto cells = lab.cells();
  std::vector<NodeName> acc;
  Canonical out;
  least_order(interface, raw, cells, 0, acc, out.key, out.order);
  if (out.key.empty()) out.key = serialize(interface, raw, {});
  return out;
}

}  // namespace

NodeSet free_nodes(const ConstituentPtr& c) {
  NodeSet out;
  std::set<NodeName> bound_here;
  collect_free(c, bound_here, out);
  return out;
}

NodeSet bound_nodes(const ConstituentPtr& c) {
  NodeSet out;
  walk(c, [&out](const Constituent& k) {
    if (k.kind == Constituent::Kind::Nu) out.insert(k.bound);
  });
  return out;
}

NodeSet connected_nodes(const ConstituentPtr& c) {
  NodeSet out;
  walk(c, [&out](const Constituent& k) {
    if (k.kind == Constituent::Kind::Edge)
      for (const auto& a : k.edge.args) out.insert(a);
  });
  return out;
}

namespace {

// Alpha-rename so bound names are pairwise distinct and avoid `taken`.
ConstituentPtr barendregt(const ConstituentPtr& c, std::set<std::string>& taken,
                          std::map<NodeName, NodeName> scope) {
  switch (c->kind) {
    case Constituent::Kind::Nil:
      return c;
    case Constituent::Kind::Edge: {
      EdgeComp e = c->edge;
      for (auto& a : e.args) {
        auto it = scope.find(a);
        if (it != scope.end()) a = it->second;
      }
      return Constituent::make_edge(std::move(e));
    }
    case Constituent::Kind::Par:
      return Constituent::par(barendregt(c->left, taken, scope),
                              barendregt(c->right, taken, scope));
    case Constituent::Kind::Nu: {
      NodeName fresh{fresh_name(c->bound.name, taken), c->bound.ty};
      taken.insert(fresh.name);
      scope[c->bound] = fresh;
      return Constituent::nu(fresh, barendregt(c->body, taken, scope));
    }
  }
  return c;
}

}  // namespace

GraphExpression make_expression(const TypeGraph& tg, NodeSet interface, ConstituentPtr body) {
  tg.validate();
  for (const auto& n : interface) {
    if (!tg.has_node_type(n.ty))
      throw Error("interface node '" + n.name + "' has undeclared type '" + n.ty + "'");
  }
  {
    std::set<std::string> names;
    for (const auto& n : interface)
      if (!names.insert(n.name).second)
        throw Error("interface declares node name '" + n.name + "' twice");
  }

  std::set<std::string> taken;
  for (const auto& n : interface) taken.insert(n.name);
  for (const auto& n : free_nodes(body)) taken.insert(n.name);
  ConstituentPtr b = barendregt(body, taken, {});

  std::set<std::string> edge_ids;
  std::set<std::string> all_names;
  for (const auto& n : interface) all_names.insert(n.name);
  for (const auto& n : bound_nodes(b)) all_names.insert(n.name);
  std::map<std::string, std::string> name_type;

  walk(b, [&](const Constituent& c) {
    if (c.kind == Constituent::Kind::Edge) {
      const auto* ar = tg.arity(c.edge.label);
      if (!ar) throw Error("undeclared edge type '" + c.edge.label + "'");
      if (ar->size() != c.edge.args.size())
        throw Error("edge '" + c.edge.label + "' expects " + std::to_string(ar->size()) +
                    " argument(s), got " + std::to_string(c.edge.args.size()));
      for (size_t i = 0; i < ar->size(); ++i) {
        if (c.edge.args[i].ty != (*ar)[i])
          throw Error("argument " + std::to_string(i + 1) + " of edge '" + c.edge.label +
                      "' has type '" + c.edge.args[i].ty + "', expected '" + (*ar)[i] + "'");
      }
      if (c.edge.id.empty()) throw Error("edge component with empty id");
      if (!edge_ids.insert(c.edge.id).second)
        throw Error("duplicate edge id '" + c.edge.id + "'");
    }
    if (c.kind == Constituent::Kind::Nu && !tg.has_node_type(c.bound.ty))
      throw Error("bound node '" + c.bound.name + "' has undeclared type '" + c.bound.ty + "'");
  });
  // One type per name across the whole expression.
  auto note = [&name_type](const NodeName& n) {
    auto [it, fresh] = name_type.emplace(n.name, n.ty);
    if (!fresh && it->second != n.ty)
      throw Error("node name '" + n.name + "' used with types '" + it->second + "' and '" +
                  n.ty + "'");
  };
  for (const auto& n : interface) note(n);
  walk(b, [&](const Constituent& c) {
    if (c.kind == Constituent::Kind::Nu) note(c.bound);
    if (c.kind == Constituent::Kind::Edge)
      for (const auto& a : c.edge.args) note(a);
  });

  for (const auto& n : free_nodes(b)) {
    if (!interface.count(n))
      throw Error("free node '" + n.name + "' does not appear in the interface");
  }
  return GraphExpression{std::move(interface), std::move(b)};
}

NodeClassification classify(const GraphExpression& e) {
  NodeClassification c;
  c.free = e.interface;
  c.bound = bound_nodes(e.body);
  c.connected = connected_nodes(e.body);
  for (const auto& n : c.bound)
    if (!c.connected.count(n)) c.isolated_bound.insert(n);
  NodeSet fn = free_nodes(e.body);
  for (const auto& n : e.interface)
    if (!fn.count(n)) c.isolated_free.insert(n);
  return c;
}

GroundComponents ground_components(const GraphExpression& e) {
  RawNormal raw = raw_normal(e.body);
  GroundComponents out;
  out.nodes = e.interface;
  for (const auto& n : raw.prefix) out.nodes.insert(n);
  out.edges = raw.components;
  return out;
}

GraphExpression NormalGraph::as_expression() const {
  ConstituentPtr c;
  for (auto it = components.rbegin(); it != components.rend(); ++it) {
    auto leaf = Constituent::make_edge(*it);
    c = c ? Constituent::par(leaf, c) : leaf;
  }
  if (!c) c = Constituent::nil();
  for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) c = Constituent::nu(*it, c);
  return GraphExpression{interface, c};
}

NormalGraph normalize(const GraphExpression& e) {
  RawNormal raw = raw_normal(e.body);
  Canonical canon = canonicalize(e.interface, raw);

  std::set<std::string> taken;
  for (const auto& n : e.interface) taken.insert(n.name);
  std::map<NodeName, NodeName> ren;
  NormalGraph out;
  out.interface = e.interface;
  for (size_t i = 0; i < canon.order.size(); ++i) {
    NodeName c{fresh_name("n" + std::to_string(i), taken), canon.order[i].ty};
    taken.insert(c.name);
    ren[canon.order[i]] = c;
    out.prefix.push_back(c);
  }
  for (const auto& comp : raw.components) {
    EdgeComp e2 = comp;
    for (auto& a : e2.args) {
      auto it = ren.find(a);
      if (it != ren.end()) a = it->second;
    }
    out.components.push_back(std::move(e2));
  }
  std::sort(out.components.begin(), out.components.end(), [](const EdgeComp& a, const EdgeComp& b) {
    if (a.label != b.label) return a.label < b.label;
    if (a.args != b.args) return a.args < b.args;
    return a.id < b.id;
  });
  return out;
}

std::string canonical_key(const GraphExpression& e) {
  RawNormal raw = raw_normal(e.body);
  return canonicalize(e.interface, raw).key;
}

std::vector<NodeName> canonical_bound_order(const GraphExpression& e) {
  RawNormal raw = raw_normal(e.body);
  return canonicalize(e.interface, raw).order;
}

namespace {

std::string render_edge(const EdgeComp& e, const std::map<NodeName, NodeName>& sigma) {
  std::string s = e.label + "(";
  for (const auto& a : e.args) {
    auto it = sigma.find(a);
    s += (it == sigma.end() ? a.name : it->second.name) + ",";
  }
  return s + ")";
}

bool match_bound(const std::vector<NodeName>& b1, size_t idx,
                 const std::map<NodeName, std::string>& col1,
                 const std::map<NodeName, std::string>& col2,
                 const RawNormal& raw1, const RawNormal& raw2,
                 std::map<NodeName, NodeName>& sigma, std::set<NodeName>& used,
                 CongruenceWitness& out) {
  if (idx == b1.size()) {
    std::multiset<std::string> lhs, rhs;
    for (const auto& e : raw1.components) lhs.insert(render_edge(e, sigma));
    for (const auto& e : raw2.components) rhs.insert(render_edge(e, {}));
    if (lhs != rhs) return false;
    // Pair up equal renderings to produce the edge bijection.
    std::map<std::string, std::vector<std::string>> pool;
    for (const auto& e : raw2.components) pool[render_edge(e, {})].push_back(e.id);
    out.node_map = sigma;
    out.edge_map.clear();
    for (const auto& e : raw1.components) {
      auto& ids = pool[render_edge(e, sigma)];
      out.edge_map[e.id] = ids.back();
      ids.pop_back();
    }
    return true;
  }
  const NodeName& n = b1[idx];
  for (const auto& [m, c2] : col2) {
    if (used.count(m) || c2 != col1.at(n) || m.ty != n.ty) continue;
    sigma[n] = m;
    used.insert(m);
    if (match_bound(b1, idx + 1, col1, col2, raw1, raw2, sigma, used, out)) return true;
    sigma.erase(n);
    used.erase(m);
  }
  return false;
}

}  // namespace

std::optional<CongruenceWitness> congruent(const GraphExpression& e1, const GraphExpression& e2) {
  if (e1.interface != e2.interface) return std::nullopt;
  RawNormal raw1 = raw_normal(e1.body);
  RawNormal raw2 = raw_normal(e2.body);
  if (raw1.prefix.size() != raw2.prefix.size()) return std::nullopt;
  if (raw1.components.size() != raw2.components.size()) return std::nullopt;

  Labeling lab1(e1.interface, raw1);
  Labeling lab2(e2.interface, raw2);
  // Refined color histograms must agree.
  std::multiset<std::string> h1, h2;
  for (const auto& [n, c] : lab1.color) h1.insert(c);
  for (const auto& [n, c] : lab2.color) h2.insert(c);
  if (h1 != h2) return std::nullopt;

  std::vector<NodeName> b1 = raw1.prefix;
  std::map<NodeName, NodeName> sigma;
  std::set<NodeName> used;
  CongruenceWitness w;
  if (match_bound(b1, 0, lab1.color, lab2.color, raw1, raw2, sigma, used, w)) return w;
  return std::nullopt;
}

std::optional<NodeSet> heating(const GraphExpression& e1, const GraphExpression& e2) {
  // Restriction removes interface names, so the candidate set is forced.
  NodeSet restricted;
  for (const auto& n : e1.interface)
    if (!e2.interface.count(n)) restricted.insert(n);
  for (const auto& n : e2.interface)
    if (!e1.interface.count(n)) return std::nullopt;

  ConstituentPtr body = e1.body;
  for (auto it = restricted.rbegin(); it != restricted.rend(); ++it)
    body = Constituent::nu(*it, body);
  NodeSet iface;
  for (const auto& n : e1.interface)
    if (!restricted.count(n)) iface.insert(n);
  if (congruent(GraphExpression{iface, body}, e2)) return restricted;
  return std::nullopt;
}

GraphExpression substitute(const GraphExpression& e, const std::map<NodeName, NodeName>& map) {
  for (const auto& [from, to] : map) {
    if (!e.interface.count(from))
      throw Error("substitution source '" + from.name + "' is not a free node");
    if (from.ty != to.ty)
      throw Error("substitution maps '" + from.name + ":" + from.ty + "' to '" + to.name + ":" +
                  to.ty + "' of different type");
  }
  // Rename bound nodes clashing with any image name.
  NodeSet bound = bound_nodes(e.body);
  std::set<std::string> taken;
  for (const auto& n : e.interface) taken.insert(n.name);
  for (const auto& n : bound) taken.insert(n.name);
  for (const auto& [from, to] : map) taken.insert(to.name);

  std::map<NodeName, NodeName> avoid;
  for (const auto& b : bound) {
    for (const auto& [from, to] : map) {
      if (b.name == to.name) {
        NodeName fresh{fresh_name(b.name, taken), b.ty};
        taken.insert(fresh.name);
        avoid[b] = fresh;
      }
    }
  }
  ConstituentPtr body = avoid.empty() ? e.body : rename_all(e.body, avoid);

  // Apply the substitution to free occurrences (no captures remain).
  std::map<NodeName, NodeName> subst(map.begin(), map.end());
  body = rename_all(body, subst);
  if (!bound_nodes(body).empty()) {
    for (const auto& b : bound_nodes(body))
      for (const auto& [from, to] : map)
        if (b == to) throw Error("capture of '" + to.name + "' after renaming");
  }
  NodeSet iface;
  for (const auto& n : e.interface) {
    auto it = map.find(n);
    iface.insert(it == map.end() ? n : it->second);
  }
  return GraphExpression{std::move(iface), std::move(body)};
}

std::string node_list_to_string(const NodeSet& nodes) {
  std::string s;
  for (const auto& n : nodes) {
    if (!s.empty()) s += ", ";
    s += n.name + ":" + n.ty;
  }
  return s;
}

}  // namespace gts
