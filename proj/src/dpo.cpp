#include "gts/dpo.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <sstream>

namespace gts::dpo {

RuleExpr make_rule(const TypeGraph& tg, std::string name, std::vector<NodeName> iface_vars,
                   ConstituentPtr lhs, ConstituentPtr rhs) {
  std::set<std::string> names;
  NodeSet vars;
  for (const auto& v : iface_vars) {
    if (!names.insert(v.name).second)
      throw Error("rule '" + name + "' binds variable '" + v.name + "' twice");
    vars.insert(v);
  }
  // Rule sides are graph expressions whose interface is the variable list;
  // this validates typing and enforces the naming convention.
  GraphExpression l = make_expression(tg, vars, lhs);
  GraphExpression r = make_expression(tg, vars, rhs);
  return RuleExpr{std::move(name), std::move(iface_vars), l.body, r.body};
}

namespace {

struct GraphView {
  std::vector<NodeName> nodes;   // canonical order
  std::vector<EdgeComp> edges;   // canonical order, original ids
  std::map<std::string, EdgeComp> by_id;

  explicit GraphView(const GraphExpression& g) {
    nodes = canonical_bound_order(g);
    for (const auto& n : g.interface) nodes.push_back(n);
    std::map<NodeName, size_t> index;
    for (size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = i;
    GroundComponents gc = ground_components(g);
    edges = gc.edges;
    std::sort(edges.begin(), edges.end(), [&](const EdgeComp& a, const EdgeComp& b) {
      if (a.label != b.label) return a.label < b.label;
      std::vector<size_t> ia, ib;
      for (const auto& n : a.args) ia.push_back(index.at(n));
      for (const auto& n : b.args) ib.push_back(index.at(n));
      if (ia != ib) return ia < ib;
      return a.id < b.id;
    });
    for (const auto& e : edges) by_id[e.id] = e;
  }
};

struct LhsView {
  std::vector<EdgeComp> edges;          // sorted by id
  std::vector<NodeName> isolated_bound; // bn(lhs) not in any lhs edge
  NodeSet bound;
  NodeSet vars;

  LhsView(const RuleExpr& rule) {
    bound = bound_nodes(rule.lhs);
    for (const auto& v : rule.iface_vars) vars.insert(v);
    GroundComponents gc = ground_components(GraphExpression{vars, rule.lhs});
    edges = gc.edges;
    std::sort(edges.begin(), edges.end(),
              [](const EdgeComp& a, const EdgeComp& b) { return a.id < b.id; });
    NodeSet connected = connected_nodes(rule.lhs);
    for (const auto& n : bound)
      if (!connected.count(n)) isolated_bound.push_back(n);
  }
};

struct MatchSearch {
  const GraphView& g;
  const LhsView& lhs;
  const RuleExpr& rule;
  std::map<NodeName, NodeName> d;
  std::map<NodeName, NodeName> mv;
  std::set<NodeName> mv_image;
  std::set<NodeName> d_image;
  std::map<std::string, std::string> me;
  std::set<std::string> me_image;
  std::vector<Match>& out;

  MatchSearch(const GraphView& gv, const LhsView& lv, const RuleExpr& r, std::vector<Match>& o)
      : g(gv), lhs(lv), rule(r), out(o) {}

  // Unify one lhs argument with a host node; returns an undo action or
  // nullopt when inconsistent.
  std::optional<std::function<void()>> bind_arg(const NodeName& arg, const NodeName& host) {
    if (lhs.bound.count(arg)) {
      auto it = mv.find(arg);
      if (it != mv.end()) return it->second == host ? std::optional<std::function<void()>>([] {}) : std::nullopt;
      if (mv_image.count(host)) return std::nullopt;   // injectivity of m_v
      if (d_image.count(host)) return std::nullopt;    // identification
      if (arg.ty != host.ty) return std::nullopt;
      mv[arg] = host;
      mv_image.insert(host);
      return std::optional<std::function<void()>>([this, arg, host] {
        mv.erase(arg);
        mv_image.erase(host);
      });
    }
    auto it = d.find(arg);
    if (it != d.end()) return it->second == host ? std::optional<std::function<void()>>([] {}) : std::nullopt;
    if (mv_image.count(host)) return std::nullopt;      // identification
    if (arg.ty != host.ty) return std::nullopt;
    d[arg] = host;
    bool fresh_image = d_image.insert(host).second;
    return std::optional<std::function<void()>>([this, arg, host, fresh_image] {
      d.erase(arg);
      if (fresh_image) d_image.erase(host);
    });
  }

  bool dangling_ok() const {
    for (const auto& e : g.edges) {
      if (me_image.count(e.id)) continue;
      for (const auto& a : e.args)
        if (mv_image.count(a)) return false;
    }
    return true;
  }

  void emit() {
    Match m;
    m.rule = rule.name;
    m.interface_map = d;
    m.edge_map = me;
    m.bound_map = mv;
    m.residual.interface.clear();
    for (const auto& n : g.nodes)
      if (!mv_image.count(n)) m.residual.interface.insert(n);
    for (const auto& e : g.edges)
      if (!me_image.count(e.id)) m.residual.components.push_back(e);
    out.push_back(std::move(m));
  }

  void assign_vars(size_t idx) {
    while (idx < rule.iface_vars.size() && d.count(rule.iface_vars[idx])) ++idx;
    if (idx == rule.iface_vars.size()) {
      if (dangling_ok()) emit();
      return;
    }
    const NodeName& v = rule.iface_vars[idx];
    for (const auto& host : g.nodes) {
      if (host.ty != v.ty) continue;
      if (mv_image.count(host)) continue;  // identification
      d[v] = host;
      bool fresh = d_image.insert(host).second;
      assign_vars(idx + 1);
      d.erase(v);
      if (fresh) d_image.erase(host);
    }
  }

  void assign_isolated(size_t idx) {
    while (idx < lhs.isolated_bound.size() && mv.count(lhs.isolated_bound[idx])) ++idx;
    if (idx == lhs.isolated_bound.size()) {
      assign_vars(0);
      return;
    }
    const NodeName& b = lhs.isolated_bound[idx];
    for (const auto& host : g.nodes) {
      if (host.ty != b.ty) continue;
      if (mv_image.count(host) || d_image.count(host)) continue;
      mv[b] = host;
      mv_image.insert(host);
      assign_isolated(idx + 1);
      mv.erase(b);
      mv_image.erase(host);
    }
  }

  void assign_edges(size_t idx) {
    if (idx == lhs.edges.size()) {
      assign_isolated(0);
      return;
    }
    const EdgeComp& le = lhs.edges[idx];
    for (const auto& ge : g.edges) {
      if (ge.label != le.label || me_image.count(ge.id)) continue;
      std::vector<std::function<void()>> undo;
      bool ok = true;
      for (size_t i = 0; i < le.args.size() && ok; ++i) {
        auto u = bind_arg(le.args[i], ge.args[i]);
        if (!u)
          ok = false;
        else
          undo.push_back(std::move(*u));
      }
      if (ok) {
        me[le.id] = ge.id;
        me_image.insert(ge.id);
        assign_edges(idx + 1);
        me.erase(le.id);
        me_image.erase(ge.id);
      }
      for (auto it = undo.rbegin(); it != undo.rend(); ++it) (*it)();
    }
  }
};

}  // namespace

std::vector<Match> find_matches(const GraphExpression& g, const RuleExpr& rule) {
  if (!g.closed()) throw Error("matching requires a closed graph");
  GraphView gv(g);
  LhsView lv(rule);
  std::vector<Match> out;
  MatchSearch search(gv, lv, rule, out);
  search.assign_edges(0);
  return out;
}

ConditionReport verify_dpo_conditions(const GraphExpression& g, const RuleExpr& rule,
                                      const Match& match) {
  ConditionReport rep;
  auto add = [&rep](std::string cond, bool ok, std::string detail = "") {
    rep.items.push_back({std::move(cond), ok, std::move(detail)});
  };

  GroundComponents gc = ground_components(g);
  std::map<std::string, EdgeComp> g_edges;
  for (const auto& e : gc.edges) g_edges[e.id] = e;
  NodeSet lhs_bound = bound_nodes(rule.lhs);
  GroundComponents lhs_gc =
      ground_components(GraphExpression{NodeSet(rule.iface_vars.begin(), rule.iface_vars.end()),
                                        rule.lhs});

  {  // interface morphism d: total and type preserving, targets in G
    bool total = true, typed = true;
    std::string det;
    for (const auto& v : rule.iface_vars) {
      auto it = match.interface_map.find(v);
      if (it == match.interface_map.end()) {
        total = false;
        det = "variable '" + v.name + "' unassigned";
        break;
      }
      if (it->second.ty != v.ty || !gc.nodes.count(it->second)) {
        typed = false;
        det = "variable '" + v.name + "' mapped badly";
      }
    }
    add("interface-total", total, det);
    add("interface-typing", total && typed, det);
  }
  {  // m_v: total on bn(L), injective, type preserving, targets in G
    bool total = true, typed = true;
    std::string det;
    for (const auto& b : lhs_bound) {
      auto it = match.bound_map.find(b);
      if (it == match.bound_map.end()) {
        total = false;
        det = "bound node '" + b.name + "' unassigned";
        break;
      }
      if (it->second.ty != b.ty || !gc.nodes.count(it->second)) typed = false;
    }
    add("bound-total", total, det);
    add("bound-typing", total && typed);
    std::set<NodeName> image;
    bool inj = true;
    std::string inj_det;
    for (const auto& [b, host] : match.bound_map) {
      if (!image.insert(host).second) {
        inj = false;
        inj_det = "two deleted nodes map to '" + host.name + "'";
      }
    }
    add("bound-injective", inj, inj_det);
  }
  {  // m_e: total on ec(L), injective, label preserving, pointwise compatible
    bool total = true, inj = true, compat = true;
    std::string det;
    std::set<std::string> image;
    for (const auto& le : lhs_gc.edges) {
      auto it = match.edge_map.find(le.id);
      if (it == match.edge_map.end()) {
        total = false;
        det = "lhs edge '" + le.id + "' unassigned";
        continue;
      }
      if (!image.insert(it->second).second) inj = false;
      auto git = g_edges.find(it->second);
      if (git == g_edges.end()) {
        compat = false;
        det = "edge '" + it->second + "' not in host graph";
        continue;
      }
      const EdgeComp& ge = git->second;
      if (ge.label != le.label || ge.args.size() != le.args.size()) {
        compat = false;
        det = "label/arity mismatch on '" + le.id + "'";
        continue;
      }
      for (size_t i = 0; i < le.args.size(); ++i) {
        const NodeName& a = le.args[i];
        NodeName want;
        if (lhs_bound.count(a)) {
          auto bit = match.bound_map.find(a);
          if (bit == match.bound_map.end()) {
            compat = false;
            continue;
          }
          want = bit->second;
        } else {
          auto dit = match.interface_map.find(a);
          if (dit == match.interface_map.end()) {
            compat = false;
            continue;
          }
          want = dit->second;
        }
        if (ge.args[i] != want) {
          compat = false;
          det = "edge '" + le.id + "' argument " + std::to_string(i + 1) + " disagrees";
        }
      }
    }
    add("edge-total", total, det);
    add("edge-injective", inj);
    add("edge-compatible", compat, det);
  }
  {  // identification: images of d and m_v disjoint
    bool ok = true;
    std::string det;
    std::set<NodeName> dv;
    for (const auto& [v, host] : match.interface_map) dv.insert(host);
    for (const auto& [b, host] : match.bound_map) {
      if (dv.count(host)) {
        ok = false;
        det = "node '" + host.name + "' is both preserved and deleted";
      }
    }
    add("identification", ok, det);
  }
  {  // dangling: edges at deleted nodes must be matched
    bool ok = true;
    std::string det;
    std::set<NodeName> deleted;
    for (const auto& [b, host] : match.bound_map) deleted.insert(host);
    std::set<std::string> matched;
    for (const auto& [l, gid] : match.edge_map) matched.insert(gid);
    for (const auto& e : gc.edges) {
      if (matched.count(e.id)) continue;
      for (const auto& a : e.args) {
        if (deleted.count(a)) {
          ok = false;
          det = "unmatched edge '" + e.id + "' touches deleted node '" + a.name + "'";
        }
      }
    }
    add("dangling", ok, det);
  }
  return rep;
}

namespace {

std::string fresh_with_prefix(const std::string& prefix, int& counter,
                              const std::set<std::string>& taken) {
  for (;; ++counter) {
    std::string cand = prefix + std::to_string(counter);
    if (!taken.count(cand)) {
      ++counter;
      return cand;
    }
  }
}

}  // namespace

ApplyTrace apply_detailed(const GraphExpression& g, const RuleExpr& rule, const Match& match) {
  {
    ConditionReport rep = verify_dpo_conditions(g, rule, match);
    if (!rep.ok()) {
      std::string why;
      for (const auto& i : rep.items)
        if (!i.ok) why += i.condition + (i.detail.empty() ? "" : " (" + i.detail + ")") + "; ";
      throw Error("stale or invalid match: " + why);
    }
  }
  ApplyTrace out;

  std::set<NodeName> deleted;
  for (const auto& [b, host] : match.bound_map) deleted.insert(host);

  std::vector<NodeName> prefix;
  std::set<std::string> taken;
  GraphView gv(g);
  for (const auto& n : gv.nodes) {
    taken.insert(n.name);
    if (!deleted.count(n)) {
      prefix.push_back(n);
      out.preserved_nodes[n.name] = n.name;
    }
  }

  // Instantiate the right-hand side: interface variables by d, bound
  // nodes by globally fresh names.
  std::map<NodeName, NodeName> inst;
  for (const auto& [v, host] : match.interface_map) inst[v] = host;
  int node_counter = 0;
  GroundComponents rhs_gc = ground_components(
      GraphExpression{NodeSet(rule.iface_vars.begin(), rule.iface_vars.end()), rule.rhs});
  for (const auto& b : bound_nodes(rule.rhs)) {
    NodeName fresh{fresh_with_prefix("w", node_counter, taken), b.ty};
    taken.insert(fresh.name);
    inst[b] = fresh;
    prefix.push_back(fresh);
    out.created_nodes[fresh.name] = b.name;
  }

  std::vector<EdgeComp> components;
  std::set<std::string> edge_ids;
  for (const auto& e : match.residual.components) {
    components.push_back(e);
    edge_ids.insert(e.id);
    out.residual_edges[e.id] = e.id;
  }
  int edge_counter = 0;
  for (const auto& re : rhs_gc.edges) {
    EdgeComp e;
    e.id = fresh_with_prefix("e", edge_counter, edge_ids);
    edge_ids.insert(e.id);
    e.label = re.label;
    for (const auto& a : re.args) e.args.push_back(inst.at(a));
    out.created_edges[e.id] = re.id;
    components.push_back(std::move(e));
  }

  NormalGraph ng;
  ng.prefix = std::move(prefix);
  ng.components = std::move(components);
  out.result = ng.as_expression();
  return out;
}

GraphExpression apply(const GraphExpression& g, const RuleExpr& rule, const Match& match) {
  return apply_detailed(g, rule, match).result;
}

namespace {

std::map<std::string, int> usage_cap(const std::map<std::string, int>& usage,
                                     const std::map<std::string, int>& req) {
  std::map<std::string, int> capped;
  for (const auto& [r, n] : usage) {
    auto it = req.find(r);
    int lim = it == req.end() ? 0 : it->second;
    if (std::min(n, lim) > 0) capped[r] = std::min(n, lim);
  }
  return capped;
}

bool usage_geq(const std::map<std::string, int>& usage, const std::map<std::string, int>& req) {
  for (const auto& [r, n] : req) {
    auto it = usage.find(r);
    if (it == usage.end() || it->second < n) return false;
  }
  return true;
}

std::string usage_key(const std::map<std::string, int>& usage) {
  std::string s;
  for (const auto& [r, n] : usage) s += r + "=" + std::to_string(n) + ",";
  return s;
}

struct BfsNode {
  GraphExpression state;
  std::map<std::string, int> usage;
  int depth;
  long parent;  // index into nodes, -1 for the root
  std::string rule;
  Match match;
};

}  // namespace

ReachResult reachable(const GTS& gts, const GraphExpression& target, int max_steps,
                      const ReachMode& mode, std::size_t max_states) {
  if (!target.closed()) throw Error("reachability target must be closed");
  if (max_steps < 0) throw Error("max_steps must be non-negative");

  const std::map<std::string, int>* req = nullptr;
  bool exact = false;
  if (const auto* m = std::get_if<ExactMultiset>(&mode)) {
    req = &m->rules;
    exact = true;
  } else if (const auto* m = std::get_if<AtLeast>(&mode)) {
    req = &m->rules;
  }
  if (req)
    for (const auto& [r, n] : *req)
      if (!gts.rules.count(r)) throw Error("mode refers to unknown rule '" + r + "'");

  auto mode_sat = [&](const std::map<std::string, int>& usage) {
    if (!req) return true;
    if (exact) return usage == *req;
    return usage_geq(usage, *req);
  };
  auto dedup_key = [&](const GraphExpression& st, const std::map<std::string, int>& usage) {
    std::string key = canonical_key(st);
    if (!req) return key;
    return key + "|" + usage_key(exact ? usage : usage_cap(usage, *req));
  };
  auto build_trace = [&](const std::vector<BfsNode>& nodes, long idx) {
    DerivationSeq seq;
    std::vector<long> chain;
    for (long i = idx; i >= 0; i = nodes[i].parent) chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    for (long i : chain) {
      seq.states.push_back(nodes[i].state);
      if (nodes[i].parent >= 0) seq.steps.emplace_back(nodes[i].rule, nodes[i].match);
    }
    // states[0] is the root; steps were collected one short at the front
    if (!chain.empty() && nodes[chain.front()].parent == -1 && seq.steps.size() + 1 != seq.states.size()) {
      // defensive; cannot happen with a well-formed parent chain
      throw Error("internal: malformed trace chain");
    }
    return seq;
  };

  std::vector<BfsNode> nodes;
  std::set<std::string> seen;
  nodes.push_back({gts.initial, {}, 0, -1, "", {}});
  seen.insert(dedup_key(gts.initial, {}));
  if (mode_sat({}) && congruent(gts.initial, target))
    return {ReachStatus::Found, build_trace(nodes, 0)};

  std::deque<long> queue{0};
  bool exhausted = false;
  while (!queue.empty()) {
    long cur = queue.front();
    queue.pop_front();
    if (nodes[cur].depth >= max_steps) continue;
    for (const auto& [rname, rule] : gts.rules) {
      if (req && exact) {
        auto it = req->find(rname);
        int lim = it == req->end() ? 0 : it->second;
        auto uit = nodes[cur].usage.find(rname);
        int used = uit == nodes[cur].usage.end() ? 0 : uit->second;
        if (used >= lim) continue;  // would overshoot the exact multiset
      }
      std::vector<Match> matches = find_matches(nodes[cur].state, rule);
      for (auto& m : matches) {
        if (seen.size() >= max_states) {
          exhausted = true;
          break;
        }
        GraphExpression next = apply(nodes[cur].state, rule, m);
        auto usage = nodes[cur].usage;
        usage[rname] += 1;
        std::string key = dedup_key(next, usage);
        if (!seen.insert(key).second) continue;
        nodes.push_back({next, usage, nodes[cur].depth + 1, cur, rname, std::move(m)});
        long idx = static_cast<long>(nodes.size()) - 1;
        if (mode_sat(usage) && congruent(next, target))
          return {ReachStatus::Found, build_trace(nodes, idx)};
        queue.push_back(idx);
      }
      if (exhausted) break;
    }
    if (exhausted) break;
  }
  return {exhausted ? ReachStatus::FrontierExhausted : ReachStatus::NotReachable, std::nullopt};
}

std::map<std::string, DerivationSeq> reachable_set(const GTS& gts, int max_steps,
                                                   std::size_t max_states) {
  std::vector<BfsNode> nodes;
  std::map<std::string, long> seen;
  nodes.push_back({gts.initial, {}, 0, -1, "", {}});
  seen[canonical_key(gts.initial)] = 0;
  std::deque<long> queue{0};
  while (!queue.empty()) {
    long cur = queue.front();
    queue.pop_front();
    if (nodes[cur].depth >= max_steps) continue;
    for (const auto& [rname, rule] : gts.rules) {
      std::vector<Match> matches = find_matches(nodes[cur].state, rule);
      for (auto& m : matches) {
        if (seen.size() >= max_states) throw Error("state cap exceeded during exploration");
        GraphExpression next = apply(nodes[cur].state, rule, m);
        std::string key = canonical_key(next);
        if (seen.count(key)) continue;
        nodes.push_back({next, {}, nodes[cur].depth + 1, cur, rname, std::move(m)});
        long idx = static_cast<long>(nodes.size()) - 1;
        seen[key] = idx;
        queue.push_back(idx);
      }
    }
  }
  std::map<std::string, DerivationSeq> out;
  for (const auto& [key, idx] : seen) {
    DerivationSeq seq;
    std::vector<long> chain;
    for (long i = idx; i >= 0; i = nodes[i].parent) chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    for (long i : chain) {
      seq.states.push_back(nodes[i].state);
      if (nodes[i].parent >= 0) seq.steps.emplace_back(nodes[i].rule, nodes[i].match);
    }
    out[key] = std::move(seq);
  }
  return out;
}

}  // namespace gts::dpo
