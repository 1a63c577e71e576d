#include "gts/encode.hpp"

#include <algorithm>
#include <functional>
#include <variant>

namespace gts::enc {

using qill::Binding;
using qill::Context;
using qill::Formula;
using qill::FormulaPtr;
using qill::ProofTerm;
using qill::Sequent;
using qill::TermPtr;
using qill::VarKind;

namespace {

struct FreshVars {
  std::set<std::string> taken;

  std::string make(const std::string& base) {
    if (taken.insert(base).second) return base;
    for (int i = 0;; ++i) {
      std::string cand = base + "_" + std::to_string(i);
      if (taken.insert(cand).second) return cand;
    }
  }
};

struct EncState {
  std::map<std::string, std::string> ref_of;  // node name -> reference variable
  FreshVars fv;
  std::vector<Binding> delta;
  GraphContext ctx;
};

std::pair<TermPtr, FormulaPtr> enc_constituent(const ConstituentPtr& c, EncState& st) {
  switch (c->kind) {
    case Constituent::Kind::Edge: {
      std::vector<std::string> args;
      for (const auto& a : c->edge.args) args.push_back(a.name);
      FormulaPtr ty = Formula::pred(c->edge.label, args);
      std::string v = st.fv.make("c_" + c->edge.id);
      st.delta.push_back({v, ty});
      st.ctx.edges.push_back({v, c->edge.label, args, c->edge.id});
      return {ProofTerm::var_ref(v, VarKind::Linear), ty};
    }
    case Constituent::Kind::Nil:
      return {ProofTerm::nil(), Formula::one()};
    case Constituent::Kind::Par: {
      auto [lt, lf] = enc_constituent(c->left, st);
      auto [rt, rf] = enc_constituent(c->right, st);
      return {ProofTerm::tensor(lt, rt), Formula::tensor(lf, rf)};
    }
    case Constituent::Kind::Nu: {
      const std::string& name = c->bound.name;
      const std::string& ref = st.ref_of.at(name);
      st.delta.push_back({ref, Formula::ref_to(Formula::atom(c->bound.ty), name)});
      st.ctx.nodes.push_back({name, c->bound.ty, name, ref});
      auto [bt, bf] = enc_constituent(c->body, st);
      return {ProofTerm::eps(ProofTerm::var_ref(ref, VarKind::Node), name, bt),
              Formula::dynex(name, Formula::atom(c->bound.ty), bf)};
    }
  }
  throw Error("unreachable constituent kind");
}

}  // namespace

GraphDerivation encode_expr(const GraphExpression& e) {
  EncState st;
  NodeSet bound = bound_nodes(e.body);
  for (const auto& n : e.interface) st.fv.taken.insert(n.name);
  for (const auto& n : bound) st.fv.taken.insert(n.name);
  for (const auto& n : e.interface) st.ref_of[n.name] = st.fv.make("n_" + n.name);
  for (const auto& n : bound) st.ref_of[n.name] = st.fv.make("n_" + n.name);

  std::vector<Binding> gamma;
  for (const auto& n : e.interface) gamma.push_back({n.name, Formula::atom(n.ty)});
  for (const auto& n : bound) gamma.push_back({n.name, Formula::atom(n.ty)});

  // Interface references first, in node order.
  for (const auto& n : e.interface) {
    const std::string& ref = st.ref_of.at(n.name);
    st.delta.push_back({ref, Formula::ref_to(Formula::atom(n.ty), n.name)});
    st.ctx.nodes.push_back({n.name, n.ty, n.name, ref});
  }
  auto [body_term, body_ty] = enc_constituent(e.body, st);

  TermPtr term = body_term;
  FormulaPtr ty = body_ty;
  for (auto it = e.interface.rbegin(); it != e.interface.rend(); ++it) {
    term = ProofTerm::tensor(ProofTerm::var_ref(st.ref_of.at(it->name), VarKind::Node), term);
    ty = Formula::tensor(Formula::ref_to(Formula::atom(it->ty), it->name), ty);
  }

  GraphDerivation out;
  out.conclusion = Sequent{Context{std::move(gamma), std::move(st.delta)}, term, ty};
  out.context = std::move(st.ctx);
  return out;
}

qill::FormulaPtr encode_type(const GraphExpression& e) { return encode_expr(e).conclusion.ty; }

GraphContext encode_context(const GraphExpression& e) { return encode_expr(e).context; }

bool introduction_only(const qill::TermPtr& t) {
  switch (t->kind) {
    case ProofTerm::Kind::Var:
    case ProofTerm::Kind::Nil:
      return true;
    case ProofTerm::Kind::Tensor:
      return introduction_only(t->a) && introduction_only(t->b);
    case ProofTerm::Kind::Eps:
      return introduction_only(t->a) && introduction_only(t->b);
    default:
      return false;
  }
}

// ---- formula analysis and decoding ----------------------------------------

namespace {

// Argument of an edge factor: a free referring variable or the index of
// an existential binder.
using ArgToken = std::variant<std::string, int>;

struct EdgeFactor {
  std::string label;
  std::vector<ArgToken> args;
};

// Skeleton mirrors the formula's shape so the decoded constituent keeps it.
struct Skeleton {
  enum class Kind { Edge, Nil, Par, Nu, Ref };
  Kind kind;
  int edge_index = -1;    // Kind::Edge
  int binder_index = -1;  // Kind::Nu
  std::unique_ptr<Skeleton> left, right, body;
};

struct FormulaAnalysis {
  std::vector<std::pair<std::string, std::string>> binders;  // (var, type) in pre-order
  std::map<std::string, std::string> refs;                   // free referring var -> type
  std::vector<EdgeFactor> edges;
  std::unique_ptr<Skeleton> skeleton;
};

std::unique_ptr<Skeleton> analyze_formula(const FormulaPtr& f, FormulaAnalysis& out,
                                          std::map<std::string, std::vector<int>>& scope) {
  auto node = [](Skeleton::Kind k) {
    auto s = std::make_unique<Skeleton>();
    s->kind = k;
    return s;
  };
  switch (f->kind) {
    case Formula::Kind::One:
      return node(Skeleton::Kind::Nil);
    case Formula::Kind::Pred: {
      EdgeFactor ef;
      ef.label = f->name;
      for (const auto& a : f->args) {
        auto it = scope.find(a);
        if (it != scope.end() && !it->second.empty())
          ef.args.emplace_back(it->second.back());
        else
          ef.args.emplace_back(a);
      }
      out.edges.push_back(std::move(ef));
      auto s = node(Skeleton::Kind::Edge);
      s->edge_index = static_cast<int>(out.edges.size()) - 1;
      return s;
    }
    case Formula::Kind::RefTo: {
      if (f->sort->kind != Formula::Kind::Atom)
        throw Error("reference type must carry a node type");
      auto it = scope.find(f->var);
      if (it != scope.end() && !it->second.empty())
        throw Error("reference factor for a bound variable is outside the graph fragment");
      auto [rit, fresh] = out.refs.emplace(f->var, f->sort->name);
      if (!fresh) throw Error("two reference factors for variable '" + f->var + "'");
      return node(Skeleton::Kind::Ref);
    }
    case Formula::Kind::Tensor: {
      auto s = node(Skeleton::Kind::Par);
      s->left = analyze_formula(f->l, out, scope);
      s->right = analyze_formula(f->r, out, scope);
      return s;
    }
    case Formula::Kind::DynEx: {
      if (f->sort->kind != Formula::Kind::Atom)
        throw Error("existential sort must be a node type");
      out.binders.emplace_back(f->var, f->sort->name);
      int idx = static_cast<int>(out.binders.size()) - 1;
      scope[f->var].push_back(idx);
      auto s = node(Skeleton::Kind::Nu);
      s->binder_index = idx;
      s->body = analyze_formula(f->l, out, scope);
      scope[f->var].pop_back();
      return s;
    }
    default:
      throw Error("formula is outside the graph fragment");
  }
}

FormulaAnalysis analyze_graph_formula(const FormulaPtr& f) {
  FormulaAnalysis out;
  std::map<std::string, std::vector<int>> scope;
  out.skeleton = analyze_formula(f, out, scope);
  // Every free edge argument needs a reference factor.
  for (const auto& ef : out.edges) {
    for (const auto& a : ef.args) {
      if (const auto* v = std::get_if<std::string>(&a)) {
        if (!out.refs.count(*v))
          throw Error("edge argument '" + *v + "' has no reference factor and is not bound");
      }
    }
  }
  return out;
}

ConstituentPtr skeleton_to_constituent(const Skeleton& s,
                                       const std::vector<NodeName>& binder_nodes,
                                       const std::map<std::string, NodeName>& free_nodes_by_var,
                                       const std::vector<EdgeComp>& edge_insts) {
  switch (s.kind) {
    case Skeleton::Kind::Nil:
    case Skeleton::Kind::Ref:
      return Constituent::nil();
    case Skeleton::Kind::Edge:
      return Constituent::make_edge(edge_insts[static_cast<size_t>(s.edge_index)]);
    case Skeleton::Kind::Par:
      return Constituent::par(
          skeleton_to_constituent(*s.left, binder_nodes, free_nodes_by_var, edge_insts),
          skeleton_to_constituent(*s.right, binder_nodes, free_nodes_by_var, edge_insts));
    case Skeleton::Kind::Nu:
      return Constituent::nu(
          binder_nodes[static_cast<size_t>(s.binder_index)],
          skeleton_to_constituent(*s.body, binder_nodes, free_nodes_by_var, edge_insts));
  }
  throw Error("unreachable skeleton kind");
}

std::string render_instance(const std::string& label, const std::vector<std::string>& args) {
  std::string s = label + "(";
  for (const auto& a : args) s += a + ",";
  return s + ")";
}

}  // namespace

GraphExpression decode(const TypeGraph& tg, const qill::FormulaPtr& gamma,
                       const GraphContext& delta) {
  FormulaAnalysis an = analyze_graph_formula(gamma);

  std::map<std::string, const TypedNodeEntry*> by_ind;
  std::set<std::string> node_names;
  for (const auto& ne : delta.nodes) {
    if (!by_ind.emplace(ne.ind_var, &ne).second)
      throw Error("context has two node entries referring to '" + ne.ind_var + "'");
    if (!node_names.insert(ne.node).second)
      throw Error("context names node '" + ne.node + "' twice");
  }

  // Free referring variables pick out the interface nodes.
  NodeSet interface;
  std::map<std::string, NodeName> free_by_var;
  std::set<std::string> used_entries;
  for (const auto& [var, ty] : an.refs) {
    auto it = by_ind.find(var);
    if (it == by_ind.end())
      throw Error("no context entry refers to free variable '" + var + "'");
    if (it->second->ty != ty)
      throw Error("reference factor for '" + var + "' has type " + ty +
                  " but the context entry has " + it->second->ty);
    interface.insert({it->second->node, it->second->ty});
    free_by_var[var] = {it->second->node, it->second->ty};
    used_entries.insert(var);
  }

  // The remaining node entries are the existential witnesses.
  std::vector<const TypedNodeEntry*> remaining;
  for (const auto& ne : delta.nodes)
    if (!used_entries.count(ne.ind_var)) remaining.push_back(&ne);
  if (remaining.size() != an.binders.size())
    throw Error("context has " + std::to_string(remaining.size()) +
                " witness entries for " + std::to_string(an.binders.size()) + " binders");

  std::multiset<std::string> want;
  for (const auto& ee : delta.edges) want.insert(render_instance(ee.label, ee.args));
  if (delta.edges.size() != an.edges.size())
    throw Error("context has " + std::to_string(delta.edges.size()) + " edge entries for " +
                std::to_string(an.edges.size()) + " edge factors");

  // Assign binders to witness entries so the edge multisets agree. The
  // entry arguments are node names, which coincide with referring
  // variables for encoded expressions.
  std::vector<const TypedNodeEntry*> assignment(an.binders.size(), nullptr);
  std::vector<bool> used(remaining.size(), false);

  auto render_factor = [&](const EdgeFactor& ef) {
    std::vector<std::string> args;
    for (const auto& a : ef.args) {
      if (const auto* v = std::get_if<std::string>(&a))
        args.push_back(free_by_var.at(*v).name);
      else
        args.push_back(assignment[static_cast<size_t>(std::get<int>(a))]->node);
    }
    return render_instance(ef.label, args);
  };

  std::function<bool(size_t)> assign = [&](size_t i) -> bool {
    if (i == an.binders.size()) {
      std::multiset<std::string> got;
      for (const auto& ef : an.edges) got.insert(render_factor(ef));
      return got == want;
    }
    for (size_t j = 0; j < remaining.size(); ++j) {
      if (used[j] || remaining[j]->ty != an.binders[i].second) continue;
      used[j] = true;
      assignment[i] = remaining[j];
      if (assign(i + 1)) return true;
      used[j] = false;
      assignment[i] = nullptr;
    }
    return false;
  };
  if (!assign(0))
    throw Error("no witness assignment matches the edge components of the formula");

  std::vector<NodeName> binder_nodes;
  for (size_t i = 0; i < an.binders.size(); ++i)
    binder_nodes.push_back({assignment[i]->node, assignment[i]->ty});

  // Pair edge factors with context entries by rendered instance.
  std::map<std::string, std::vector<const TypedEdgeEntry*>> pool;
  for (const auto& ee : delta.edges) pool[render_instance(ee.label, ee.args)].push_back(&ee);
  std::vector<EdgeComp> edge_insts;
  for (const auto& ef : an.edges) {
    auto& bucket = pool[render_factor(ef)];
    if (bucket.empty()) throw Error("internal: edge pairing failed after assignment");
    const TypedEdgeEntry* ee = bucket.back();
    bucket.pop_back();
    EdgeComp e;
    e.id = ee->edge_id.empty() ? ee->var : ee->edge_id;
    e.label = ef.label;
    for (const auto& a : ef.args) {
      if (const auto* v = std::get_if<std::string>(&a))
        e.args.push_back(free_by_var.at(*v));
      else
        e.args.push_back(binder_nodes[static_cast<size_t>(std::get<int>(a))]);
    }
    edge_insts.push_back(std::move(e));
  }

  ConstituentPtr body =
      skeleton_to_constituent(*an.skeleton, binder_nodes, free_by_var, edge_insts);
  return make_expression(tg, interface, body);
}

namespace {

// Decode with a synthesized context: free referring variables become the
// interface (named by their variables), binders become fresh bound nodes.
GraphExpression decode_synthesized(const TypeGraph& tg, const FormulaPtr& f) {
  FormulaAnalysis an = analyze_graph_formula(f);
  NodeSet interface;
  std::map<std::string, NodeName> free_by_var;
  std::set<std::string> taken;
  for (const auto& [var, ty] : an.refs) {
    interface.insert({var, ty});
    free_by_var[var] = {var, ty};
    taken.insert(var);
  }
  std::vector<NodeName> binder_nodes;
  for (const auto& [var, ty] : an.binders) {
    std::string name = var;
    for (int i = 0; taken.count(name); ++i) name = var + "_" + std::to_string(i);
    taken.insert(name);
    binder_nodes.push_back({name, ty});
  }
  std::vector<EdgeComp> edge_insts;
  int eid = 0;
  for (const auto& ef : an.edges) {
    EdgeComp e;
    e.id = "d" + std::to_string(eid++);
    e.label = ef.label;
    for (const auto& a : ef.args) {
      if (const auto* v = std::get_if<std::string>(&a))
        e.args.push_back(free_by_var.at(*v));
      else
        e.args.push_back(binder_nodes[static_cast<size_t>(std::get<int>(a))]);
    }
    edge_insts.push_back(std::move(e));
  }
  ConstituentPtr body =
      skeleton_to_constituent(*an.skeleton, binder_nodes, free_by_var, edge_insts);
  return make_expression(tg, interface, body);
}

FormulaPtr type_of_constituent(const ConstituentPtr& c) {
  switch (c->kind) {
    case Constituent::Kind::Edge: {
      std::vector<std::string> args;
      for (const auto& a : c->edge.args) args.push_back(a.name);
      return Formula::pred(c->edge.label, args);
    }
    case Constituent::Kind::Nil:
      return Formula::one();
    case Constituent::Kind::Par:
      return Formula::tensor(type_of_constituent(c->left), type_of_constituent(c->right));
    case Constituent::Kind::Nu:
      return Formula::dynex(c->bound.name, Formula::atom(c->bound.ty),
                            type_of_constituent(c->body));
  }
  throw Error("unreachable constituent kind");
}

}  // namespace

qill::FormulaPtr encode_rule(const dpo::RuleExpr& r) {
  FormulaPtr f = Formula::lolli(type_of_constituent(r.lhs), type_of_constituent(r.rhs));
  for (auto it = r.iface_vars.rbegin(); it != r.iface_vars.rend(); ++it)
    f = Formula::forall(it->name, Formula::atom(it->ty), f);
  return f;
}

bool formula_equiv(const TypeGraph& tg, const qill::FormulaPtr& f1, const qill::FormulaPtr& f2) {
  GraphExpression e1 = decode_synthesized(tg, f1);
  GraphExpression e2 = decode_synthesized(tg, f2);
  return congruent(e1, e2).has_value();
}

// ---- certificate construction ----------------------------------------------

namespace {

using Wrap = std::function<TermPtr(TermPtr)>;

Wrap wrap_identity() {
  return [](TermPtr t) { return t; };
}
Wrap wrap_compose(Wrap outer, Wrap inner) {
  return [outer = std::move(outer), inner = std::move(inner)](TermPtr t) {
    return outer(inner(t));
  };
}

struct Opened {
  std::map<std::string, std::pair<std::string, std::string>> nodes;  // node -> (ind, ref)
  std::map<std::string, std::string> edges;                          // edge id -> linear var
};

// Destructures scrut :: ty, with ty mirroring the constituent's shape,
// binding one variable per ground component.
Wrap open_constituent(const ConstituentPtr& c, const FormulaPtr& ty, const TermPtr& scrut,
                      FreshVars& fv, Opened& env) {
  switch (c->kind) {
    case Constituent::Kind::Edge: {
      if (scrut->kind == ProofTerm::Kind::Var) {
        env.edges[c->edge.id] = scrut->var;
        return wrap_identity();
      }
      std::string u = fv.make("c_" + c->edge.id);
      env.edges[c->edge.id] = u;
      return [u, ty, scrut](TermPtr t) {
        return ProofTerm::app_lin(ProofTerm::lam_lin(u, ty, t), scrut);
      };
    }
    case Constituent::Kind::Nil:
      return [scrut](TermPtr t) { return ProofTerm::let_nil(scrut, t); };
    case Constituent::Kind::Par: {
      std::string u = fv.make("u"), v = fv.make("v");
      Wrap w = [u, v, scrut](TermPtr t) { return ProofTerm::let_tensor(u, v, scrut, t); };
      w = wrap_compose(w, open_constituent(c->left, ty->l, ProofTerm::var_ref(u), fv, env));
      return wrap_compose(w, open_constituent(c->right, ty->r, ProofTerm::var_ref(v), fv, env));
    }
    case Constituent::Kind::Nu: {
      std::string x = fv.make(c->bound.name);
      std::string n = fv.make("n_" + c->bound.name);
      std::string v = fv.make("v");
      env.nodes[c->bound.name] = {x, n};
      FormulaPtr body_ty = qill::subst_formula(ty->l, x, ty->var);
      Wrap w = [n, x, v, scrut](TermPtr t) { return ProofTerm::let_eps(n, x, v, scrut, t); };
      return wrap_compose(w, open_constituent(c->body, body_ty, ProofTerm::var_ref(v), fv, env));
    }
  }
  throw Error("unreachable constituent kind");
}

// Destructures scrut :: [E]^T, including the interface reference factors.
// Interface nodes keep their ambient individual variables.
Wrap open_expression(const GraphExpression& e, const TermPtr& scrut, FreshVars& fv, Opened& env) {
  FormulaPtr ty = encode_type(e);
  TermPtr cur = scrut;
  Wrap w = wrap_identity();
  for (const auto& n : e.interface) {
    std::string r = fv.make("n_" + n.name);
    std::string rest = fv.make("u");
    env.nodes[n.name] = {n.name, r};
    TermPtr c = cur;
    w = wrap_compose(w, [r, rest, c](TermPtr t) { return ProofTerm::let_tensor(r, rest, c, t); });
    cur = ProofTerm::var_ref(rest);
    ty = ty->r;
  }
  return wrap_compose(w, open_constituent(e.body, ty, cur, fv, env));
}

using NodeResolver = std::function<const std::pair<std::string, std::string>&(const std::string&)>;
using EdgeResolver = std::function<const std::string&(const std::string&)>;

TermPtr rebuild_constituent(const ConstituentPtr& c, const NodeResolver& node_res,
                            const EdgeResolver& edge_res) {
  switch (c->kind) {
    case Constituent::Kind::Edge:
      return ProofTerm::var_ref(edge_res(c->edge.id), VarKind::Linear);
    case Constituent::Kind::Nil:
      return ProofTerm::nil();
    case Constituent::Kind::Par:
      return ProofTerm::tensor(rebuild_constituent(c->left, node_res, edge_res),
                               rebuild_constituent(c->right, node_res, edge_res));
    case Constituent::Kind::Nu: {
      const auto& [ind, ref] = node_res(c->bound.name);
      return ProofTerm::eps(ProofTerm::var_ref(ref, VarKind::Node), ind,
                            rebuild_constituent(c->body, node_res, edge_res));
    }
  }
  throw Error("unreachable constituent kind");
}

TermPtr rebuild_expression(const GraphExpression& e, const NodeResolver& node_res,
                           const EdgeResolver& edge_res) {
  TermPtr t = rebuild_constituent(e.body, node_res, edge_res);
  for (auto it = e.interface.rbegin(); it != e.interface.rend(); ++it)
    t = ProofTerm::tensor(ProofTerm::var_ref(node_res(it->name).second, VarKind::Node), t);
  return t;
}

NodeResolver env_node_resolver(const Opened& env) {
  return [&env](const std::string& name) -> const std::pair<std::string, std::string>& {
    auto it = env.nodes.find(name);
    if (it == env.nodes.end()) throw Error("internal: no opened entry for node '" + name + "'");
    return it->second;
  };
}
EdgeResolver env_edge_resolver(const Opened& env) {
  return [&env](const std::string& id) -> const std::string& {
    auto it = env.edges.find(id);
    if (it == env.edges.end()) throw Error("internal: no opened entry for edge '" + id + "'");
    return it->second;
  };
}

void require_checked(const Sequent& s, const char* what) {
  qill::CheckResult r = qill::check(s);
  if (!r.ok)
    throw Error(std::string("internal: ") + what + " certificate rejected by the kernel: " +
                qill::diag_name(r.diag) + ": " + r.message);
}

// Builds the proof term fragment for one rule application: reassembles
// the matched left-hand side, applies the rule head, and destructures the
// produced right-hand side. Updates the opened environment to the derived
// graph, whose bookkeeping is returned.
dpo::ApplyTrace build_step(const GraphExpression& state, const dpo::RuleExpr& rule,
                           const dpo::Match& match, const TermPtr& rule_head, FreshVars& fv,
                           Opened& env, Wrap& wrap_out) {
  NodeResolver lhs_nodes = [&](const std::string& name) -> const std::pair<std::string, std::string>& {
    for (const auto& [b, host] : match.bound_map)
      if (b.name == name) return env.nodes.at(host.name);
    throw Error("internal: lhs node '" + name + "' not in the match");
  };
  EdgeResolver lhs_edges = [&](const std::string& id) -> const std::string& {
    return env.edges.at(match.edge_map.at(id));
  };
  TermPtr lhs_term = rebuild_constituent(rule.lhs, lhs_nodes, lhs_edges);

  TermPtr spine = rule_head;
  for (const auto& v : rule.iface_vars) {
    const auto& host = match.interface_map.at(v);
    spine = ProofTerm::app_nl(
        spine, ProofTerm::var_ref(env.nodes.at(host.name).first, VarKind::Individual));
  }
  TermPtr applied = ProofTerm::app_lin(spine, lhs_term);

  FormulaPtr rhs_ty = type_of_constituent(rule.rhs);
  for (const auto& v : rule.iface_vars) {
    const auto& host = match.interface_map.at(v);
    rhs_ty = qill::subst_formula(rhs_ty, env.nodes.at(host.name).first, v.name);
  }

  // Resources consumed by the left-hand side leave the environment.
  for (const auto& [b, host] : match.bound_map) env.nodes.erase(host.name);
  for (const auto& [l, gid] : match.edge_map) env.edges.erase(gid);

  Opened rhs_env;
  wrap_out = open_constituent(rule.rhs, rhs_ty, applied, fv, rhs_env);

  dpo::ApplyTrace detail = dpo::apply_detailed(state, rule, match);
  for (const auto& [hname, rname] : detail.created_nodes) env.nodes[hname] = rhs_env.nodes.at(rname);
  for (const auto& [hid, rid] : detail.created_edges) env.edges[hid] = rhs_env.edges.at(rid);
  return detail;
}

}  // namespace

std::optional<Certificate> heating_implication(const GraphExpression& e1,
                                               const GraphExpression& e2) {
  auto restricted = heating(e1, e2);
  if (!restricted) return std::nullopt;

  ConstituentPtr body = e1.body;
  for (auto it = restricted->rbegin(); it != restricted->rend(); ++it)
    body = Constituent::nu(*it, body);
  GraphExpression e3{e2.interface, body};
  auto witness = congruent(e3, e2);
  if (!witness) throw Error("internal: heating witness vanished");

  // Source of every target component under the congruence.
  std::map<std::string, std::string> node_src;   // E2 node -> E1 node
  std::map<std::string, std::string> edge_src;   // E2 edge id -> E1 edge id
  for (const auto& [from, to] : witness->node_map) node_src[to.name] = from.name;
  for (const auto& n : e2.interface) node_src[n.name] = n.name;
  for (const auto& [from, to] : witness->edge_map) edge_src[to] = from;

  FreshVars fv;
  for (const auto& n : e1.interface) fv.taken.insert(n.name);
  std::string g = fv.make("g");
  Opened env;
  Wrap w = open_expression(e1, ProofTerm::var_ref(g), fv, env);

  NodeResolver nres = [&](const std::string& name) -> const std::pair<std::string, std::string>& {
    return env.nodes.at(node_src.at(name));
  };
  EdgeResolver eres = [&](const std::string& id) -> const std::string& {
    return env.edges.at(edge_src.at(id));
  };
  TermPtr rebuilt = rebuild_expression(e2, nres, eres);
  TermPtr term = ProofTerm::lam_lin(g, encode_type(e1), w(rebuilt));

  std::vector<Binding> gamma;
  for (const auto& n : e1.interface) gamma.push_back({n.name, Formula::atom(n.ty)});
  Sequent s{Context{std::move(gamma), {}}, term,
            Formula::lolli(encode_type(e1), encode_type(e2))};
  require_checked(s, "heating");
  return Certificate{std::move(s), std::nullopt};
}

namespace {

Certificate certify_step_impl(const GraphExpression& g, const dpo::RuleExpr& rule,
                              const dpo::Match& match, bool composed) {
  if (!g.closed()) throw Error("step certification requires a closed graph");
  FreshVars fv;
  fv.taken.insert("r");
  std::string gv = fv.make("g");
  Opened env;
  Wrap open_g = open_expression(g, ProofTerm::var_ref(gv), fv, env);

  Wrap step;
  dpo::ApplyTrace detail =
      build_step(g, rule, match, ProofTerm::var_ref("r", VarKind::Linear), fv, env, step);

  TermPtr body = rebuild_expression(detail.result, env_node_resolver(env), env_edge_resolver(env));
  TermPtr opened = open_g(step(body));

  Sequent s;
  if (composed) {
    s.ctx.delta.push_back({gv, encode_type(g)});
    s.ctx.delta.push_back({"r", encode_rule(rule)});
    s.term = opened;
    s.ty = encode_type(detail.result);
  } else {
    s.ctx.delta.push_back({"r", encode_rule(rule)});
    s.term = ProofTerm::lam_lin(gv, encode_type(g), opened);
    s.ty = Formula::lolli(encode_type(g), encode_type(detail.result));
  }
  require_checked(s, "step");
  return Certificate{std::move(s), std::nullopt};
}

}  // namespace

Certificate certify_step(const GraphExpression& g, const dpo::RuleExpr& rule,
                         const dpo::Match& match) {
  return certify_step_impl(g, rule, match, false);
}

Certificate certify_step_composed(const GraphExpression& g, const dpo::RuleExpr& rule,
                                  const dpo::Match& match) {
  return certify_step_impl(g, rule, match, true);
}

GtsEncoding encode_gts(const dpo::GTS& gts) {
  GtsEncoding out;
  GraphDerivation d = encode_expr(gts.initial);
  out.delta0 = d.context;
  for (const auto& ne : out.delta0.nodes)
    out.gamma.push_back({ne.ind_var, Formula::atom(ne.ty)});
  for (const auto& [name, rule] : gts.rules)
    out.rule_gamma.push_back({"p_" + name, encode_rule(rule)});
  return out;
}

namespace {

struct TraceCore {
  std::vector<Binding> gamma;
  std::vector<Binding> delta;
  FreshVars fv;
  Opened env;
  Wrap wrap = wrap_identity();
  GraphExpression final_state;
};

TraceCore build_trace_core(const dpo::GTS& gts, const dpo::DerivationSeq& trace, TraceStyle style,
                           const std::optional<std::map<std::string, int>>& provided_rules) {
  if (trace.states.empty()) throw Error("trace has no states");
  if (trace.states.size() != trace.steps.size() + 1)
    throw Error("trace has " + std::to_string(trace.states.size()) + " states for " +
                std::to_string(trace.steps.size()) + " steps");
  const GraphExpression& g0 = trace.states.front();
  if (!g0.closed()) throw Error("trace start graph must be closed");
  if (!congruent(g0, gts.initial)) throw Error("trace does not start at the initial graph");

  TraceCore tc;
  GraphDerivation d0 = encode_expr(g0);
  tc.gamma = d0.conclusion.ctx.gamma;
  tc.delta = d0.conclusion.ctx.delta;
  for (const auto& b : tc.gamma) tc.fv.taken.insert(b.var);
  for (const auto& b : tc.delta) tc.fv.taken.insert(b.var);
  for (const auto& ne : d0.context.nodes) tc.env.nodes[ne.node] = {ne.ind_var, ne.ref_var};
  for (const auto& ee : d0.context.edges) tc.env.edges[ee.edge_id] = ee.var;

  struct Instance {
    std::string var;
    std::string rule;
    bool used = false;
  };
  std::vector<Instance> instances;
  if (style == TraceStyle::NonlinearRules) {
    for (const auto& [name, rule] : gts.rules)
      tc.gamma.push_back({tc.fv.make("p_" + name), encode_rule(rule)});
  } else {
    if (provided_rules) {
      for (const auto& [rname, count] : *provided_rules) {
        if (!gts.rules.count(rname)) throw Error("unknown rule '" + rname + "' in instance multiset");
        for (int i = 0; i < count; ++i) instances.push_back({tc.fv.make("rho_" + rname), rname});
      }
    } else {
      for (const auto& [rname, m] : trace.steps) {
        if (!gts.rules.count(rname)) throw Error("trace step uses unknown rule '" + rname + "'");
        instances.push_back({tc.fv.make("rho_" + rname), rname});
      }
    }
    for (const auto& inst : instances)
      tc.delta.push_back({inst.var, encode_rule(gts.rules.at(inst.rule))});
  }

  GraphExpression cur = g0;
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& [rname, match] = trace.steps[i];
    auto rit = gts.rules.find(rname);
    if (rit == gts.rules.end()) throw Error("trace step uses unknown rule '" + rname + "'");

    TermPtr head;
    if (style == TraceStyle::NonlinearRules) {
      std::string hv;
      for (const auto& b : tc.gamma)
        if (b.var == "p_" + rname) hv = b.var;
      if (hv.empty()) throw Error("internal: rule variable missing");
      head = ProofTerm::var_ref(hv, VarKind::NonLinear);
    } else {
      Instance* found = nullptr;
      for (auto& inst : instances)
        if (!inst.used && inst.rule == rname) {
          found = &inst;
          break;
        }
      if (!found)
        throw CertifyRefused("insufficient rule instances: step " + std::to_string(i + 1) +
                             " needs another copy of rule '" + rname + "'");
      found->used = true;
      head = ProofTerm::var_ref(found->var, VarKind::Linear);
    }

    Wrap step;
    dpo::ApplyTrace detail = build_step(cur, rit->second, match, head, tc.fv, tc.env, step);
    tc.wrap = wrap_compose(tc.wrap, step);
    if (!congruent(detail.result, trace.states[i + 1]))
      throw Error("trace does not replay: step " + std::to_string(i + 1) +
                  " leads elsewhere than the recorded state");
    cur = detail.result;
  }
  tc.final_state = cur;
  return tc;
}

}  // namespace

Certificate certify_trace(const dpo::GTS& gts, const dpo::DerivationSeq& trace, TraceStyle style,
                          const std::optional<std::map<std::string, int>>& provided_rules) {
  TraceCore tc = build_trace_core(gts, trace, style, provided_rules);
  TermPtr body =
      rebuild_expression(tc.final_state, env_node_resolver(tc.env), env_edge_resolver(tc.env));
  Sequent s{Context{std::move(tc.gamma), std::move(tc.delta)}, tc.wrap(body),
            encode_type(tc.final_state)};
  require_checked(s, "trace");
  return Certificate{std::move(s), trace};
}

namespace {

struct PoolNode {
  std::string ind;
  std::string ref;
  std::string ty;
  bool used = false;
};
struct PoolEdge {
  std::string var;
  std::string label;
  std::vector<std::string> args;  // individual variables
  bool used = false;
};

struct ConstraintProver {
  std::vector<PoolNode> nodes;
  std::vector<PoolEdge> edges;

  bool prove(const FormulaPtr& f, const std::function<bool(TermPtr)>& k) {
    switch (f->kind) {
      case Formula::Kind::One:
        return k(ProofTerm::nil());
      case Formula::Kind::Tensor:
        return prove(f->l, [&](TermPtr m) {
          return prove(f->r, [&](TermPtr n) { return k(ProofTerm::tensor(m, n)); });
        });
      case Formula::Kind::Or: {
        if (prove(f->l, [&](TermPtr m) { return k(ProofTerm::inl(f->r, m)); })) return true;
        return prove(f->r, [&](TermPtr m) { return k(ProofTerm::inr(f->l, m)); });
      }
      case Formula::Kind::Pred: {
        for (auto& e : edges) {
          if (e.used || e.label != f->name || e.args != f->args) continue;
          e.used = true;
          if (k(ProofTerm::var_ref(e.var, VarKind::Linear))) return true;
          e.used = false;
        }
        return false;
      }
      case Formula::Kind::RefTo: {
        if (f->sort->kind != Formula::Kind::Atom) return false;
        for (auto& n : nodes) {
          if (n.used || n.ind != f->var || n.ty != f->sort->name) continue;
          n.used = true;
          if (k(ProofTerm::var_ref(n.ref, VarKind::Node))) return true;
          n.used = false;
        }
        return false;
      }
      case Formula::Kind::DynEx: {
        if (f->sort->kind != Formula::Kind::Atom) return false;
        for (auto& n : nodes) {
          if (n.used || n.ty != f->sort->name) continue;
          if (!qill::freshness(f->l, f->var, n.ind)) continue;
          n.used = true;
          FormulaPtr inst = qill::subst_formula(f->l, n.ind, f->var);
          std::string ind = n.ind, ref = n.ref;
          if (prove(inst, [&](TermPtr m) {
                return k(ProofTerm::eps(ProofTerm::var_ref(ref, VarKind::Node), ind, m));
              }))
            return true;
          n.used = false;
        }
        return false;
      }
      default:
        return false;  // outside the constructible fragment
    }
  }
};

}  // namespace

std::optional<Certificate> constraint_violation(const dpo::GTS& gts,
                                                const dpo::DerivationSeq& trace,
                                                const qill::FormulaPtr& alpha) {
  if (!qill::free_vars(alpha).empty())
    throw Error("constraint formula must be closed");
  TraceCore tc = build_trace_core(gts, trace, TraceStyle::NonlinearRules, std::nullopt);

  ConstraintProver prover;
  GroundComponents gc = ground_components(tc.final_state);
  for (const auto& n : gc.nodes) {
    const auto& [ind, ref] = tc.env.nodes.at(n.name);
    prover.nodes.push_back({ind, ref, n.ty});
  }
  for (const auto& e : gc.edges) {
    std::vector<std::string> args;
    for (const auto& a : e.args) args.push_back(tc.env.nodes.at(a.name).first);
    prover.edges.push_back({tc.env.edges.at(e.id), e.label, args});
  }

  TermPtr witness;
  bool found = prover.prove(alpha, [&](TermPtr m) {
    witness = m;
    return true;
  });
  if (!found) return std::nullopt;

  std::string na = tc.fv.make("na");
  tc.delta.push_back({na, Formula::lolli(alpha, Formula::bot())});
  TermPtr refute = ProofTerm::error(
      Formula::bot(), ProofTerm::app_lin(ProofTerm::var_ref(na, VarKind::Linear), witness));
  Sequent s{Context{std::move(tc.gamma), std::move(tc.delta)}, tc.wrap(refute), Formula::bot()};
  require_checked(s, "constraint");
  return Certificate{std::move(s), trace};
}

}  // namespace gts::enc
