#include "gts/qill.hpp"

#include <algorithm>
#include <cassert>

namespace gts::qill {

namespace {
FormulaPtr mk(Formula::Kind k) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  return std::const_pointer_cast<const Formula>(std::shared_ptr<Formula>(std::move(f)));
}
std::shared_ptr<Formula> mut(Formula::Kind k) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  return f;
}
}  // namespace

FormulaPtr Formula::atom(std::string ty) {
  auto f = mut(Kind::Atom);
  f->name = std::move(ty);
  return f;
}
FormulaPtr Formula::pred(std::string label, std::vector<std::string> args) {
  auto f = mut(Kind::Pred);
  f->name = std::move(label);
  f->args = std::move(args);
  return f;
}
FormulaPtr Formula::one() { return mk(Kind::One); }
FormulaPtr Formula::top() { return mk(Kind::Top); }
FormulaPtr Formula::bot() { return mk(Kind::Bot); }
FormulaPtr Formula::tensor(FormulaPtr a, FormulaPtr b) {
  auto f = mut(Kind::Tensor);
  f->l = std::move(a);
  f->r = std::move(b);
  return f;
}
FormulaPtr Formula::lolli(FormulaPtr a, FormulaPtr b) {
  auto f = mut(Kind::Lolli);
  f->l = std::move(a);
  f->r = std::move(b);
  return f;
}
FormulaPtr Formula::with(FormulaPtr a, FormulaPtr b) {
  auto f = mut(Kind::With);
  f->l = std::move(a);
  f->r = std::move(b);
  return f;
}
FormulaPtr Formula::arrow(FormulaPtr a, FormulaPtr b) {
  auto f = mut(Kind::Arrow);
  f->l = std::move(a);
  f->r = std::move(b);
  return f;
}
FormulaPtr Formula::disj(FormulaPtr a, FormulaPtr b) {
  auto f = mut(Kind::Or);
  f->l = std::move(a);
  f->r = std::move(b);
  return f;
}
FormulaPtr Formula::bang(FormulaPtr a) {
  auto f = mut(Kind::Bang);
  f->l = std::move(a);
  return f;
}
FormulaPtr Formula::forall(std::string v, FormulaPtr sort, FormulaPtr body) {
  auto f = mut(Kind::Forall);
  f->var = std::move(v);
  f->sort = std::move(sort);
  f->l = std::move(body);
  return f;
}
FormulaPtr Formula::dynex(std::string v, FormulaPtr sort, FormulaPtr body) {
  auto f = mut(Kind::DynEx);
  f->var = std::move(v);
  f->sort = std::move(sort);
  f->l = std::move(body);
  return f;
}
FormulaPtr Formula::ref_to(FormulaPtr sort, std::string v) {
  auto f = mut(Kind::RefTo);
  f->sort = std::move(sort);
  f->var = std::move(v);
  return f;
}
FormulaPtr Formula::eq(FormulaPtr a, FormulaPtr b) {
  auto f = mut(Kind::Eq);
  f->l = std::move(a);
  f->r = std::move(b);
  return f;
}

namespace {

void free_vars_rec(const FormulaPtr& f, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (f->kind) {
    case Formula::Kind::Atom:
    case Formula::Kind::One:
    case Formula::Kind::Top:
    case Formula::Kind::Bot:
      break;
    case Formula::Kind::Pred:
      for (const auto& a : f->args)
        if (!bound.count(a)) out.insert(a);
      break;
    case Formula::Kind::RefTo:
      if (!bound.count(f->var)) out.insert(f->var);
      break;
    case Formula::Kind::Bang:
      free_vars_rec(f->l, bound, out);
      break;
    case Formula::Kind::Forall:
    case Formula::Kind::DynEx: {
      bool fresh = bound.insert(f->var).second;
      free_vars_rec(f->l, bound, out);
      if (fresh) bound.erase(f->var);
      break;
    }
    default:
      free_vars_rec(f->l, bound, out);
      free_vars_rec(f->r, bound, out);
      break;
  }
}

std::string fresh_var(const std::string& base, const std::set<std::string>& avoid) {
  if (!avoid.count(base)) return base;
  for (int i = 0;; ++i) {
    std::string cand = base + "'" + (i ? std::to_string(i) : "");
    if (!avoid.count(cand)) return cand;
  }
}

}  // namespace

std::set<std::string> free_vars(const FormulaPtr& f) {
  std::set<std::string> bound, out;
  free_vars_rec(f, bound, out);
  return out;
}

FormulaPtr subst_formula(const FormulaPtr& f, const std::string& t, const std::string& x) {
  if (t == x) return f;
  switch (f->kind) {
    case Formula::Kind::Atom:
    case Formula::Kind::One:
    case Formula::Kind::Top:
    case Formula::Kind::Bot:
      return f;
    case Formula::Kind::Pred: {
      bool hit = false;
      auto args = f->args;
      for (auto& a : args)
        if (a == x) {
          a = t;
          hit = true;
        }
      return hit ? Formula::pred(f->name, std::move(args)) : f;
    }
    case Formula::Kind::RefTo:
      return f->var == x ? Formula::ref_to(f->sort, t) : f;
    case Formula::Kind::Bang:
      return Formula::bang(subst_formula(f->l, t, x));
    case Formula::Kind::Forall:
    case Formula::Kind::DynEx: {
      if (f->var == x) return f;  // x is shadowed
      std::string binder = f->var;
      FormulaPtr body = f->l;
      if (binder == t) {
        // Rename the binder out of the way of the incoming variable.
        auto avoid = free_vars(body);
        avoid.insert(t);
        avoid.insert(x);
        std::string nb = fresh_var(binder, avoid);
        body = subst_formula(body, nb, binder);
        binder = nb;
      }
      body = subst_formula(body, t, x);
      return f->kind == Formula::Kind::Forall ? Formula::forall(binder, f->sort, body)
                                              : Formula::dynex(binder, f->sort, body);
    }
    case Formula::Kind::Tensor:
      return Formula::tensor(subst_formula(f->l, t, x), subst_formula(f->r, t, x));
    case Formula::Kind::Lolli:
      return Formula::lolli(subst_formula(f->l, t, x), subst_formula(f->r, t, x));
    case Formula::Kind::With:
      return Formula::with(subst_formula(f->l, t, x), subst_formula(f->r, t, x));
    case Formula::Kind::Arrow:
      return Formula::arrow(subst_formula(f->l, t, x), subst_formula(f->r, t, x));
    case Formula::Kind::Or:
      return Formula::disj(subst_formula(f->l, t, x), subst_formula(f->r, t, x));
    case Formula::Kind::Eq:
      return Formula::eq(subst_formula(f->l, t, x), subst_formula(f->r, t, x));
  }
  return f;
}

namespace {

bool alpha_eq_rec(const FormulaPtr& a, const FormulaPtr& b, std::map<std::string, int>& la,
                  std::map<std::string, int>& lb, int& next) {
  if (a->kind != b->kind) return false;
  auto var_eq = [&](const std::string& va, const std::string& vb) {
    auto ia = la.find(va);
    auto ib = lb.find(vb);
    if (ia != la.end() || ib != lb.end())
      return ia != la.end() && ib != lb.end() && ia->second == ib->second;
    return va == vb;
  };
  switch (a->kind) {
    case Formula::Kind::Atom:
      return a->name == b->name;
    case Formula::Kind::One:
    case Formula::Kind::Top:
    case Formula::Kind::Bot:
      return true;
    case Formula::Kind::Pred: {
      if (a->name != b->name || a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); ++i)
        if (!var_eq(a->args[i], b->args[i])) return false;
      return true;
    }
    case Formula::Kind::RefTo:
      return alpha_eq(a->sort, b->sort) && var_eq(a->var, b->var);
    case Formula::Kind::Bang:
      return alpha_eq_rec(a->l, b->l, la, lb, next);
    case Formula::Kind::Forall:
    case Formula::Kind::DynEx: {
      if (!alpha_eq(a->sort, b->sort)) return false;
      auto sa = la.find(a->var) != la.end() ? std::optional<int>(la[a->var]) : std::nullopt;
      auto sb = lb.find(b->var) != lb.end() ? std::optional<int>(lb[b->var]) : std::nullopt;
      la[a->var] = next;
      lb[b->var] = next;
      ++next;
      bool r = alpha_eq_rec(a->l, b->l, la, lb, next);
      if (sa)
        la[a->var] = *sa;
      else
        la.erase(a->var);
      if (sb)
        lb[b->var] = *sb;
      else
        lb.erase(b->var);
      return r;
    }
    default:
      return alpha_eq_rec(a->l, b->l, la, lb, next) && alpha_eq_rec(a->r, b->r, la, lb, next);
  }
}

}  // namespace

bool alpha_eq(const FormulaPtr& a, const FormulaPtr& b) {
  std::map<std::string, int> la, lb;
  int next = 0;
  return alpha_eq_rec(a, b, la, lb, next);
}

bool freshness(const FormulaPtr& alpha, const std::string& x, const std::string& y) {
  return alpha_eq(subst_formula(subst_formula(alpha, y, x), x, y), alpha);
}

// ---- proof term constructors ----------------------------------------------

namespace {
std::shared_ptr<ProofTerm> tmk(ProofTerm::Kind k) {
  auto t = std::make_shared<ProofTerm>();
  t->kind = k;
  return t;
}
}  // namespace

TermPtr ProofTerm::var_ref(std::string name, VarKind k) {
  auto t = tmk(Kind::Var);
  t->var = std::move(name);
  t->var_kind = k;
  return t;
}
TermPtr ProofTerm::nil() { return tmk(Kind::Nil); }
TermPtr ProofTerm::nil_eq() { return tmk(Kind::NilEq); }
TermPtr ProofTerm::unit() { return tmk(Kind::Unit); }
TermPtr ProofTerm::tensor(TermPtr m, TermPtr n) {
  auto t = tmk(Kind::Tensor);
  t->a = std::move(m);
  t->b = std::move(n);
  return t;
}
TermPtr ProofTerm::eps(TermPtr ref, std::string referring, TermPtr body) {
  auto t = tmk(Kind::Eps);
  t->a = std::move(ref);
  t->var = std::move(referring);
  t->b = std::move(body);
  return t;
}
TermPtr ProofTerm::lam_ind(std::string v, FormulaPtr sort, TermPtr body) {
  auto t = tmk(Kind::LamInd);
  t->var = std::move(v);
  t->ann = std::move(sort);
  t->a = std::move(body);
  return t;
}
TermPtr ProofTerm::lam_nl(std::string v, FormulaPtr ann, TermPtr body) {
  auto t = tmk(Kind::LamNL);
  t->var = std::move(v);
  t->ann = std::move(ann);
  t->a = std::move(body);
  return t;
}
TermPtr ProofTerm::lam_lin(std::string v, FormulaPtr ann, TermPtr body) {
  auto t = tmk(Kind::LamLin);
  t->var = std::move(v);
  t->ann = std::move(ann);
  t->a = std::move(body);
  return t;
}
TermPtr ProofTerm::app_lin(TermPtr f, TermPtr arg) {
  auto t = tmk(Kind::AppLin);
  t->a = std::move(f);
  t->b = std::move(arg);
  return t;
}
TermPtr ProofTerm::app_nl(TermPtr f, TermPtr arg) {
  auto t = tmk(Kind::AppNL);
  t->a = std::move(f);
  t->b = std::move(arg);
  return t;
}
TermPtr ProofTerm::error(FormulaPtr ann, TermPtr m) {
  auto t = tmk(Kind::Error);
  t->ann = std::move(ann);
  t->a = std::move(m);
  return t;
}
TermPtr ProofTerm::pair(TermPtr m, TermPtr n) {
  auto t = tmk(Kind::Pair);
  t->a = std::move(m);
  t->b = std::move(n);
  return t;
}
TermPtr ProofTerm::fst(TermPtr m) {
  auto t = tmk(Kind::Fst);
  t->a = std::move(m);
  return t;
}
TermPtr ProofTerm::snd(TermPtr m) {
  auto t = tmk(Kind::Snd);
  t->a = std::move(m);
  return t;
}
TermPtr ProofTerm::case_of(TermPtr scrut, std::string u, TermPtr n1, std::string v, TermPtr n2) {
  auto t = tmk(Kind::Case);
  t->a = std::move(scrut);
  t->var = std::move(u);
  t->b = std::move(n1);
  t->var2 = std::move(v);
  t->c = std::move(n2);
  return t;
}
TermPtr ProofTerm::inl(FormulaPtr ann, TermPtr m) {
  auto t = tmk(Kind::Inl);
  t->ann = std::move(ann);
  t->a = std::move(m);
  return t;
}
TermPtr ProofTerm::inr(FormulaPtr ann, TermPtr m) {
  auto t = tmk(Kind::Inr);
  t->ann = std::move(ann);
  t->a = std::move(m);
  return t;
}
TermPtr ProofTerm::bang(TermPtr m) {
  auto t = tmk(Kind::Bang);
  t->a = std::move(m);
  return t;
}
TermPtr ProofTerm::let_tensor(std::string u, std::string v, TermPtr m, TermPtr body) {
  auto t = tmk(Kind::LetTensor);
  t->var = std::move(u);
  t->var2 = std::move(v);
  t->a = std::move(m);
  t->b = std::move(body);
  return t;
}
TermPtr ProofTerm::let_nil(TermPtr m, TermPtr body) {
  auto t = tmk(Kind::LetNil);
  t->a = std::move(m);
  t->b = std::move(body);
  return t;
}
TermPtr ProofTerm::let_bang(std::string p, TermPtr m, TermPtr body) {
  auto t = tmk(Kind::LetBang);
  t->var = std::move(p);
  t->a = std::move(m);
  t->b = std::move(body);
  return t;
}
TermPtr ProofTerm::let_eps(std::string n, std::string x, std::string v, TermPtr m, TermPtr body) {
  auto t = tmk(Kind::LetEps);
  t->var = std::move(n);
  t->var2 = std::move(x);
  t->var3 = std::move(v);
  t->a = std::move(m);
  t->b = std::move(body);
  return t;
}

const char* diag_name(Diag d) {
  switch (d) {
    case Diag::None: return "none";
    case Diag::UnboundVariable: return "unbound-variable";
    case Diag::LinearUnused: return "linear-unused";
    case Diag::LinearReused: return "linear-reused";
    case Diag::UniquenessViolation: return "uniqueness-violation";
    case Diag::FreshnessViolation: return "freshness-violation";
    case Diag::AnnotationMismatch: return "annotation-mismatch";
    case Diag::TypeMismatch: return "type-mismatch";
    case Diag::ReferenceMismatch: return "reference-mismatch";
    case Diag::NonSynthesizable: return "non-synthesizable";
    case Diag::ContextInvalid: return "context-invalid";
  }
  return "unknown";
}

// ---- checker ---------------------------------------------------------------

namespace {

std::string short_formula(const FormulaPtr& f);

std::string short_formula(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::Atom: return f->name;
    case Formula::Kind::Pred: {
      std::string s = f->name + "(";
      for (size_t i = 0; i < f->args.size(); ++i) s += (i ? "," : "") + f->args[i];
      return s + ")";
    }
    case Formula::Kind::One: return "1";
    case Formula::Kind::Top: return "top";
    case Formula::Kind::Bot: return "bot";
    case Formula::Kind::Tensor: return "(" + short_formula(f->l) + " * " + short_formula(f->r) + ")";
    case Formula::Kind::Lolli: return "(" + short_formula(f->l) + " -o " + short_formula(f->r) + ")";
    case Formula::Kind::With: return "(" + short_formula(f->l) + " & " + short_formula(f->r) + ")";
    case Formula::Kind::Arrow: return "(" + short_formula(f->l) + " -> " + short_formula(f->r) + ")";
    case Formula::Kind::Or: return "(" + short_formula(f->l) + " | " + short_formula(f->r) + ")";
    case Formula::Kind::Bang: return "!" + short_formula(f->l);
    case Formula::Kind::Forall:
      return "all " + f->var + ":" + short_formula(f->sort) + ". " + short_formula(f->l);
    case Formula::Kind::DynEx:
      return "ex " + f->var + ":" + short_formula(f->sort) + ". " + short_formula(f->l);
    case Formula::Kind::RefTo: return short_formula(f->sort) + " @ " + f->var;
    case Formula::Kind::Eq: return "(" + short_formula(f->l) + " == " + short_formula(f->r) + ")";
  }
  return "?";
}

struct CheckError {
  CheckResult result;
};

[[noreturn]] void fail(Diag d, const std::string& msg) { throw CheckError{CheckResult::fail(d, msg)}; }

struct DeltaEntry {
  std::string name;
  FormulaPtr ty;
  bool consumed = false;
};

struct Syn {
  FormulaPtr ty;
  bool slack = false;  // a top/error sink may absorb leftover resources
};

class Checker {
 public:
  explicit Checker(const Context& ctx) {
    for (const auto& b : ctx.gamma) gamma_.push_back(b);
    for (const auto& b : ctx.delta) delta_.push_back({b.var, b.ty, false});
  }

  Syn check_against(const TermPtr& t, const FormulaPtr& expected);
  Syn synth(const TermPtr& t);

  bool all_consumed(std::string* leftover) const {
    for (const auto& e : delta_) {
      if (!e.consumed) {
        if (leftover) *leftover = e.name;
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Binding> gamma_;
  std::vector<DeltaEntry> delta_;
  std::vector<size_t> locks_;  // visibility boundaries for non-linear subterms

  size_t visible_from() const { return locks_.empty() ? 0 : locks_.back(); }

  const Binding* gamma_find(const std::string& name) const {
    for (auto it = gamma_.rbegin(); it != gamma_.rend(); ++it)
      if (it->var == name) return &*it;
    return nullptr;
  }

  // At most one available entry per name (enforced on push).
  DeltaEntry* delta_find_available(const std::string& name) {
    for (auto& e : delta_)
      if (e.name == name && !e.consumed) return &e;
    return nullptr;
  }

  bool delta_has_consumed(const std::string& name) const {
    for (const auto& e : delta_)
      if (e.name == name && e.consumed) return true;
    return false;
  }

  void ensure_pushable(const std::string& name) {
    if (name.empty()) fail(Diag::ContextInvalid, "empty binder name");
    if (gamma_find(name))
      fail(Diag::ContextInvalid, "binder '" + name + "' shadows a non-linear variable");
    for (const auto& e : delta_)
      if (e.name == name && !e.consumed)
        fail(Diag::ContextInvalid, "binder '" + name + "' shadows a live linear variable");
  }

  void push_gamma(const std::string& name, const FormulaPtr& ty) {
    ensure_pushable(name);
    gamma_.push_back({name, ty});
  }
  void pop_gamma() { gamma_.pop_back(); }

  size_t push_delta(const std::string& name, const FormulaPtr& ty) {
    ensure_pushable(name);
    if (ty->kind == Formula::Kind::RefTo) {
      for (const auto& e : delta_) {
        if (!e.consumed && e.ty->kind == Formula::Kind::RefTo && e.ty->var == ty->var)
          fail(Diag::UniquenessViolation, "individual variable '" + ty->var +
                                              "' would refer to two linear resources ('" + e.name +
                                              "' and '" + name + "')");
      }
    }
    delta_.push_back({name, ty, false});
    return delta_.size() - 1;
  }

  // Closes the scope of a pushed entry: it must have been consumed
  // (or be absorbable by a sink below it).
  void retire_delta(size_t idx, bool slack, const char* role) {
    DeltaEntry& e = delta_[idx];
    if (!e.consumed) {
      if (!slack)
        fail(Diag::LinearUnused, std::string("linear ") + role + " '" + e.name + "' is never used");
      e.consumed = true;
    }
    delta_.erase(delta_.begin() + static_cast<long>(idx));
  }

  std::vector<bool> snapshot() const {
    std::vector<bool> s;
    s.reserve(delta_.size());
    for (const auto& e : delta_) s.push_back(e.consumed);
    return s;
  }
  void restore(const std::vector<bool>& s) {
    for (size_t i = 0; i < s.size(); ++i) delta_[i].consumed = s[i];
  }

  Syn synth_var(const TermPtr& t);
  Syn synth_eps(const TermPtr& t, const FormulaPtr* expected);
  FormulaPtr consume_ref(const TermPtr& refterm, const std::string& referring);
  Syn additive_pair(const TermPtr& m, const TermPtr& n, const FormulaPtr* expected);
  Syn case_term(const TermPtr& t, const FormulaPtr* expected);
  Syn go(const TermPtr& t, const FormulaPtr* expected);
};

Syn Checker::synth_var(const TermPtr& t) {
  const std::string& name = t->var;
  if (DeltaEntry* e = delta_find_available(name)) {
    size_t idx = static_cast<size_t>(e - delta_.data());
    if (idx < visible_from())
      fail(Diag::UnboundVariable,
           "linear variable '" + name + "' is not available inside a non-linear subterm");
    bool is_ref = e->ty->kind == Formula::Kind::RefTo;
    if (t->var_kind == VarKind::Node && !is_ref)
      fail(Diag::AnnotationMismatch, "'" + name + "' is not a node variable");
    if (t->var_kind == VarKind::Linear && is_ref)
      fail(Diag::AnnotationMismatch, "'" + name + "' is a node variable, not a plain linear one");
    if (t->var_kind == VarKind::Individual || t->var_kind == VarKind::NonLinear)
      fail(Diag::AnnotationMismatch, "'" + name + "' is linear but used as a non-linear variable");
    if (is_ref) {
      // NId: the referring variable must be an individual variable in Gamma.
      const Binding* g = gamma_find(e->ty->var);
      if (!g || !alpha_eq(g->ty, e->ty->sort))
        fail(Diag::ReferenceMismatch, "node variable '" + name + "' refers to '" + e->ty->var +
                                          "' which is not an individual variable of sort " +
                                          short_formula(e->ty->sort));
    }
    e->consumed = true;
    return {e->ty, false};
  }
  if (delta_has_consumed(name))
    fail(Diag::LinearReused, "linear variable '" + name + "' used twice");
  if (const Binding* g = gamma_find(name)) {
    if (t->var_kind == VarKind::Node || t->var_kind == VarKind::Linear)
      fail(Diag::AnnotationMismatch, "'" + name + "' is non-linear but used as a linear variable");
    if (t->var_kind == VarKind::Individual && g->ty->kind != Formula::Kind::Atom)
      fail(Diag::AnnotationMismatch, "'" + name + "' is not an individual variable");
    return {g->ty, false};
  }
  fail(Diag::UnboundVariable, "unbound variable '" + name + "'");
}

// Synthesizes the reference premise of an eps term: the subterm must be a
// node variable of type  sort @ referring.
FormulaPtr Checker::consume_ref(const TermPtr& refterm, const std::string& referring) {
  Syn r = synth(refterm);
  if (r.ty->kind != Formula::Kind::RefTo)
    fail(Diag::ReferenceMismatch, "eps reference does not have a reference type (got " +
                                      short_formula(r.ty) + ")");
  if (r.ty->var != referring)
    fail(Diag::ReferenceMismatch, "eps reference refers to '" + r.ty->var + "', expected '" +
                                      referring + "'");
  return r.ty->sort;
}

Syn Checker::synth_eps(const TermPtr& t, const FormulaPtr* expected) {
  const std::string& y = t->var;
  const Binding* g = gamma_find(y);
  if (!g) fail(Diag::UnboundVariable, "referring variable '" + y + "' not in Gamma");
  if (g->ty->kind != Formula::Kind::Atom)
    fail(Diag::ReferenceMismatch, "referring variable '" + y + "' is not an individual variable");

  FormulaPtr sort = consume_ref(t->a, y);
  if (!alpha_eq(sort, g->ty))
    fail(Diag::ReferenceMismatch, "reference sort " + short_formula(sort) +
                                      " does not match the sort of '" + y + "'");

  if (expected) {
    const FormulaPtr& exp = *expected;
    if (exp->kind != Formula::Kind::DynEx)
      fail(Diag::TypeMismatch, "eps term where " + short_formula(exp) + " is expected");
    if (!alpha_eq(exp->sort, sort))
      fail(Diag::TypeMismatch, "existential sort " + short_formula(exp->sort) +
                                   " does not match reference sort " + short_formula(sort));
    // Freshness: the bound variable must capture every occurrence of the
    // instantiating name, alpha#(x,y).
    if (!freshness(exp->l, exp->var, y))
      fail(Diag::FreshnessViolation, "freshness condition fails: '" + y +
                                         "' occurs free in " + short_formula(*expected));
    FormulaPtr inst = subst_formula(exp->l, y, exp->var);
    Syn body = check_against(t->b, inst);
    return {*expected, body.slack};
  }
  Syn body = synth(t->b);
  // Principal type: bind every occurrence of the referring variable.
  return {Formula::dynex(y, sort, body.ty), body.slack};
}

Syn Checker::additive_pair(const TermPtr& t_m, const TermPtr& t_n, const FormulaPtr* expected) {
  const FormulaPtr* el = nullptr;
  const FormulaPtr* er = nullptr;
  if (expected) {
    if ((*expected)->kind != Formula::Kind::With)
      fail(Diag::TypeMismatch, "pair term where " + short_formula(*expected) + " is expected");
    el = &(*expected)->l;
    er = &(*expected)->r;
  }
  auto base = snapshot();
  Syn m = go(t_m, el);
  auto after_m = snapshot();
  restore(base);
  Syn n = go(t_n, er);
  auto after_n = snapshot();

  // Both branches must consume the same resources; a top/bot sink in one
  // branch may absorb what only the other consumed.
  for (size_t i = 0; i < base.size(); ++i) {
    bool cm = after_m[i] && !base[i];
    bool cn = after_n[i] && !base[i];
    if (cm == cn) continue;
    if (cm && !cn && n.slack) continue;
    if (cn && !cm && m.slack) continue;
    fail(Diag::TypeMismatch, "additive branches consume different resources ('" +
                                 delta_[i].name + "' in one branch only)");
  }
  for (size_t i = 0; i < base.size(); ++i) delta_[i].consumed = after_m[i] || after_n[i];
  return {Formula::with(m.ty, n.ty), m.slack && n.slack};
}

Syn Checker::case_term(const TermPtr& t, const FormulaPtr* expected) {
  Syn s = synth(t->a);
  if (s.ty->kind != Formula::Kind::Or)
    fail(Diag::TypeMismatch, "case scrutinee has type " + short_formula(s.ty) + ", not a disjunction");
  auto base = snapshot();

  size_t iu = push_delta(t->var, s.ty->l);
  Syn n1 = go(t->b, expected);
  retire_delta(iu, n1.slack, "case binder");
  auto after1 = snapshot();
  restore(base);

  size_t iv = push_delta(t->var2, s.ty->r);
  Syn n2 = go(t->c, expected);
  retire_delta(iv, n2.slack, "case binder");
  auto after2 = snapshot();

  if (!alpha_eq(n1.ty, n2.ty))
    fail(Diag::TypeMismatch, "case branches have different types: " + short_formula(n1.ty) +
                                 " vs " + short_formula(n2.ty));
  for (size_t i = 0; i < base.size(); ++i) {
    bool c1 = after1[i] && !base[i];
    bool c2 = after2[i] && !base[i];
    if (c1 == c2) continue;
    if (c1 && !c2 && n2.slack) continue;
    if (c2 && !c1 && n1.slack) continue;
    fail(Diag::TypeMismatch, "case branches consume different resources ('" + delta_[i].name +
                                 "' in one branch only)");
  }
  for (size_t i = 0; i < base.size(); ++i) delta_[i].consumed = after1[i] || after2[i];
  return {n1.ty, s.slack || (n1.slack && n2.slack)};
}

Syn Checker::go(const TermPtr& t, const FormulaPtr* expected) {
  using K = ProofTerm::Kind;
  auto finish = [&](Syn s) -> Syn {
    if (expected && !alpha_eq(s.ty, *expected))
      fail(Diag::TypeMismatch,
           "term has type " + short_formula(s.ty) + ", expected " + short_formula(*expected));
    return s;
  };
  switch (t->kind) {
    case K::Var:
      return finish(synth_var(t));
    case K::Nil:
      return finish({Formula::one(), false});
    case K::Unit:
      return finish({Formula::top(), true});
    case K::NilEq: {
      if (!expected)
        fail(Diag::NonSynthesizable, "equality witness nil_eq needs a stated type");
      if ((*expected)->kind != Formula::Kind::Eq)
        fail(Diag::TypeMismatch, "nil_eq where " + short_formula(*expected) + " is expected");
      if (!alpha_eq((*expected)->l, (*expected)->r))
        fail(Diag::TypeMismatch, "equality axiom needs syntactically equal sides, got " +
                                     short_formula(*expected));
      return {*expected, false};
    }
    case K::Tensor: {
      if (expected && (*expected)->kind == Formula::Kind::Tensor) {
        Syn m = check_against(t->a, (*expected)->l);
        Syn n = check_against(t->b, (*expected)->r);
        return {*expected, m.slack || n.slack};
      }
      Syn m = synth(t->a);
      Syn n = synth(t->b);
      return finish({Formula::tensor(m.ty, n.ty), m.slack || n.slack});
    }
    case K::Eps:
      return synth_eps(t, expected);
    case K::LamInd: {
      if (!t->ann || t->ann->kind != Formula::Kind::Atom)
        fail(Diag::AnnotationMismatch, "individual abstraction needs a node-type annotation");
      if (expected) {
        const FormulaPtr& exp = *expected;
        if (exp->kind != Formula::Kind::Forall)
          fail(Diag::TypeMismatch, "fn term where " + short_formula(exp) + " is expected");
        if (!alpha_eq(exp->sort, t->ann))
          fail(Diag::AnnotationMismatch, "abstraction over " + short_formula(t->ann) +
                                             " where " + short_formula(exp->sort) + " is expected");
        push_gamma(t->var, t->ann);
        FormulaPtr body_exp = subst_formula(exp->l, t->var, exp->var);
        Syn body = check_against(t->a, body_exp);
        pop_gamma();
        return {exp, body.slack};
      }
      push_gamma(t->var, t->ann);
      Syn body = synth(t->a);
      pop_gamma();
      return {Formula::forall(t->var, t->ann, body.ty), body.slack};
    }
    case K::LamNL: {
      if (!t->ann) fail(Diag::AnnotationMismatch, "non-linear abstraction needs an annotation");
      if (expected) {
        const FormulaPtr& exp = *expected;
        if (exp->kind != Formula::Kind::Arrow)
          fail(Diag::TypeMismatch, "nfn term where " + short_formula(exp) + " is expected");
        if (!alpha_eq(exp->l, t->ann))
          fail(Diag::AnnotationMismatch, "annotation " + short_formula(t->ann) +
                                             " differs from expected domain " + short_formula(exp->l));
        push_gamma(t->var, t->ann);
        Syn body = check_against(t->a, exp->r);
        pop_gamma();
        return {exp, body.slack};
      }
      push_gamma(t->var, t->ann);
      Syn body = synth(t->a);
      pop_gamma();
      return {Formula::arrow(t->ann, body.ty), body.slack};
    }
    case K::LamLin: {
      if (!t->ann) fail(Diag::AnnotationMismatch, "linear abstraction needs an annotation");
      if (expected) {
        const FormulaPtr& exp = *expected;
        if (exp->kind != Formula::Kind::Lolli)
          fail(Diag::TypeMismatch, "lfn term where " + short_formula(exp) + " is expected");
        if (!alpha_eq(exp->l, t->ann))
          fail(Diag::AnnotationMismatch, "annotation " + short_formula(t->ann) +
                                             " differs from expected domain " + short_formula(exp->l));
        size_t iu = push_delta(t->var, t->ann);
        Syn body = check_against(t->a, exp->r);
        retire_delta(iu, body.slack, "abstraction variable");
        return {exp, body.slack};
      }
      size_t iu = push_delta(t->var, t->ann);
      Syn body = synth(t->a);
      retire_delta(iu, body.slack, "abstraction variable");
      return {Formula::lolli(t->ann, body.ty), body.slack};
    }
    case K::AppLin: {
      Syn f = synth(t->a);
      if (f.ty->kind != Formula::Kind::Lolli)
        fail(Diag::TypeMismatch, "linear application of a term of type " + short_formula(f.ty));
      Syn arg = check_against(t->b, f.ty->l);
      return finish({f.ty->r, f.slack || arg.slack});
    }
    case K::AppNL: {
      Syn f = synth(t->a);
      if (f.ty->kind == Formula::Kind::Arrow) {
        locks_.push_back(delta_.size());
        Syn arg = check_against(t->b, f.ty->l);
        locks_.pop_back();
        (void)arg;
        return finish({f.ty->r, f.slack});
      }
      if (f.ty->kind == Formula::Kind::Forall) {
        if (t->b->kind != K::Var)
          fail(Diag::TypeMismatch, "quantifier instantiation must be an individual variable");
        locks_.push_back(delta_.size());
        Syn arg = synth(t->b);
        locks_.pop_back();
        if (!alpha_eq(arg.ty, f.ty->sort))
          fail(Diag::TypeMismatch, "instantiating '" + t->b->var + "' of sort " +
                                       short_formula(arg.ty) + " where " +
                                       short_formula(f.ty->sort) + " is required");
        return finish({subst_formula(f.ty->l, t->b->var, f.ty->var), f.slack});
      }
      fail(Diag::TypeMismatch, "application head has type " + short_formula(f.ty) +
                                   ", neither -> nor all");
    }
    case K::Error: {
      Syn m = synth(t->a);
      if (m.ty->kind != Formula::Kind::Bot)
        fail(Diag::TypeMismatch, "error premise has type " + short_formula(m.ty) + ", not bot");
      if (!t->ann) fail(Diag::AnnotationMismatch, "error term needs a type annotation");
      return finish({t->ann, true});
    }
    case K::Pair:
      return additive_pair(t->a, t->b, expected);
    case K::Fst: {
      Syn m = synth(t->a);
      if (m.ty->kind != Formula::Kind::With)
        fail(Diag::TypeMismatch, "fst of a term of type " + short_formula(m.ty));
      return finish({m.ty->l, m.slack});
    }
    case K::Snd: {
      Syn m = synth(t->a);
      if (m.ty->kind != Formula::Kind::With)
        fail(Diag::TypeMismatch, "snd of a term of type " + short_formula(m.ty));
      return finish({m.ty->r, m.slack});
    }
    case K::Case:
      return case_term(t, expected);
    case K::Inl: {
      if (!t->ann) fail(Diag::AnnotationMismatch, "inl needs the right-disjunct annotation");
      if (expected) {
        const FormulaPtr& exp = *expected;
        if (exp->kind != Formula::Kind::Or)
          fail(Diag::TypeMismatch, "inl where " + short_formula(exp) + " is expected");
        if (!alpha_eq(exp->r, t->ann))
          fail(Diag::AnnotationMismatch, "inl annotation differs from expected right disjunct");
        Syn m = check_against(t->a, exp->l);
        return {exp, m.slack};
      }
      Syn m = synth(t->a);
      return {Formula::disj(m.ty, t->ann), m.slack};
    }
    case K::Inr: {
      if (!t->ann) fail(Diag::AnnotationMismatch, "inr needs the left-disjunct annotation");
      if (expected) {
        const FormulaPtr& exp = *expected;
        if (exp->kind != Formula::Kind::Or)
          fail(Diag::TypeMismatch, "inr where " + short_formula(exp) + " is expected");
        if (!alpha_eq(exp->l, t->ann))
          fail(Diag::AnnotationMismatch, "inr annotation differs from expected left disjunct");
        Syn m = check_against(t->a, exp->r);
        return {exp, m.slack};
      }
      Syn m = synth(t->a);
      return {Formula::disj(t->ann, m.ty), m.slack};
    }
    case K::Bang: {
      locks_.push_back(delta_.size());
      Syn m = expected && (*expected)->kind == Formula::Kind::Bang
                  ? check_against(t->a, (*expected)->l)
                  : synth(t->a);
      locks_.pop_back();
      return finish({Formula::bang(m.ty), false});
    }
    case K::LetTensor: {
      Syn m = synth(t->a);
      if (m.ty->kind != Formula::Kind::Tensor)
        fail(Diag::TypeMismatch, "let-tensor scrutinee has type " + short_formula(m.ty));
      size_t iu = push_delta(t->var, m.ty->l);
      size_t iv = push_delta(t->var2, m.ty->r);
      Syn body = go(t->b, expected);
      retire_delta(iv, body.slack, "tensor binder");
      retire_delta(iu, body.slack, "tensor binder");
      return {body.ty, m.slack || body.slack};
    }
    case K::LetNil: {
      Syn m = synth(t->a);
      if (m.ty->kind != Formula::Kind::One)
        fail(Diag::TypeMismatch, "let-nil scrutinee has type " + short_formula(m.ty) + ", not 1");
      Syn body = go(t->b, expected);
      return {body.ty, m.slack || body.slack};
    }
    case K::LetBang: {
      Syn m = synth(t->a);
      if (m.ty->kind != Formula::Kind::Bang)
        fail(Diag::TypeMismatch, "let-bang scrutinee has type " + short_formula(m.ty));
      push_gamma(t->var, m.ty->l);
      Syn body = go(t->b, expected);
      pop_gamma();
      return {body.ty, m.slack || body.slack};
    }
    case K::LetEps: {
      Syn m = synth(t->a);
      if (m.ty->kind != Formula::Kind::DynEx)
        fail(Diag::TypeMismatch, "let-eps scrutinee has type " + short_formula(m.ty));
      const std::string& x = t->var2;
      // The instantiating variable and its reference must be fresh; the
      // variable must not be captured in any live linear type.
      for (const auto& e : delta_) {
        if (e.consumed) continue;
        if (e.ty->kind == Formula::Kind::RefTo && e.ty->var == x)
          fail(Diag::UniquenessViolation, "individual variable '" + x +
                                              "' already refers to the live resource '" + e.name +
                                              "'");
        if (free_vars(e.ty).count(x))
          fail(Diag::ContextInvalid, "let-eps variable '" + x +
                                         "' already occurs in the live linear context");
      }
      push_gamma(x, m.ty->sort);
      size_t in = push_delta(t->var, Formula::ref_to(m.ty->sort, x));
      size_t iv = push_delta(t->var3, subst_formula(m.ty->l, x, m.ty->var));
      Syn body = go(t->b, expected);
      retire_delta(iv, body.slack, "eps value binder");
      retire_delta(in, body.slack, "eps reference binder");
      pop_gamma();
      if (free_vars(body.ty).count(x))
        fail(Diag::FreshnessViolation,
             "existentially bound variable '" + x + "' escapes in type " + short_formula(body.ty));
      return {body.ty, m.slack || body.slack};
    }
  }
  fail(Diag::NonSynthesizable, "unrecognized term shape");
}

Syn Checker::check_against(const TermPtr& t, const FormulaPtr& expected) {
  return go(t, &expected);
}

Syn Checker::synth(const TermPtr& t) { return go(t, nullptr); }

}  // namespace

CheckResult validate_context(const Context& ctx) {
  std::set<std::string> names;
  for (const auto& b : ctx.gamma) {
    if (!names.insert(b.var).second)
      return CheckResult::fail(Diag::ContextInvalid, "duplicate variable '" + b.var + "'");
  }
  std::set<std::string> referring;
  for (const auto& b : ctx.delta) {
    if (!names.insert(b.var).second)
      return CheckResult::fail(Diag::ContextInvalid, "duplicate variable '" + b.var + "'");
    if (b.ty->kind == Formula::Kind::RefTo && !referring.insert(b.ty->var).second)
      return CheckResult::fail(Diag::UniquenessViolation,
                               "individual variable '" + b.ty->var +
                                   "' refers to more than one linear resource");
  }
  return CheckResult::pass();
}

CheckResult check(const Sequent& s) {
  if (auto v = validate_context(s.ctx); !v.ok) return v;
  if (!s.term || !s.ty)
    return CheckResult::fail(Diag::NonSynthesizable, "sequent has no term or no type");
  try {
    Checker c(s.ctx);
    Syn r = c.check_against(s.term, s.ty);
    std::string leftover;
    if (!c.all_consumed(&leftover)) {
      if (!r.slack)
        return CheckResult::fail(Diag::LinearUnused,
                                 "linear variable '" + leftover + "' is never used");
    }
    return CheckResult::pass();
  } catch (const CheckError& e) {
    return e.result;
  }
}

}  // namespace gts::qill
