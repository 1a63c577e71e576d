#include "gts/prover.hpp"

#include <functional>

#include "gts/graph.hpp"

namespace gts::qill {

bool in_search_fragment(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::Atom:
    case Formula::Kind::Pred:
    case Formula::Kind::One:
    case Formula::Kind::RefTo:
      return true;
    case Formula::Kind::Bang:
      return in_search_fragment(f->l);
    case Formula::Kind::Forall:
    case Formula::Kind::DynEx:
      return in_search_fragment(f->l);
    case Formula::Kind::Tensor:
    case Formula::Kind::Lolli:
      return in_search_fragment(f->l) && in_search_fragment(f->r);
    default:
      return false;
  }
}

namespace {

using Cont = std::function<bool(TermPtr)>;

struct Entry {
  std::string name;
  FormulaPtr ty;
  bool available = true;
};

bool decomposable(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::Tensor:
    case Formula::Kind::One:
    case Formula::Kind::DynEx:
    case Formula::Kind::Bang:
      return true;
    default:
      return false;
  }
}

class Prover {
 public:
  Prover(const Context& ctx) {
    for (const auto& b : ctx.gamma) {
      gamma_.push_back(b);
      taken_.insert(b.var);
    }
    for (const auto& b : ctx.delta) {
      delta_.push_back({b.var, b.ty, true});
      taken_.insert(b.var);
    }
  }

  bool prove(const FormulaPtr& goal, int depth, const Cont& k);

 private:
  std::vector<Binding> gamma_;
  std::vector<Entry> delta_;
  std::set<std::string> taken_;
  int fresh_ = 0;

  std::string fresh(const std::string& base) {
    for (;; ++fresh_) {
      std::string cand = base + std::to_string(fresh_);
      if (taken_.insert(cand).second) {
        ++fresh_;
        return cand;
      }
    }
  }

  // Eliminates (scrut :: ty) into fresh hypotheses, proves `goal` under
  // them and wraps the result in the matching let-form. The new pieces
  // are scoped to this subproof and must be consumed by it.
  bool eliminate(const TermPtr& scrut, const FormulaPtr& ty, const FormulaPtr& goal, int depth,
                 const Cont& k);

  // Applies a focused head (a rule formula or a linear implication)
  // until its type matches the goal or can be eliminated.
  bool spine(const TermPtr& head, const FormulaPtr& ty, const FormulaPtr& goal, int depth,
             const Cont& k);
};

bool Prover::eliminate(const TermPtr& scrut, const FormulaPtr& ty, const FormulaPtr& goal,
                       int depth, const Cont& k) {
  if (depth < 0) return false;
  switch (ty->kind) {
    case Formula::Kind::Tensor: {
      std::string u = fresh("u"), v = fresh("v");
      delta_.push_back({u, ty->l, true});
      delta_.push_back({v, ty->r, true});
      size_t iu = delta_.size() - 2, iv = delta_.size() - 1;
      bool r = prove(goal, depth - 1, [&](TermPtr m) {
        if (delta_[iu].available || delta_[iv].available) return false;
        return k(ProofTerm::let_tensor(u, v, scrut, m));
      });
      delta_.resize(delta_.size() - 2);
      return r;
    }
    case Formula::Kind::One:
      return prove(goal, depth - 1, [&](TermPtr m) { return k(ProofTerm::let_nil(scrut, m)); });
    case Formula::Kind::DynEx: {
      std::string x = fresh("x"), n = fresh("n"), v = fresh("v");
      gamma_.push_back({x, ty->sort});
      delta_.push_back({n, Formula::ref_to(ty->sort, x), true});
      delta_.push_back({v, subst_formula(ty->l, x, ty->var), true});
      size_t in = delta_.size() - 2, iv = delta_.size() - 1;
      bool r = prove(goal, depth - 1, [&](TermPtr m) {
        if (delta_[in].available || delta_[iv].available) return false;
        return k(ProofTerm::let_eps(n, x, v, scrut, m));
      });
      delta_.resize(delta_.size() - 2);
      gamma_.pop_back();
      return r;
    }
    case Formula::Kind::Bang: {
      std::string p = fresh("p");
      gamma_.push_back({p, ty->l});
      bool r = prove(goal, depth - 1,
                     [&](TermPtr m) { return k(ProofTerm::let_bang(p, scrut, m)); });
      gamma_.pop_back();
      return r;
    }
    default: {
      // Bind an atomic or implication-shaped piece through a beta redex.
      std::string u = fresh("u");
      delta_.push_back({u, ty, true});
      size_t iu = delta_.size() - 1;
      bool r = prove(goal, depth - 1, [&](TermPtr m) {
        if (delta_[iu].available) return false;
        return k(ProofTerm::app_lin(ProofTerm::lam_lin(u, ty, m), scrut));
      });
      delta_.pop_back();
      return r;
    }
  }
}

bool Prover::spine(const TermPtr& head, const FormulaPtr& ty, const FormulaPtr& goal, int depth,
                   const Cont& k) {
  if (depth < 0) return false;
  if (alpha_eq(ty, goal) && k(head)) return true;
  switch (ty->kind) {
    case Formula::Kind::Forall: {
      for (const auto& b : gamma_) {
        if (!alpha_eq(b.ty, ty->sort)) continue;
        if (spine(ProofTerm::app_nl(head, ProofTerm::var_ref(b.var, VarKind::Individual)),
                  subst_formula(ty->l, b.var, ty->var), goal, depth - 1, k))
          return true;
      }
      return false;
    }
    case Formula::Kind::Lolli: {
      return prove(ty->l, depth - 1, [&](TermPtr arg) {
        return spine(ProofTerm::app_lin(head, arg), ty->r, goal, depth - 1, k);
      });
    }
    case Formula::Kind::Tensor:
    case Formula::Kind::One:
    case Formula::Kind::DynEx:
    case Formula::Kind::Bang:
      if (!alpha_eq(ty, goal)) return eliminate(head, ty, goal, depth, k);
      return false;
    default:
      return false;
  }
}

bool Prover::prove(const FormulaPtr& goal, int depth, const Cont& k) {
  if (depth < 0) return false;

  // Invertible right rules.
  if (goal->kind == Formula::Kind::Lolli) {
    std::string u = fresh("u");
    delta_.push_back({u, goal->l, true});
    size_t iu = delta_.size() - 1;
    bool r = prove(goal->r, depth - 1, [&](TermPtr m) {
      if (delta_[iu].available) return false;
      return k(ProofTerm::lam_lin(u, goal->l, m));
    });
    delta_.pop_back();
    return r;
  }
  if (goal->kind == Formula::Kind::Forall) {
    std::string x = fresh("x");
    gamma_.push_back({x, goal->sort});
    FormulaPtr body = subst_formula(goal->l, x, goal->var);
    bool r = prove(body, depth - 1,
                   [&](TermPtr m) { return k(ProofTerm::lam_ind(x, goal->sort, m)); });
    gamma_.pop_back();
    return r;
  }

  // Immediate axioms, tried before any decomposition so that identity
  // proofs stay short.
  for (auto& e : delta_) {
    if (!e.available || !alpha_eq(e.ty, goal)) continue;
    e.available = false;
    if (k(ProofTerm::var_ref(e.name))) return true;
    e.available = true;
  }
  for (const auto& b : gamma_) {
    if (!alpha_eq(b.ty, goal)) continue;
    if (k(ProofTerm::var_ref(b.var))) return true;
  }
  if (goal->kind == Formula::Kind::One && k(ProofTerm::nil())) return true;

  // Invertible left decomposition of the first composite hypothesis.
  for (size_t i = 0; i < delta_.size(); ++i) {
    if (!delta_[i].available || !decomposable(delta_[i].ty)) continue;
    delta_[i].available = false;
    TermPtr scrut = ProofTerm::var_ref(delta_[i].name);
    FormulaPtr ty = delta_[i].ty;
    bool r = eliminate(scrut, ty, goal, depth, k);
    if (!r) delta_[i].available = true;
    return r;
  }

  // Goal-directed choices.
  switch (goal->kind) {
    case Formula::Kind::Tensor: {
      if (prove(goal->l, depth - 1, [&](TermPtr m) {
            return prove(goal->r, depth - 1,
                         [&](TermPtr n) { return k(ProofTerm::tensor(m, n)); });
          }))
        return true;
      break;
    }
    case Formula::Kind::DynEx: {
      for (size_t i = 0; i < delta_.size(); ++i) {
        if (!delta_[i].available || delta_[i].ty->kind != Formula::Kind::RefTo) continue;
        if (!alpha_eq(delta_[i].ty->sort, goal->sort)) continue;
        const std::string y = delta_[i].ty->var;
        bool y_ok = false;
        for (const auto& b : gamma_)
          if (b.var == y && alpha_eq(b.ty, goal->sort)) y_ok = true;
        if (!y_ok) continue;
        if (!freshness(goal->l, goal->var, y)) continue;
        delta_[i].available = false;
        std::string nvar = delta_[i].name;
        FormulaPtr inst = subst_formula(goal->l, y, goal->var);
        if (prove(inst, depth - 1, [&](TermPtr m) {
              return k(ProofTerm::eps(ProofTerm::var_ref(nvar, VarKind::Node), y, m));
            }))
          return true;
        delta_[i].available = true;
      }
      break;
    }
    case Formula::Kind::Bang: {
      std::vector<bool> snap;
      for (const auto& e : delta_) snap.push_back(e.available);
      if (prove(goal->l, depth - 1, [&](TermPtr m) {
            for (size_t i = 0; i < snap.size(); ++i)
              if (delta_[i].available != snap[i]) return false;
            return k(ProofTerm::bang(m));
          }))
        return true;
      break;
    }
    default:
      break;
  }

  // Focused elimination of implication- or quantifier-shaped hypotheses.
  for (size_t i = 0; i < delta_.size(); ++i) {
    if (!delta_[i].available) continue;
    auto kind = delta_[i].ty->kind;
    if (kind != Formula::Kind::Lolli && kind != Formula::Kind::Forall) continue;
    delta_[i].available = false;
    if (spine(ProofTerm::var_ref(delta_[i].name), delta_[i].ty, goal, depth - 1, k)) return true;
    delta_[i].available = true;
  }
  for (const auto& b : gamma_) {
    auto kind = b.ty->kind;
    if (kind != Formula::Kind::Lolli && kind != Formula::Kind::Forall) continue;
    if (spine(ProofTerm::var_ref(b.var), b.ty, goal, depth - 1, k)) return true;
  }
  return false;
}

}  // namespace

std::optional<TermPtr> bounded_search(const Context& ctx, const FormulaPtr& goal, int depth) {
  if (!in_search_fragment(goal)) throw Error("goal outside the search fragment");
  for (const auto& b : ctx.gamma)
    if (!in_search_fragment(b.ty)) throw Error("context formula outside the search fragment");
  for (const auto& b : ctx.delta)
    if (!in_search_fragment(b.ty)) throw Error("context formula outside the search fragment");

  Prover prover(ctx);
  std::optional<TermPtr> found;
  prover.prove(goal, depth, [&](TermPtr m) {
    Sequent s{ctx, m, goal};
    if (!check(s).ok) return false;  // soundness gate; keep searching
    found = m;
    return true;
  });
  return found;
}

}  // namespace gts::qill
