#include "gts/print.hpp"

#include <sstream>

namespace gts {

namespace {

// Constituent factors: edge, Nil, nu (whose scope is one factor), parens.
std::string con_factor(const ConstituentPtr& c);

std::string con_par(const ConstituentPtr& c) {
  if (c->kind == Constituent::Kind::Par)
    return con_par(c->left) + " || " + con_factor(c->right);
  return con_factor(c);
}

std::string con_factor(const ConstituentPtr& c) {
  switch (c->kind) {
    case Constituent::Kind::Nil:
      return "Nil";
    case Constituent::Kind::Edge: {
      std::string s = c->edge.label + "(";
      for (size_t i = 0; i < c->edge.args.size(); ++i)
        s += (i ? ", " : "") + c->edge.args[i].name;
      return s + ")";
    }
    case Constituent::Kind::Nu:
      return "nu " + c->bound.name + ":" + c->bound.ty + " . " + con_factor(c->body);
    case Constituent::Kind::Par:
      return "(" + con_par(c) + ")";
  }
  return "?";
}

}  // namespace

std::string to_text(const ConstituentPtr& c) { return con_par(c); }

std::string to_text(const GraphExpression& e) {
  std::string s = "{";
  bool first = true;
  for (const auto& n : e.interface) {
    if (!first) s += ", ";
    first = false;
    s += n.name + ":" + n.ty;
  }
  return s + "} |= " + to_text(e.body);
}

std::string graph_decl_text(const std::string& name, const GraphExpression& e) {
  std::string s = "graph " + name + " { iface ";
  bool first = true;
  for (const auto& n : e.interface) {
    if (!first) s += ", ";
    first = false;
    s += n.name + ":" + n.ty;
  }
  return s + "; body " + to_text(e.body) + "; }";
}

std::string rule_decl_text(const dpo::RuleExpr& r) {
  std::string s = "rule " + r.name + " { bind ";
  for (size_t i = 0; i < r.iface_vars.size(); ++i)
    s += (i ? ", " : "") + r.iface_vars[i].name + ":" + r.iface_vars[i].ty;
  return s + "; lhs " + to_text(r.lhs) + "; rhs " + to_text(r.rhs) + "; }";
}

namespace {

using qill::Formula;
using qill::FormulaPtr;

// Precedence, loose to tight: quantifiers; -o/->; ==; |; &; *; !; @/primary.
int formula_level(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::Forall:
    case Formula::Kind::DynEx:
      return 0;
    case Formula::Kind::Lolli:
    case Formula::Kind::Arrow:
      return 1;
    case Formula::Kind::Eq:
      return 2;
    case Formula::Kind::Or:
      return 3;
    case Formula::Kind::With:
      return 4;
    case Formula::Kind::Tensor:
      return 5;
    case Formula::Kind::Bang:
      return 6;
    default:
      return 7;
  }
}

std::string formula_text(const FormulaPtr& f);

std::string at_level(const FormulaPtr& f, int min_level) {
  std::string s = formula_text(f);
  if (formula_level(f) < min_level) return "(" + s + ")";
  return s;
}

std::string formula_text(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::Atom:
      return f->name;
    case Formula::Kind::Pred: {
      std::string s = f->name + "(";
      for (size_t i = 0; i < f->args.size(); ++i) s += (i ? ", " : "") + f->args[i];
      return s + ")";
    }
    case Formula::Kind::One:
      return "1";
    case Formula::Kind::Top:
      return "top";
    case Formula::Kind::Bot:
      return "bot";
    case Formula::Kind::Tensor:
      return at_level(f->l, 5) + " * " + at_level(f->r, 6);
    case Formula::Kind::With:
      return at_level(f->l, 4) + " & " + at_level(f->r, 5);
    case Formula::Kind::Or:
      return at_level(f->l, 3) + " | " + at_level(f->r, 4);
    case Formula::Kind::Eq:
      return at_level(f->l, 3) + " == " + at_level(f->r, 3);
    case Formula::Kind::Lolli:
      return at_level(f->l, 2) + " -o " + at_level(f->r, 1);
    case Formula::Kind::Arrow:
      return at_level(f->l, 2) + " -> " + at_level(f->r, 1);
    case Formula::Kind::Bang:
      return "!" + at_level(f->l, 7);
    case Formula::Kind::Forall:
      return "all " + f->var + ":" + formula_text(f->sort) + ". " + formula_text(f->l);
    case Formula::Kind::DynEx:
      return "ex " + f->var + ":" + formula_text(f->sort) + ". " + formula_text(f->l);
    case Formula::Kind::RefTo:
      return formula_text(f->sort) + " @ " + f->var;
  }
  return "?";
}

using qill::ProofTerm;
using qill::TermPtr;

// Term precedence: binders and lets extend right (0); applications (1);
// prefixed forms (2); primaries (3).
int term_level(const TermPtr& t) {
  switch (t->kind) {
    case ProofTerm::Kind::Eps:
    case ProofTerm::Kind::LamInd:
    case ProofTerm::Kind::LamNL:
    case ProofTerm::Kind::LamLin:
    case ProofTerm::Kind::LetTensor:
    case ProofTerm::Kind::LetNil:
    case ProofTerm::Kind::LetBang:
    case ProofTerm::Kind::LetEps:
    case ProofTerm::Kind::Case:
      return 0;
    case ProofTerm::Kind::Tensor:
    case ProofTerm::Kind::AppLin:
    case ProofTerm::Kind::AppNL:
      return 1;
    case ProofTerm::Kind::Fst:
    case ProofTerm::Kind::Snd:
    case ProofTerm::Kind::Bang:
    case ProofTerm::Kind::Inl:
    case ProofTerm::Kind::Inr:
    case ProofTerm::Kind::Error:
      return 2;
    default:
      return 3;
  }
}

std::string term_text(const TermPtr& t);

std::string term_at(const TermPtr& t, int min_level) {
  std::string s = term_text(t);
  if (term_level(t) < min_level) return "(" + s + ")";
  return s;
}

std::string term_text(const TermPtr& t) {
  switch (t->kind) {
    case ProofTerm::Kind::Var:
      return t->var;
    case ProofTerm::Kind::Nil:
      return "nil";
    case ProofTerm::Kind::NilEq:
      return "nil_eq";
    case ProofTerm::Kind::Unit:
      return "unit";
    case ProofTerm::Kind::Tensor:
      return term_at(t->a, 2) + " * " + term_at(t->b, 2);
    case ProofTerm::Kind::Eps:
      return "eps(" + term_text(t->a) + "|" + t->var + "). " + term_text(t->b);
    case ProofTerm::Kind::LamInd:
      return "fn " + t->var + ":" + formula_text(t->ann) + " => " + term_text(t->a);
    case ProofTerm::Kind::LamNL:
      return "nfn " + t->var + ":" + formula_text(t->ann) + " => " + term_text(t->a);
    case ProofTerm::Kind::LamLin:
      return "lfn " + t->var + ":" + formula_text(t->ann) + " => " + term_text(t->a);
    case ProofTerm::Kind::AppLin:
      return term_at(t->a, 1) + " ^ " + term_at(t->b, 2);
    case ProofTerm::Kind::AppNL:
      return term_at(t->a, 1) + " " + term_at(t->b, 2);
    case ProofTerm::Kind::Error:
      return "error[" + formula_text(t->ann) + "] " + term_at(t->a, 2);
    case ProofTerm::Kind::Pair:
      return "pair(" + term_text(t->a) + ", " + term_text(t->b) + ")";
    case ProofTerm::Kind::Fst:
      return "fst " + term_at(t->a, 2);
    case ProofTerm::Kind::Snd:
      return "snd " + term_at(t->a, 2);
    case ProofTerm::Kind::Case:
      return "case " + term_text(t->a) + " of inl " + t->var + " => " + term_text(t->b) +
             " | inr " + t->var2 + " => " + term_text(t->c);
    case ProofTerm::Kind::Inl:
      return "inl[" + formula_text(t->ann) + "] " + term_at(t->a, 2);
    case ProofTerm::Kind::Inr:
      return "inr[" + formula_text(t->ann) + "] " + term_at(t->a, 2);
    case ProofTerm::Kind::Bang:
      return "bang " + term_at(t->a, 2);
    case ProofTerm::Kind::LetTensor:
      return "let " + t->var + " * " + t->var2 + " = " + term_at(t->a, 1) + " in " +
             term_text(t->b);
    case ProofTerm::Kind::LetNil:
      return "let nil = " + term_at(t->a, 1) + " in " + term_text(t->b);
    case ProofTerm::Kind::LetBang:
      return "let !" + t->var + " = " + term_at(t->a, 1) + " in " + term_text(t->b);
    case ProofTerm::Kind::LetEps:
      return "let eps(" + t->var + "|" + t->var2 + "). " + t->var3 + " = " + term_at(t->a, 1) +
             " in " + term_text(t->b);
  }
  return "?";
}

std::string bindings_text(const std::vector<qill::Binding>& bs) {
  if (bs.empty()) return ".";
  std::string s;
  for (size_t i = 0; i < bs.size(); ++i)
    s += (i ? ", " : "") + bs[i].var + ":" + formula_text(bs[i].ty);
  return s;
}

}  // namespace

std::string to_text(const qill::FormulaPtr& f) { return formula_text(f); }
std::string to_text(const qill::TermPtr& t) { return term_text(t); }

std::string to_text(const qill::Sequent& s) {
  std::string out = "Gamma: " + bindings_text(s.ctx.gamma) + "; Delta: " +
                    bindings_text(s.ctx.delta) + " |- ";
  out += s.term ? term_text(s.term) : "?";
  return out + " :: " + formula_text(s.ty) + ";";
}

}  // namespace gts
