#pragma once

// QILL syntax and the resource-accounting proof checker: two-zone
// sequents Gamma; Delta |- N :: alpha with linear Delta, a resource-bound
// existential quantifier and node-reference types.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace gts::qill {

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

class Formula {
 public:
  enum class Kind {
    Atom,    // node type A
    Pred,    // L(x1,...,xk)
    One,
    Top,
    Bot,
    Tensor,  // l * r
    Lolli,   // l -o r
    With,    // l & r
    Arrow,   // l -> r
    Or,      // l | r
    Bang,    // !l
    Forall,  // all v:sort. l
    DynEx,   // ex v:sort. l   (resource-bound existential)
    RefTo,   // sort @ v
    Eq,      // l == r
  };

  Kind kind;
  std::string name;               // Atom: type name; Pred: label
  std::vector<std::string> args;  // Pred arguments (individual variables)
  std::string var;                // Forall/DynEx binder, RefTo referring variable
  FormulaPtr sort;                // Forall/DynEx/RefTo: the node-type atom
  FormulaPtr l, r;                // binary connectives; unary/binder body in l

  static FormulaPtr atom(std::string ty);
  static FormulaPtr pred(std::string label, std::vector<std::string> args);
  static FormulaPtr one();
  static FormulaPtr top();
  static FormulaPtr bot();
  static FormulaPtr tensor(FormulaPtr a, FormulaPtr b);
  static FormulaPtr lolli(FormulaPtr a, FormulaPtr b);
  static FormulaPtr with(FormulaPtr a, FormulaPtr b);
  static FormulaPtr arrow(FormulaPtr a, FormulaPtr b);
  static FormulaPtr disj(FormulaPtr a, FormulaPtr b);
  static FormulaPtr bang(FormulaPtr a);
  static FormulaPtr forall(std::string v, FormulaPtr sort, FormulaPtr body);
  static FormulaPtr dynex(std::string v, FormulaPtr sort, FormulaPtr body);
  static FormulaPtr ref_to(FormulaPtr sort, std::string v);
  static FormulaPtr eq(FormulaPtr a, FormulaPtr b);
};

std::set<std::string> free_vars(const FormulaPtr& f);

/// Capture-avoiding substitution of individual variable `x` by `t`.
FormulaPtr subst_formula(const FormulaPtr& f, const std::string& t, const std::string& x);

/// Structural equality modulo renaming of Forall/DynEx-bound variables.
bool alpha_eq(const FormulaPtr& a, const FormulaPtr& b);

/// alpha#(x,y): (alpha[y/x])[x/y] = alpha. Holds iff binding x over the
/// instance captures every occurrence of y.
bool freshness(const FormulaPtr& alpha, const std::string& x, const std::string& y);

// ---- proof terms ---------------------------------------------------------

class ProofTerm;
using TermPtr = std::shared_ptr<const ProofTerm>;

enum class VarKind { Any, Individual, NonLinear, Node, Linear };

class ProofTerm {
 public:
  enum class Kind {
    Var,        // x | p | n | u (zone resolved against the context)
    Nil,        // nil :: 1
    NilEq,      // nil_eq :: a == a
    Unit,       // unit :: top
    Tensor,     // M * N
    Eps,        // eps(n|y). M
    LamInd,     // fn x:A => M        (forall-I)
    LamNL,      // nfn p:f => M       (arrow-I)
    LamLin,     // lfn u:f => M       (lolli-I)
    AppLin,     // M ^ N
    AppNL,      // M N                (arrow-E or forall-E by head type)
    Error,      // error[f] M
    Pair,       // pair(M,N)
    Fst,        // fst M
    Snd,        // snd M
    Case,       // case M of inl u => N1 | inr v => N2
    Inl,        // inl[f] M
    Inr,        // inr[f] M
    Bang,       // bang M
    LetTensor,  // let u * v = M in N
    LetNil,     // let nil = M in N
    LetBang,    // let !p = M in N
    LetEps,     // let eps(n|x). v = M in N
  };

  Kind kind;
  std::string var;       // Var name; binder of LamInd/LamNL/LamLin/LetBang; Eps referring var
  VarKind var_kind = VarKind::Any;
  std::string var2, var3;  // extra binders (LetTensor u/v, LetEps n/x/v uses var,var2,var3; Case uses var/var2)
  FormulaPtr ann;          // annotations (LamInd sort, LamNL/LamLin/Error/Inl/Inr formula)
  TermPtr a, b, c;         // subterms

  static TermPtr var_ref(std::string name, VarKind k = VarKind::Any);
  static TermPtr nil();
  static TermPtr nil_eq();
  static TermPtr unit();
  static TermPtr tensor(TermPtr m, TermPtr n);
  static TermPtr eps(TermPtr ref, std::string referring, TermPtr body);
  static TermPtr lam_ind(std::string v, FormulaPtr sort, TermPtr body);
  static TermPtr lam_nl(std::string v, FormulaPtr ann, TermPtr body);
  static TermPtr lam_lin(std::string v, FormulaPtr ann, TermPtr body);
  static TermPtr app_lin(TermPtr f, TermPtr arg);
  static TermPtr app_nl(TermPtr f, TermPtr arg);
  static TermPtr error(FormulaPtr ann, TermPtr m);
  static TermPtr pair(TermPtr m, TermPtr n);
  static TermPtr fst(TermPtr m);
  static TermPtr snd(TermPtr m);
  static TermPtr case_of(TermPtr scrut, std::string u, TermPtr n1, std::string v, TermPtr n2);
  static TermPtr inl(FormulaPtr ann, TermPtr m);
  static TermPtr inr(FormulaPtr ann, TermPtr m);
  static TermPtr bang(TermPtr m);
  static TermPtr let_tensor(std::string u, std::string v, TermPtr m, TermPtr body);
  static TermPtr let_nil(TermPtr m, TermPtr body);
  static TermPtr let_bang(std::string p, TermPtr m, TermPtr body);
  static TermPtr let_eps(std::string n, std::string x, std::string v, TermPtr m, TermPtr body);
};

// ---- contexts and sequents -----------------------------------------------

struct Binding {
  std::string var;
  FormulaPtr ty;
};

/// Two-zone context. `gamma` is non-linear (individual variables have
/// Atom types), `delta` is linear. The uniqueness constraint requires
/// each individual variable to occur as the referring variable of at
/// most one RefTo entry in delta.
struct Context {
  std::vector<Binding> gamma;
  std::vector<Binding> delta;
};

struct Sequent {
  Context ctx;
  TermPtr term;
  FormulaPtr ty;
};

// ---- checking ------------------------------------------------------------

enum class Diag {
  None,
  UnboundVariable,
  LinearUnused,
  LinearReused,
  UniquenessViolation,
  FreshnessViolation,
  AnnotationMismatch,
  TypeMismatch,
  ReferenceMismatch,
  NonSynthesizable,
  ContextInvalid,
};

struct CheckResult {
  bool ok = false;
  Diag diag = Diag::None;
  std::string message;

  static CheckResult pass() { return {true, Diag::None, ""}; }
  static CheckResult fail(Diag d, std::string msg) { return {false, d, std::move(msg)}; }
};

const char* diag_name(Diag d);

/// Checks derivability of the sequent: synthesizes a type with exact
/// resource accounting and compares it with the stated one.
CheckResult check(const Sequent& s);

/// Validates the context invariants alone (name uniqueness per zone and
/// the uniqueness constraint on referring variables).
CheckResult validate_context(const Context& ctx);

}  // namespace gts::qill
