#include <doctest.h>

#include "gts/qill.hpp"
#include "support.hpp"

using namespace gts::qill;
using F = Formula;
using T = ProofTerm;

namespace {

FormulaPtr A() { return F::atom("A"); }
FormulaPtr ref(const std::string& x) { return F::ref_to(A(), x); }
FormulaPtr b(const std::string& x, const std::string& y) { return F::pred("b", {x, y}); }

Sequent seq(std::vector<Binding> gamma, std::vector<Binding> delta, TermPtr t, FormulaPtr ty) {
  return Sequent{Context{std::move(gamma), std::move(delta)}, std::move(t), std::move(ty)};
}

}  // namespace

TEST_CASE("check: smallest existential introduction") {
  // Gamma = {x:A}; Delta = {n :: A@x} |- eps(n|x).nil :: ex y:A. 1
  Sequent s = seq({{"x", A()}}, {{"n", ref("x")}},
                  T::eps(T::var_ref("n", VarKind::Node), "x", T::nil()),
                  F::dynex("y", A(), F::one()));
  CheckResult r = check(s);
  CAPTURE(r.message);
  CHECK(r.ok);
}

TEST_CASE("check: the worked initial-graph sequent") {
  // Gamma = {x,y,z:A}; Delta = {n_x, n_y, n_z, c :: b(z,x)}
  //   |- eps(n_x|x).eps(n_y|y).eps(n_z|z).c :: ex x y z:A. b(z,x)
  TermPtr t = T::eps(T::var_ref("n_x"), "x",
                     T::eps(T::var_ref("n_y"), "y", T::eps(T::var_ref("n_z"), "z", T::var_ref("c"))));
  FormulaPtr ty =
      F::dynex("x", A(), F::dynex("y", A(), F::dynex("z", A(), b("z", "x"))));
  Sequent s = seq({{"x", A()}, {"y", A()}, {"z", A()}},
                  {{"n_x", ref("x")}, {"n_y", ref("y")}, {"n_z", ref("z")}, {"c", b("z", "x")}},
                  t, ty);
  CheckResult r = check(s);
  CAPTURE(r.message);
  CHECK(r.ok);
}

TEST_CASE("check: linear variable used twice") {
  Sequent s = seq({}, {{"u", b("x", "x")}}, T::tensor(T::var_ref("u"), T::var_ref("u")),
                  F::tensor(b("x", "x"), b("x", "x")));
  CheckResult r = check(s);
  CHECK_FALSE(r.ok);
  CHECK(r.diag == Diag::LinearReused);
  CHECK(r.message.find("u") != std::string::npos);
}

TEST_CASE("check: leftover linear variable") {
  Sequent s = seq({{"x", A()}}, {{"n", ref("x")}, {"c", b("x", "x")}}, T::var_ref("c"),
                  b("x", "x"));
  CheckResult r = check(s);
  CHECK_FALSE(r.ok);
  CHECK(r.diag == Diag::LinearUnused);
  CHECK(r.message.find("n") != std::string::npos);
}

TEST_CASE("check: freshness violation is reported as such") {
  // eps(n|x).c claims ex y:A. b(y,x): x stays free in the body, so the
  // introduction cannot capture every occurrence.
  Sequent s = seq({{"x", A()}}, {{"n", ref("x")}, {"c", b("x", "x")}},
                  T::eps(T::var_ref("n"), "x", T::var_ref("c")),
                  F::dynex("y", A(), b("y", "x")));
  CheckResult r = check(s);
  CHECK_FALSE(r.ok);
  CHECK(r.diag == Diag::FreshnessViolation);
}

TEST_CASE("check: reference and referring variable must line up") {
  Sequent s = seq({{"x", A()}, {"y", A()}}, {{"n", ref("y")}, {"c", b("x", "x")}},
                  T::eps(T::var_ref("n"), "x", T::var_ref("c")),
                  F::dynex("w", A(), b("w", "w")));
  CheckResult r = check(s);
  CHECK_FALSE(r.ok);
  CHECK(r.diag == Diag::ReferenceMismatch);
}

TEST_CASE("check: uniqueness constraint on contexts") {
  CheckResult v = validate_context(
      Context{{{"x", A()}}, {{"n1", ref("x")}, {"n2", ref("x")}}});
  CHECK_FALSE(v.ok);
  CHECK(v.diag == Diag::UniquenessViolation);
}

TEST_CASE("check: let-eps re-binding an already-referring variable") {
  // let eps(m|x). v = u in ... where some n :: A@x is still live.
  Sequent s = seq({}, {{"n", ref("x")}, {"u", F::dynex("x", A(), F::one())}},
                  T::let_eps("m", "x", "v", T::var_ref("u"),
                             T::tensor(T::var_ref("n"), T::tensor(T::var_ref("m"), T::var_ref("v")))),
                  F::tensor(ref("x"), F::tensor(ref("x"), F::one())));
  CheckResult r = check(s);
  CHECK_FALSE(r.ok);
  // Either the uniqueness push or the hygiene capture check may fire; the
  // uniqueness class is the expected one.
  CHECK(r.diag == Diag::UniquenessViolation);
}

TEST_CASE("check: tensor, lolli, one elimination round trip") {
  // |- lfn u:(1 * b(x,x)) => let v * w = u in let nil = v in w
  FormulaPtr dom = F::tensor(F::one(), b("x", "x"));
  TermPtr t = T::lam_lin("u", dom,
                         T::let_tensor("v", "w", T::var_ref("u"),
                                       T::let_nil(T::var_ref("v"), T::var_ref("w"))));
  Sequent s = seq({{"x", A()}}, {}, t, F::lolli(dom, b("x", "x")));
  CheckResult r = check(s);
  CAPTURE(r.message);
  CHECK(r.ok);
}

TEST_CASE("check: top consumes the ambient linear context") {
  Sequent s = seq({{"x", A()}}, {{"c", b("x", "x")}, {"n", ref("x")}}, T::unit(), F::top());
  CHECK(check(s).ok);

  // And inside a tensor, top absorbs what the sibling leaves.
  Sequent s2 = seq({{"x", A()}}, {{"c", b("x", "x")}, {"n", ref("x")}},
                   T::tensor(T::var_ref("c"), T::unit()), F::tensor(b("x", "x"), F::top()));
  CHECK(check(s2).ok);
}

TEST_CASE("check: bottom elimination absorbs a remainder") {
  Sequent s = seq({{"x", A()}}, {{"f", F::bot()}, {"c", b("x", "x")}},
                  T::error(F::one(), T::var_ref("f")), F::one());
  CHECK(check(s).ok);
}

TEST_CASE("check: additive pair shares the context, branches must agree") {
  Sequent ok = seq({{"x", A()}}, {{"c", b("x", "x")}},
                   T::pair(T::var_ref("c"), T::var_ref("c")),
                   F::with(b("x", "x"), b("x", "x")));
  CHECK(check(ok).ok);

  Sequent bad = seq({{"x", A()}}, {{"c", b("x", "x")}, {"d", b("x", "x")}},
                    T::pair(T::var_ref("c"), T::var_ref("d")),
                    F::with(b("x", "x"), b("x", "x")));
  CheckResult r = check(bad);
  CHECK_FALSE(r.ok);
  CHECK(r.diag == Diag::TypeMismatch);
}

TEST_CASE("check: disjunction introduction and case elimination") {
  FormulaPtr orf = F::disj(b("x", "x"), F::one());
  Sequent inl_s = seq({{"x", A()}}, {{"c", b("x", "x")}},
                      T::inl(F::one(), T::var_ref("c")), orf);
  CHECK(check(inl_s).ok);

  // case u of inl v => v * nil-elim ... both branches produce 1
  TermPtr body = T::case_of(T::var_ref("u"), "v",
                            T::let_nil(T::nil(), T::let_tensor("p", "q", T::tensor(T::var_ref("v"), T::nil()),
                                                               T::let_nil(T::var_ref("q"), T::app_lin(T::var_ref("k"), T::var_ref("p"))))),
                            "w", T::app_lin(T::var_ref("k"), T::var_ref("w")));
  Sequent case_s = seq({{"x", A()}}, {{"u", F::disj(b("x", "x"), b("x", "x"))}, {"k", F::lolli(b("x", "x"), F::one())}},
                       body, F::one());
  CheckResult r = check(case_s);
  CAPTURE(r.message);
  CHECK(r.ok);
}

TEST_CASE("check: bang introduction requires an empty linear context") {
  Sequent ok = seq({{"p", b("x", "x")}}, {}, T::bang(T::var_ref("p")), F::bang(b("x", "x")));
  CHECK(check(ok).ok);

  Sequent bad = seq({}, {{"u", b("x", "x")}}, T::bang(T::var_ref("u")), F::bang(b("x", "x")));
  CheckResult r = check(bad);
  CHECK_FALSE(r.ok);
  CHECK(r.diag == Diag::UnboundVariable);  // not visible inside the bang
}

TEST_CASE("check: let-bang moves the resource to the non-linear zone") {
  Sequent s = seq({}, {{"u", F::bang(F::one())}},
                  T::let_bang("p", T::var_ref("u"),
                              T::let_nil(T::var_ref("p"), T::let_nil(T::var_ref("p"), T::nil()))),
                  F::one());
  CHECK(check(s).ok);
}

TEST_CASE("check: arrow and forall eliminations keep arguments non-linear") {
  // p : all w:A. b(w,w) -o 1, applied at x then to c.
  FormulaPtr rule = F::forall("w", A(), F::lolli(b("w", "w"), F::one()));
  Sequent s = seq({{"x", A()}, {"p", rule}}, {{"c", b("x", "x")}},
                  T::app_lin(T::app_nl(T::var_ref("p"), T::var_ref("x")), T::var_ref("c")),
                  F::one());
  CheckResult r = check(s);
  CAPTURE(r.message);
  CHECK(r.ok);

  // A linear resource cannot be the forall argument.
  Sequent bad = seq({{"p", rule}}, {{"c", b("x", "x")}, {"y", A()}},
                    T::app_lin(T::app_nl(T::var_ref("p"), T::var_ref("y")), T::var_ref("c")),
                    F::one());
  CHECK_FALSE(check(bad).ok);
}

TEST_CASE("check: equality axiom") {
  Sequent s = seq({}, {}, T::nil_eq(), F::eq(F::dynex("x", A(), b("x", "x")),
                                             F::dynex("y", A(), b("y", "y"))));
  CHECK(check(s).ok);
  Sequent bad = seq({}, {}, T::nil_eq(), F::eq(b("x", "x"), b("x", "y")));
  CHECK_FALSE(check(bad).ok);
}

TEST_CASE("freshness: definition cases") {
  CHECK(freshness(F::pred("b", {"x", "z"}), "x", "y"));
  CHECK_FALSE(freshness(F::pred("b", {"x", "y"}), "x", "y"));
  CHECK(freshness(F::dynex("y", A(), b("x", "y")), "x", "y"));
}

TEST_CASE("freshness matches the free-variable reading") {
  std::vector<FormulaPtr> samples = {
      b("x", "y"),
      F::tensor(b("x", "x"), F::dynex("y", A(), b("y", "x"))),
      F::forall("z", A(), F::lolli(b("z", "y"), b("y", "z"))),
      F::dynex("x", A(), F::one()),
      ref("y"),
  };
  for (const auto& f : samples) {
    for (std::string x : {"x", "y", "z", "w"}) {
      for (std::string y : {"x", "y", "z", "w"}) {
        bool expect = (x == y) || !free_vars(f).count(y);
        CAPTURE(gts::qill::free_vars(f).size());
        CHECK(freshness(f, x, y) == expect);
      }
    }
  }
}

TEST_CASE("subst_formula: instantiation and capture avoidance") {
  FormulaPtr f = b("x1", "x2");
  CHECK(alpha_eq(subst_formula(f, "x", "x1"), b("x", "x2")));

  FormulaPtr no_x = b("y", "z");
  CHECK(alpha_eq(subst_formula(no_x, "x", "x1"), no_x));

  // ex t:A. b(x,t) with x := t renames the binder.
  FormulaPtr g = F::dynex("t", A(), b("x", "t"));
  FormulaPtr sub = subst_formula(g, "t", "x");
  CHECK(sub->kind == Formula::Kind::DynEx);
  CHECK(sub->var != "t");
  CHECK(alpha_eq(sub, F::dynex("s", A(), b("t", "s"))));
  CHECK(freshness(sub->l, sub->var, "t") == false);  // t occurs free now
}

TEST_CASE("alpha_eq: binder renaming only") {
  CHECK(alpha_eq(F::dynex("x", A(), b("x", "x")), F::dynex("y", A(), b("y", "y"))));
  CHECK(alpha_eq(F::one(), F::one()));
  // Exchange is not a syntactic identity.
  FormulaPtr xy = F::dynex("x", A(), F::dynex("y", A(), b("x", "y")));
  FormulaPtr yx = F::dynex("x", A(), F::dynex("y", A(), b("y", "x")));
  CHECK_FALSE(alpha_eq(xy, yx));
}

TEST_CASE("resource exactness: one extra atom flips acceptance") {
  // A family of valid sequents; weakening Delta must break them.
  std::vector<Sequent> valid;
  valid.push_back(seq({{"x", A()}}, {{"c", b("x", "x")}}, T::var_ref("c"), b("x", "x")));
  valid.push_back(seq({{"x", A()}}, {{"n", ref("x")}, {"c", b("x", "x")}},
                      T::tensor(T::var_ref("n"), T::var_ref("c")),
                      F::tensor(ref("x"), b("x", "x"))));
  valid.push_back(seq({{"x", A()}}, {{"n", ref("x")}},
                      T::eps(T::var_ref("n"), "x", T::nil()), F::dynex("y", A(), F::one())));
  for (auto& s : valid) {
    REQUIRE(check(s).ok);
    Sequent weakened = s;
    weakened.ctx.delta.push_back({"extra", b("x", "x")});
    CheckResult r = check(weakened);
    CHECK_FALSE(r.ok);
    CHECK(r.diag == Diag::LinearUnused);
  }
}
