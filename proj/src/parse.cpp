#include "gts/parse.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gts {

namespace {

using qill::Formula;
using qill::FormulaPtr;
using qill::ProofTerm;
using qill::TermPtr;
using qill::VarKind;

struct Token {
  enum class Kind { Ident, Number, Sym, End };
  Kind kind;
  std::string text;
  int line, col;
};

const char* kSymbols[] = {"||", "|-", "==", "=>", "-o", "->", "::", "|",  "=", ":", ";", ",",
                          ".",  "(",  ")",  "{",  "}",  "[",  "]",  "*", "&", "!", "@", "^", "?"};

bool is_reserved(const std::string& s) {
  static const std::set<std::string> kw = {
      "node", "edge", "graph", "rule",  "iface",  "body", "bind", "lhs",  "rhs",  "nu",
      "Nil",  "formula", "sequent", "Gamma", "Delta", "all",  "ex",   "top",  "bot",  "let",
      "in",   "eps",  "lfn",   "fn",    "nfn",    "pair", "fst",  "snd",  "inl",  "inr",
      "case", "of",   "unit",  "nil",   "nil_eq", "bang", "error"};
  return kw.count(s) > 0;
}

std::vector<Token> lex(const std::string& text, const std::string& file) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (text[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                                 text[j] == '_' || text[j] == '\''))
        ++j;
      out.push_back({Token::Kind::Ident, text.substr(i, j - i), line, col});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      out.push_back({Token::Kind::Number, text.substr(i, j - i), line, col});
      advance(j - i);
      continue;
    }
    bool matched = false;
    for (const char* sym : kSymbols) {
      size_t len = std::strlen(sym);
      if (text.compare(i, len, sym) == 0) {
        out.push_back({Token::Kind::Sym, sym, line, col});
        advance(len);
        matched = true;
        break;
      }
    }
    if (!matched)
      throw ParseError(file + ":" + std::to_string(line) + ":" + std::to_string(col) +
                       ": unexpected character '" + std::string(1, c) + "'");
  }
  out.push_back({Token::Kind::End, "", line, col});
  return out;
}

class Parser {
 public:
  Parser(std::string text, std::string file, const TypeGraph* tg = nullptr)
      : file_(std::move(file)), tokens_(lex(text, file_)), tg_(tg) {}

  [[noreturn]] void error(const std::string& msg) const {
    const Token& t = peek();
    throw ParseError(file_ + ":" + std::to_string(t.line) + ":" + std::to_string(t.col) + ": " +
                     msg + (t.kind == Token::Kind::End ? " (at end of input)"
                                                       : " (at '" + t.text + "')"));
  }

  const Token& peek(size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is_sym(const std::string& s, size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Sym && peek(ahead).text == s;
  }
  bool is_kw(const std::string& s, size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Ident && peek(ahead).text == s;
  }
  bool accept_sym(const std::string& s) {
    if (!is_sym(s)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(const std::string& s) {
    if (!is_kw(s)) return false;
    ++pos_;
    return true;
  }
  void expect_sym(const std::string& s) {
    if (!accept_sym(s)) error("expected '" + s + "'");
  }
  void expect_kw(const std::string& s) {
    if (!accept_kw(s)) error("expected '" + s + "'");
  }
  std::string expect_name(const char* what) {
    if (peek().kind != Token::Kind::Ident) error(std::string("expected ") + what);
    if (is_reserved(peek().text)) error("'" + peek().text + "' is a keyword");
    return tokens_[pos_++].text;
  }

  // ---- workspaces ----------------------------------------------------------

  void parse_workspace_into(Workspace& ws) {
    tg_ = &ws.tg;
    while (!at_end()) parse_statement(ws);
  }

  void parse_statement(Workspace& ws) {
    if (accept_kw("node")) {
      std::string name = expect_name("node type name");
      if (!ws.tg.node_types.insert(name).second) error("node type '" + name + "' declared twice");
      expect_sym(";");
      return;
    }
    if (accept_kw("edge")) {
      std::string name = expect_name("edge type name");
      if (ws.tg.edge_types.count(name)) error("edge type '" + name + "' declared twice");
      expect_sym("(");
      std::vector<std::string> arity;
      if (!is_sym(")")) {
        do {
          std::string t = expect_name("node type");
          if (!ws.tg.has_node_type(t)) error("unknown node type '" + t + "'");
          arity.push_back(t);
        } while (accept_sym(","));
      }
      expect_sym(")");
      expect_sym(";");
      ws.tg.edge_types[name] = std::move(arity);
      return;
    }
    if (accept_kw("graph")) {
      std::string name = expect_name("graph name");
      if (ws.graphs.count(name)) error("graph '" + name + "' defined twice");
      expect_sym("{");
      expect_kw("iface");
      NodeSet iface;
      if (!is_sym(";")) {
        do {
          NodeName n = parse_typed_node();
          if (!iface.insert(n).second) error("interface node '" + n.name + "' listed twice");
        } while (accept_sym(","));
      }
      expect_sym(";");
      expect_kw("body");
      int edge_counter = 0;
      ConstituentPtr body = parse_con_expr(iface, {}, edge_counter);
      expect_sym(";");
      expect_sym("}");
      ws.graphs.emplace(name, make_expression(ws.tg, std::move(iface), body));
      return;
    }
    if (accept_kw("rule")) {
      std::string name = expect_name("rule name");
      if (ws.rules.count(name)) error("rule '" + name + "' defined twice");
      expect_sym("{");
      expect_kw("bind");
      std::vector<NodeName> vars;
      NodeSet var_set;
      if (!is_sym(";")) {
        do {
          NodeName v = parse_typed_node();
          if (!var_set.insert(v).second) error("rule variable '" + v.name + "' listed twice");
          vars.push_back(v);
        } while (accept_sym(","));
      }
      expect_sym(";");
      expect_kw("lhs");
      int lhs_counter = 0;
      ConstituentPtr lhs = parse_con_expr(var_set, {}, lhs_counter);
      expect_sym(";");
      expect_kw("rhs");
      int rhs_counter = 0;
      ConstituentPtr rhs = parse_con_expr(var_set, {}, rhs_counter);
      expect_sym(";");
      expect_sym("}");
      ws.rules.emplace(name, dpo::make_rule(ws.tg, name, std::move(vars), lhs, rhs));
      return;
    }
    if (accept_kw("formula")) {
      std::string name = expect_name("formula name");
      if (ws.formulas.count(name)) error("formula '" + name + "' defined twice");
      expect_sym("=");
      FormulaPtr f = parse_formula();
      expect_sym(";");
      ws.formulas.emplace(name, std::move(f));
      return;
    }
    if (accept_kw("sequent")) {
      std::string name = expect_name("sequent name");
      if (ws.sequents.count(name)) error("sequent '" + name + "' defined twice");
      expect_sym("{");
      qill::Sequent s = parse_sequent();
      expect_sym("}");
      ws.sequents.emplace(name, std::move(s));
      return;
    }
    error("expected a declaration (node, edge, graph, rule, formula, sequent)");
  }

  NodeName parse_typed_node() {
    std::string name = expect_name("node name");
    expect_sym(":");
    std::string ty = expect_name("node type");
    if (tg_ && !tg_->has_node_type(ty)) error("unknown node type '" + ty + "'");
    return {name, ty};
  }

  // ---- constituents --------------------------------------------------------

  ConstituentPtr parse_con_expr(const NodeSet& iface, std::map<std::string, std::string> scope,
                                int& edge_counter) {
    ConstituentPtr c = parse_con_factor(iface, scope, edge_counter);
    while (accept_sym("||")) c = Constituent::par(c, parse_con_factor(iface, scope, edge_counter));
    return c;
  }

  ConstituentPtr parse_con_factor(const NodeSet& iface, std::map<std::string, std::string> scope,
                                  int& edge_counter) {
    if (accept_kw("Nil")) return Constituent::nil();
    if (accept_sym("(")) {
      ConstituentPtr c = parse_con_expr(iface, scope, edge_counter);
      expect_sym(")");
      return c;
    }
    if (accept_kw("nu")) {
      NodeName n = parse_typed_node();
      scope[n.name] = n.ty;
      expect_sym(".");
      return Constituent::nu(n, parse_con_factor(iface, scope, edge_counter));
    }
    std::string label = expect_name("edge label");
    const std::vector<std::string>* arity = tg_ ? tg_->arity(label) : nullptr;
    if (!arity) error("unknown edge type '" + label + "'");
    expect_sym("(");
    EdgeComp e;
    e.id = "e" + std::to_string(edge_counter++);
    e.label = label;
    if (!is_sym(")")) {
      do {
        std::string name = expect_name("node name");
        std::string ty;
        if (auto it = scope.find(name); it != scope.end()) {
          ty = it->second;
        } else {
          for (const auto& n : iface)
            if (n.name == name) ty = n.ty;
        }
        if (ty.empty()) {
          size_t pos = e.args.size();
          if (pos < arity->size()) ty = (*arity)[pos];
        }
        if (ty.empty()) error("cannot type node '" + name + "'");
        e.args.push_back({name, ty});
      } while (accept_sym(","));
    }
    expect_sym(")");
    if (e.args.size() != arity->size())
      error("edge '" + label + "' expects " + std::to_string(arity->size()) + " argument(s), got " +
            std::to_string(e.args.size()));
    return Constituent::make_edge(std::move(e));
  }

  // ---- formulas --------------------------------------------------------------

  FormulaPtr parse_formula() {
    if (is_kw("all") || is_kw("ex")) {
      bool universal = accept_kw("all");
      if (!universal) expect_kw("ex");
      std::vector<std::string> vars;
      do {
        vars.push_back(expect_name("variable"));
      } while (peek().kind == Token::Kind::Ident && !is_sym(":"));
      expect_sym(":");
      std::string sort = expect_name("node type");
      if (tg_ && !tg_->has_node_type(sort)) error("unknown node type '" + sort + "'");
      expect_sym(".");
      FormulaPtr body = parse_formula();
      for (auto it = vars.rbegin(); it != vars.rend(); ++it)
        body = universal ? Formula::forall(*it, Formula::atom(sort), body)
                         : Formula::dynex(*it, Formula::atom(sort), body);
      return body;
    }
    FormulaPtr l = parse_eqlike();
    if (accept_sym("-o")) return Formula::lolli(l, parse_formula());
    if (accept_sym("->")) return Formula::arrow(l, parse_formula());
    return l;
  }

  FormulaPtr parse_eqlike() {
    FormulaPtr l = parse_orlike();
    if (accept_sym("==")) return Formula::eq(l, parse_orlike());
    return l;
  }
  FormulaPtr parse_orlike() {
    FormulaPtr l = parse_andlike();
    while (accept_sym("|")) l = Formula::disj(l, parse_andlike());
    return l;
  }
  FormulaPtr parse_andlike() {
    FormulaPtr l = parse_tensorlike();
    while (accept_sym("&")) l = Formula::with(l, parse_tensorlike());
    return l;
  }
  FormulaPtr parse_tensorlike() {
    FormulaPtr l = parse_funary();
    while (accept_sym("*")) l = Formula::tensor(l, parse_funary());
    return l;
  }
  FormulaPtr parse_funary() {
    if (accept_sym("!")) return Formula::bang(parse_funary());
    return parse_fpostfix();
  }
  FormulaPtr parse_fpostfix() {
    FormulaPtr f = parse_fprimary();
    if (accept_sym("@")) {
      if (f->kind != Formula::Kind::Atom) error("'@' applies to a node type");
      return Formula::ref_to(f, expect_name("referring variable"));
    }
    return f;
  }
  FormulaPtr parse_fprimary() {
    if (peek().kind == Token::Kind::Number && peek().text == "1") {
      ++pos_;
      return Formula::one();
    }
    if (accept_kw("top")) return Formula::top();
    if (accept_kw("bot")) return Formula::bot();
    if (accept_sym("(")) {
      FormulaPtr f = parse_formula();
      expect_sym(")");
      return f;
    }
    if (is_kw("all") || is_kw("ex")) return parse_formula();
    std::string name = expect_name("formula");
    if (tg_ && tg_->has_node_type(name) && !is_sym("(")) return Formula::atom(name);
    if (is_sym("(")) {
      const std::vector<std::string>* arity = tg_ ? tg_->arity(name) : nullptr;
      if (tg_ && !arity) error("unknown edge type '" + name + "'");
      expect_sym("(");
      std::vector<std::string> args;
      if (!is_sym(")")) {
        do {
          args.push_back(expect_name("individual variable"));
        } while (accept_sym(","));
      }
      expect_sym(")");
      if (arity && args.size() != arity->size())
        error("edge '" + name + "' expects " + std::to_string(arity->size()) +
              " argument(s), got " + std::to_string(args.size()));
      return Formula::pred(name, std::move(args));
    }
    if (!tg_) return Formula::atom(name);
    error("unknown type '" + name + "'");
  }

  // ---- proof terms -----------------------------------------------------------

  using KindEnv = std::map<std::string, VarKind>;

  TermPtr parse_term(const KindEnv& env) {
    if (accept_kw("eps")) {
      expect_sym("(");
      TermPtr ref = parse_term(env);
      expect_sym("|");
      std::string y = expect_name("referring variable");
      expect_sym(")");
      expect_sym(".");
      return ProofTerm::eps(ref, y, parse_term(env));
    }
    if (is_kw("lfn") || is_kw("fn") || is_kw("nfn")) {
      std::string kw = tokens_[pos_++].text;
      std::string v = expect_name("variable");
      expect_sym(":");
      FormulaPtr ann = parse_formula();
      expect_sym("=>");
      KindEnv env2 = env;
      if (kw == "lfn") {
        env2[v] = ann->kind == Formula::Kind::RefTo ? VarKind::Node : VarKind::Linear;
        return ProofTerm::lam_lin(v, ann, parse_term(env2));
      }
      if (kw == "fn") {
        if (ann->kind != Formula::Kind::Atom) error("'fn' abstracts over a node type");
        env2[v] = VarKind::Individual;
        return ProofTerm::lam_ind(v, ann, parse_term(env2));
      }
      env2[v] = VarKind::NonLinear;
      return ProofTerm::lam_nl(v, ann, parse_term(env2));
    }
    if (accept_kw("let")) {
      if (accept_kw("nil")) {
        expect_sym("=");
        TermPtr m = parse_term(env);
        expect_kw("in");
        return ProofTerm::let_nil(m, parse_term(env));
      }
      if (accept_sym("!")) {
        std::string p = expect_name("variable");
        expect_sym("=");
        TermPtr m = parse_term(env);
        expect_kw("in");
        KindEnv env2 = env;
        env2[p] = VarKind::NonLinear;
        return ProofTerm::let_bang(p, m, parse_term(env2));
      }
      if (accept_kw("eps")) {
        expect_sym("(");
        std::string n = expect_name("reference variable");
        expect_sym("|");
        std::string x = expect_name("individual variable");
        expect_sym(")");
        expect_sym(".");
        std::string v = expect_name("value variable");
        expect_sym("=");
        TermPtr m = parse_term(env);
        expect_kw("in");
        KindEnv env2 = env;
        env2[n] = VarKind::Node;
        env2[x] = VarKind::Individual;
        env2[v] = VarKind::Any;
        return ProofTerm::let_eps(n, x, v, m, parse_term(env2));
      }
      std::string u = expect_name("variable");
      expect_sym("*");
      std::string v = expect_name("variable");
      expect_sym("=");
      TermPtr m = parse_term(env);
      expect_kw("in");
      KindEnv env2 = env;
      env2[u] = VarKind::Any;
      env2[v] = VarKind::Any;
      return ProofTerm::let_tensor(u, v, m, parse_term(env2));
    }
    if (accept_kw("case")) {
      TermPtr scrut = parse_term(env);
      expect_kw("of");
      expect_kw("inl");
      std::string u = expect_name("variable");
      expect_sym("=>");
      KindEnv envl = env;
      envl[u] = VarKind::Any;
      TermPtr n1 = parse_term(envl);
      expect_sym("|");
      expect_kw("inr");
      std::string v = expect_name("variable");
      expect_sym("=>");
      KindEnv envr = env;
      envr[v] = VarKind::Any;
      TermPtr n2 = parse_term(envr);
      return ProofTerm::case_of(scrut, u, n1, v, n2);
    }
    return parse_tensor_term(env);
  }

  TermPtr parse_tensor_term(const KindEnv& env) {
    TermPtr l = parse_app_term(env);
    while (accept_sym("*")) l = ProofTerm::tensor(l, parse_app_term(env));
    return l;
  }

  bool starts_prefix_term() const {
    if (peek().kind == Token::Kind::Ident)
      return !is_reserved(peek().text) || is_kw("fst") || is_kw("snd") || is_kw("bang") ||
             is_kw("inl") || is_kw("inr") || is_kw("error") || is_kw("nil") || is_kw("nil_eq") ||
             is_kw("unit") || is_kw("pair");
    return is_sym("(");
  }

  TermPtr parse_app_term(const KindEnv& env) {
    TermPtr l = parse_prefix_term(env);
    for (;;) {
      if (accept_sym("^")) {
        l = ProofTerm::app_lin(l, parse_prefix_term(env));
        continue;
      }
      if (starts_prefix_term()) {
        l = ProofTerm::app_nl(l, parse_prefix_term(env));
        continue;
      }
      return l;
    }
  }

  TermPtr parse_prefix_term(const KindEnv& env) {
    if (accept_kw("fst")) return ProofTerm::fst(parse_prefix_term(env));
    if (accept_kw("snd")) return ProofTerm::snd(parse_prefix_term(env));
    if (accept_kw("bang")) return ProofTerm::bang(parse_prefix_term(env));
    if (accept_kw("inl")) {
      expect_sym("[");
      FormulaPtr ann = parse_formula();
      expect_sym("]");
      return ProofTerm::inl(ann, parse_prefix_term(env));
    }
    if (accept_kw("inr")) {
      expect_sym("[");
      FormulaPtr ann = parse_formula();
      expect_sym("]");
      return ProofTerm::inr(ann, parse_prefix_term(env));
    }
    if (accept_kw("error")) {
      expect_sym("[");
      FormulaPtr ann = parse_formula();
      expect_sym("]");
      return ProofTerm::error(ann, parse_prefix_term(env));
    }
    return parse_term_primary(env);
  }

  TermPtr parse_term_primary(const KindEnv& env) {
    if (accept_kw("nil")) return ProofTerm::nil();
    if (accept_kw("nil_eq")) return ProofTerm::nil_eq();
    if (accept_kw("unit")) return ProofTerm::unit();
    if (accept_kw("pair")) {
      expect_sym("(");
      TermPtr m = parse_term(env);
      expect_sym(",");
      TermPtr n = parse_term(env);
      expect_sym(")");
      return ProofTerm::pair(m, n);
    }
    if (accept_sym("(")) {
      TermPtr t = parse_term(env);
      expect_sym(")");
      return t;
    }
    std::string name = expect_name("term");
    auto it = env.find(name);
    return ProofTerm::var_ref(name, it == env.end() ? VarKind::Any : it->second);
  }

  // ---- sequents ---------------------------------------------------------------

  std::vector<qill::Binding> parse_bindings(KindEnv& env, bool linear) {
    std::vector<qill::Binding> out;
    if (accept_sym(".")) return out;
    do {
      std::string name = expect_name("variable");
      expect_sym(":");
      FormulaPtr ty = parse_formula();
      if (linear)
        env[name] = ty->kind == Formula::Kind::RefTo ? VarKind::Node : VarKind::Linear;
      else
        env[name] = ty->kind == Formula::Kind::Atom ? VarKind::Individual : VarKind::NonLinear;
      out.push_back({name, ty});
    } while (accept_sym(","));
    return out;
  }

  qill::Sequent parse_sequent() {
    qill::Sequent s;
    KindEnv env;
    expect_kw("Gamma");
    expect_sym(":");
    s.ctx.gamma = parse_bindings(env, false);
    expect_sym(";");
    expect_kw("Delta");
    expect_sym(":");
    s.ctx.delta = parse_bindings(env, true);
    expect_sym("|-");
    if (accept_sym("?"))
      s.term = nullptr;  // goal-only sequent, e.g. for proof search
    else
      s.term = parse_term(env);
    expect_sym("::");
    s.ty = parse_formula();
    expect_sym(";");
    return s;
  }

  qill::FormulaPtr parse_formula_only() {
    FormulaPtr f = parse_formula();
    if (!at_end()) error("trailing input after formula");
    return f;
  }
  qill::Sequent parse_sequent_only() {
    qill::Sequent s = parse_sequent();
    if (!at_end()) error("trailing input after sequent");
    return s;
  }

 private:
  std::string file_;
  std::vector<Token> tokens_;
  size_t pos_ = 0;
  const TypeGraph* tg_;
};

}  // namespace

dpo::GTS Workspace::make_gts(const std::string& initial) const {
  auto it = graphs.find(initial);
  if (it == graphs.end()) throw Error("no graph named '" + initial + "' in the workspace");
  if (!it->second.closed()) throw Error("start graph '" + initial + "' must be closed");
  return dpo::GTS{tg, rules, it->second};
}

Workspace parse_workspace_text(const std::string& text, const std::string& filename) {
  Workspace ws;
  Parser p(text, filename);
  p.parse_workspace_into(ws);
  return ws;
}

Workspace parse_workspace_files(const std::vector<std::string>& paths) {
  Workspace ws;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    Parser p(ss.str(), path);
    p.parse_workspace_into(ws);
  }
  return ws;
}

qill::FormulaPtr parse_formula_text(const std::string& text, const TypeGraph& tg) {
  Parser p(text, "<formula>", &tg);
  return p.parse_formula_only();
}

qill::Sequent parse_sequent_text(const std::string& text, const TypeGraph& tg) {
  Parser p(text, "<sequent>", &tg);
  return p.parse_sequent_only();
}

}  // namespace gts
