#include "gts/cli.hpp"

#include <CLI11.hpp>
#include <fstream>

#include "gts/encode.hpp"
#include "gts/json_io.hpp"
#include "gts/parse.hpp"
#include "gts/print.hpp"
#include "gts/prover.hpp"

namespace gts::cli {

namespace {

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kInputError = 2;
constexpr int kExhausted = 3;

std::map<std::string, int> parse_multiset(const std::string& csv) {
  std::map<std::string, int> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out[cur] += 1;
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out[cur] += 1;
  return out;
}

struct Session {
  std::vector<std::string> files;
  bool json = false;
  std::ostream& out;
  std::ostream& err;
  std::optional<Workspace> ws;
  int result = kOk;

  Session(std::ostream& o, std::ostream& e) : out(o), err(e) {}

  Workspace& workspace() {
    if (!ws) {
      if (files.empty()) throw Error("no workspace given; pass -w FILE (repeatable)");
      ws = parse_workspace_files(files);
    }
    return *ws;
  }
  const GraphExpression& graph(const std::string& name) {
    auto& g = workspace().graphs;
    auto it = g.find(name);
    if (it == g.end()) throw Error("no graph named '" + name + "'");
    return it->second;
  }
  const dpo::RuleExpr& rule(const std::string& name) {
    auto& r = workspace().rules;
    auto it = r.find(name);
    if (it == r.end()) throw Error("no rule named '" + name + "'");
    return it->second;
  }
  const qill::FormulaPtr& formula(const std::string& name) {
    auto& f = workspace().formulas;
    auto it = f.find(name);
    if (it == f.end()) throw Error("no formula named '" + name + "'");
    return it->second;
  }
  const qill::Sequent& sequent(const std::string& name) {
    auto& s = workspace().sequents;
    auto it = s.find(name);
    if (it == s.end()) throw Error("no sequent named '" + name + "'");
    return it->second;
  }

  void emit(const nlohmann::json& payload, const std::string& text,
            const std::string& out_file = "") {
    if (json)
      out << payload.dump(2) << "\n";
    else
      out << text << "\n";
    if (!out_file.empty()) {
      std::ofstream f(out_file);
      if (!f) throw Error("cannot write '" + out_file + "'");
      f << payload.dump(2) << "\n";
    }
  }
};

// Carries a non-input-error exit code out of a nested search step.
struct ReachAbort {
  int code;
  std::string message;
};

std::string sigma_text(const CongruenceWitness& w) {
  std::string s = "sigma = {";
  bool first = true;
  for (const auto& [from, to] : w.node_map) {
    if (!first) s += ", ";
    first = false;
    s += from.name + " -> " + to.name;
  }
  return s + "}";
}

dpo::DerivationSeq obtain_trace(Session& s, const std::string& trace_file,
                                const std::string& target, const std::string& initial,
                                int max_steps, const dpo::ReachMode& mode, size_t max_states,
                                int& rc) {
  dpo::GTS gts = s.workspace().make_gts(initial);
  if (!trace_file.empty()) {
    std::ifstream in(trace_file);
    if (!in) throw Error("cannot open '" + trace_file + "'");
    nlohmann::json j;
    in >> j;
    rc = kOk;
    return trace_from_json(gts, j);
  }
  if (target.empty()) throw Error("pass a target graph or --trace FILE");
  dpo::ReachResult r = dpo::reachable(gts, s.graph(target), max_steps, mode, max_states);
  if (r.status == dpo::ReachStatus::Found) {
    rc = kOk;
    return *r.trace;
  }
  rc = r.status == dpo::ReachStatus::NotReachable ? kNegative : kExhausted;
  throw ReachAbort{rc, rc == kNegative
                           ? "target not reachable within " + std::to_string(max_steps) +
                                 " step(s)"
                           : "state cap exhausted before reaching the target"};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Session s(out, err);
  CLI::App app{"DPO hypergraph rewriting with linear-logic proof certificates"};
  app.require_subcommand(1);
  app.add_option("-w,--workspace", s.files, "workspace file (repeatable)");
  app.add_flag("--json", s.json, "machine-readable output");

  // --- normalize -----------------------------------------------------------
  {
    auto* c = app.add_subcommand("normalize", "print the canonical normal form of a graph");
    auto g = std::make_shared<std::string>();
    c->add_option("graph", *g, "graph name")->required();
    c->callback([&s, g] {
      NormalGraph n = normalize(s.graph(*g));
      auto payload = normal_to_json(n);
      payload["key"] = canonical_key(s.graph(*g));
      s.emit(payload, to_text(n.as_expression()));
    });
  }
  // --- congr ----------------------------------------------------------------
  {
    auto* c = app.add_subcommand("congr", "decide structural congruence of two graphs");
    auto g1 = std::make_shared<std::string>(), g2 = std::make_shared<std::string>();
    c->add_option("g1", *g1)->required();
    c->add_option("g2", *g2)->required();
    c->callback([&s, g1, g2] {
      auto w = congruent(s.graph(*g1), s.graph(*g2));
      if (w) {
        nlohmann::json ren = nlohmann::json::object();
        for (const auto& [from, to] : w->node_map) ren[from.name] = to.name;
        s.emit({{"congruent", true}, {"renaming", ren}}, "congruent; " + sigma_text(*w));
      } else {
        s.emit({{"congruent", false}}, "not congruent");
        s.result = kNegative;
      }
    });
  }
  // --- heat -----------------------------------------------------------------
  {
    auto* c = app.add_subcommand("heat", "check whether g1 is a heating of g2");
    auto g1 = std::make_shared<std::string>(), g2 = std::make_shared<std::string>();
    c->add_option("g1", *g1)->required();
    c->add_option("g2", *g2)->required();
    c->callback([&s, g1, g2] {
      auto h = heating(s.graph(*g1), s.graph(*g2));
      if (h) {
        s.emit({{"heating", true}, {"restricted", node_list_to_string(*h)}},
               "heating; restricted = {" + node_list_to_string(*h) + "}");
      } else {
        s.emit({{"heating", false}}, "not a heating");
        s.result = kNegative;
      }
    });
  }
  // --- match ------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("match", "enumerate matches of a rule in a graph");
    auto r = std::make_shared<std::string>(), g = std::make_shared<std::string>();
    c->add_option("rule", *r)->required();
    c->add_option("graph", *g)->required();
    c->callback([&s, r, g] {
      auto ms = dpo::find_matches(s.graph(*g), s.rule(*r));
      nlohmann::json arr = nlohmann::json::array();
      std::string text;
      for (size_t i = 0; i < ms.size(); ++i) {
        auto j = match_to_json(ms[i]);
        j["index"] = i;
        arr.push_back(j);
        text += "#" + std::to_string(i) + " " + j.dump() + "\n";
      }
      if (ms.empty()) {
        s.emit({{"matches", arr}}, "no matches");
        s.result = kNegative;
      } else {
        s.emit({{"matches", arr}}, text + std::to_string(ms.size()) + " match(es)");
      }
    });
  }
  // --- apply ------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("apply", "apply a rule at a chosen match");
    auto r = std::make_shared<std::string>(), g = std::make_shared<std::string>();
    auto k = std::make_shared<int>(0);
    c->add_option("rule", *r)->required();
    c->add_option("graph", *g)->required();
    c->add_option("--match", *k, "match index (default 0)");
    c->callback([&s, r, g, k] {
      auto ms = dpo::find_matches(s.graph(*g), s.rule(*r));
      if (*k < 0 || static_cast<size_t>(*k) >= ms.size())
        throw Error("match index " + std::to_string(*k) + " out of range (found " +
                    std::to_string(ms.size()) + ")");
      GraphExpression h = dpo::apply(s.graph(*g), s.rule(*r), ms[static_cast<size_t>(*k)]);
      s.emit(graph_to_json(h), to_text(h));
    });
  }
  // --- reach ------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("reach", "breadth-first search for a rewrite trace");
    auto target = std::make_shared<std::string>();
    auto initial = std::make_shared<std::string>("G0");
    auto steps = std::make_shared<int>(0);
    auto exact = std::make_shared<std::string>(), atleast = std::make_shared<std::string>();
    auto max_states = std::make_shared<size_t>(100000);
    auto out_file = std::make_shared<std::string>();
    c->add_option("target", *target)->required();
    c->add_option("--max-steps", *steps)->required();
    c->add_option("--initial", *initial, "start graph name (default G0)");
    c->add_option("--exact", *exact, "exact rule multiset, e.g. p,p,q");
    c->add_option("--at-least", *atleast, "required rule multiset");
    c->add_option("--max-states", *max_states, "frontier cap (default 100000)");
    c->add_option("--out", *out_file, "write the trace JSON to a file");
    c->callback([&s, target, initial, steps, exact, atleast, max_states, out_file] {
      if (!exact->empty() && !atleast->empty())
        throw Error("--exact and --at-least are mutually exclusive");
      dpo::ReachMode mode = dpo::Unlimited{};
      if (!exact->empty()) mode = dpo::ExactMultiset{parse_multiset(*exact)};
      if (!atleast->empty()) mode = dpo::AtLeast{parse_multiset(*atleast)};
      dpo::GTS gts = s.workspace().make_gts(*initial);
      dpo::ReachResult r = dpo::reachable(gts, s.graph(*target), *steps, mode, *max_states);
      if (r.status == dpo::ReachStatus::Found) {
        auto payload = trace_to_json(*r.trace);
        s.emit(payload,
               "reachable in " + std::to_string(r.trace->steps.size()) + " step(s)\n" +
                   payload.dump(2),
               *out_file);
      } else if (r.status == dpo::ReachStatus::NotReachable) {
        s.emit(nlohmann::json{{"reachable", false}},
               "not reachable within " + std::to_string(*steps) + " step(s)");
        s.result = kNegative;
      } else {
        s.emit(nlohmann::json{{"reachable", false}, {"exhausted", true}},
               "state cap exhausted before reaching the target");
        s.result = kExhausted;
      }
    });
  }
  // --- encode -------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("encode", "translate a graph to its typing derivation");
    auto g = std::make_shared<std::string>();
    c->add_option("graph", *g)->required();
    c->callback([&s, g] {
      enc::GraphDerivation d = enc::encode_expr(s.graph(*g));
      enc::Certificate cert{d.conclusion, std::nullopt};
      s.emit(certificate_to_json(cert), to_text(d.conclusion));
    });
  }
  // --- encode-rule -----------------------------------------------------------------
  {
    auto* c = app.add_subcommand("encode-rule", "translate a rule to its QILL formula");
    auto r = std::make_shared<std::string>();
    c->add_option("rule", *r)->required();
    c->callback([&s, r] {
      auto f = enc::encode_rule(s.rule(*r));
      s.emit({{"formula", to_text(f)}}, to_text(f));
    });
  }
  // --- check ------------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("check", "kernel-check a sequent or certificate");
    auto name = std::make_shared<std::string>();
    auto cert_file = std::make_shared<std::string>(), seq_file = std::make_shared<std::string>();
    c->add_option("sequent", *name, "named sequent from the workspace");
    c->add_option("--cert", *cert_file, "certificate JSON file");
    c->add_option("--sequent-file", *seq_file, "bare sequent file");
    c->callback([&s, name, cert_file, seq_file] {
      qill::Sequent seq;
      if (!cert_file->empty()) {
        std::ifstream in(*cert_file);
        if (!in) throw Error("cannot open '" + *cert_file + "'");
        nlohmann::json j;
        in >> j;
        seq = sequent_from_certificate_json(s.workspace().tg, j);
      } else if (!seq_file->empty()) {
        std::ifstream in(*seq_file);
        if (!in) throw Error("cannot open '" + *seq_file + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        seq = parse_sequent_text(ss.str(), s.workspace().tg);
      } else if (!name->empty()) {
        seq = s.sequent(*name);
      } else {
        throw Error("pass a sequent name, --cert FILE or --sequent-file FILE");
      }
      if (!seq.term) throw Error("sequent has no proof term to check");
      qill::CheckResult r = qill::check(seq);
      if (r.ok) {
        s.emit({{"ok", true}}, "ok");
      } else {
        s.emit({{"ok", false}, {"diagnostic", qill::diag_name(r.diag)}, {"message", r.message}},
               std::string("invalid: ") + qill::diag_name(r.diag) + ": " + r.message);
        s.result = kNegative;
      }
    });
  }
  // --- equiv -------------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("equiv", "decide linear equivalence of two graph formulas");
    auto f1 = std::make_shared<std::string>(), f2 = std::make_shared<std::string>();
    c->add_option("f1", *f1)->required();
    c->add_option("f2", *f2)->required();
    c->callback([&s, f1, f2] {
      bool eq = enc::formula_equiv(s.workspace().tg, s.formula(*f1), s.formula(*f2));
      s.emit({{"equivalent", eq}}, eq ? "equivalent" : "not equivalent");
      if (!eq) s.result = kNegative;
    });
  }
  // --- search ------------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("search", "bounded proof search for a sequent's goal");
    auto name = std::make_shared<std::string>();
    auto depth = std::make_shared<int>(12);
    c->add_option("sequent", *name)->required();
    c->add_option("--depth", *depth, "rule applications per branch (default 12)");
    c->callback([&s, name, depth] {
      const qill::Sequent& seq = s.sequent(*name);
      auto found = qill::bounded_search(seq.ctx, seq.ty, *depth);
      if (found) {
        s.emit({{"found", true}, {"term", to_text(*found)}, {"depth", *depth}}, to_text(*found));
      } else {
        s.emit({{"found", false}, {"depth", *depth}},
               "no proof within depth " + std::to_string(*depth));
        s.result = kNegative;
      }
    });
  }
  // --- certify-step --------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("certify-step", "emit a certificate for one rewrite step");
    auto r = std::make_shared<std::string>(), g = std::make_shared<std::string>();
    auto k = std::make_shared<int>(0);
    auto composed = std::make_shared<bool>(false);
    auto out_file = std::make_shared<std::string>();
    c->add_option("rule", *r)->required();
    c->add_option("graph", *g)->required();
    c->add_option("--match", *k, "match index (default 0)");
    c->add_flag("--composed", *composed, "premise the source graph instead of abstracting it");
    c->add_option("--out", *out_file, "write the certificate JSON to a file");
    c->callback([&s, r, g, k, composed, out_file] {
      auto ms = dpo::find_matches(s.graph(*g), s.rule(*r));
      if (*k < 0 || static_cast<size_t>(*k) >= ms.size())
        throw Error("match index " + std::to_string(*k) + " out of range (found " +
                    std::to_string(ms.size()) + ")");
      enc::Certificate cert =
          *composed ? enc::certify_step_composed(s.graph(*g), s.rule(*r), ms[static_cast<size_t>(*k)])
                    : enc::certify_step(s.graph(*g), s.rule(*r), ms[static_cast<size_t>(*k)]);
      s.emit(certificate_to_json(cert), to_text(cert.sequent), *out_file);
    });
  }
  // --- certify-trace ----------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("certify-trace", "certify a whole rewrite trace");
    auto target = std::make_shared<std::string>();
    auto initial = std::make_shared<std::string>("G0");
    auto steps = std::make_shared<int>(0);
    auto style = std::make_shared<std::string>("nonlinear");
    auto instances = std::make_shared<std::string>();
    auto trace_file = std::make_shared<std::string>();
    auto out_file = std::make_shared<std::string>();
    c->add_option("target", *target, "target graph name (searched via reach)");
    c->add_option("--initial", *initial, "start graph name (default G0)");
    c->add_option("--max-steps", *steps, "search bound when a target is given");
    c->add_option("--style", *style, "nonlinear | linear");
    c->add_option("--instances", *instances, "rule instance multiset for linear style");
    c->add_option("--trace", *trace_file, "replay a trace JSON file instead of searching");
    c->add_option("--out", *out_file, "write the certificate JSON to a file");
    c->callback([&s, target, initial, steps, style, instances, trace_file, out_file] {
      enc::TraceStyle st;
      if (*style == "nonlinear")
        st = enc::TraceStyle::NonlinearRules;
      else if (*style == "linear")
        st = enc::TraceStyle::LinearInstances;
      else
        throw Error("unknown style '" + *style + "' (use nonlinear or linear)");
      int rc = kOk;
      dpo::DerivationSeq trace = obtain_trace(s, *trace_file, *target, *initial, *steps,
                                              dpo::Unlimited{}, 100000, rc);
      std::optional<std::map<std::string, int>> provided;
      if (!instances->empty()) provided = parse_multiset(*instances);
      dpo::GTS gts = s.workspace().make_gts(*initial);
      enc::Certificate cert = enc::certify_trace(gts, trace, st, provided);
      s.emit(certificate_to_json(cert), to_text(cert.sequent), *out_file);
    });
  }
  // --- constraint ---------------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("constraint", "derive a contradiction from a negative constraint");
    auto fname = std::make_shared<std::string>();
    auto target = std::make_shared<std::string>();
    auto initial = std::make_shared<std::string>("G0");
    auto steps = std::make_shared<int>(0);
    auto trace_file = std::make_shared<std::string>();
    auto out_file = std::make_shared<std::string>();
    c->add_option("formula", *fname, "constraint formula name")->required();
    c->add_option("--target", *target, "final graph to reach first");
    c->add_option("--initial", *initial, "start graph name (default G0)");
    c->add_option("--max-steps", *steps, "search bound when a target is given");
    c->add_option("--trace", *trace_file, "replay a trace JSON file instead of searching");
    c->add_option("--out", *out_file, "write the certificate JSON to a file");
    c->callback([&s, fname, target, initial, steps, trace_file, out_file] {
      int rc = kOk;
      dpo::DerivationSeq trace = obtain_trace(s, *trace_file, *target, *initial, *steps,
                                              dpo::Unlimited{}, 100000, rc);
      dpo::GTS gts = s.workspace().make_gts(*initial);
      auto cert = enc::constraint_violation(gts, trace, s.formula(*fname));
      if (cert) {
        s.emit(certificate_to_json(*cert), to_text(cert->sequent), *out_file);
      } else {
        s.emit({{"violated", false}}, "constraint not derivable from the final graph");
        s.result = kNegative;
      }
    });
  }

  try {
    std::vector<std::string> argv = args;
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
    return s.result;
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const enc::CertifyRefused& e) {
    err << "refused: " << e.what() << "\n";
    return kNegative;
  } catch (const ReachAbort& e) {
    err << e.message << "\n";
    return e.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace gts::cli
