#include "gts/json_io.hpp"

#include <algorithm>

#include "gts/print.hpp"

namespace gts {

using nlohmann::json;

json match_to_json(const dpo::Match& m) {
  json d = json::object();
  for (const auto& [v, host] : m.interface_map) d[v.name] = host.name;
  json mv = json::object();
  for (const auto& [b, host] : m.bound_map) mv[b.name] = host.name;
  json me = json::object();
  for (const auto& [l, g] : m.edge_map) me[l] = g;
  return json{{"rule", m.rule}, {"d", d}, {"bound_map", mv}, {"edge_map", me}};
}

json trace_to_json(const dpo::DerivationSeq& t) {
  json out = json::array();
  for (size_t i = 0; i < t.steps.size(); ++i) {
    const auto& [rule, m] = t.steps[i];
    json d = json::object();
    for (const auto& [v, host] : m.interface_map) d[v.name] = host.name;
    std::vector<std::string> consumed;
    for (const auto& [l, g] : m.edge_map) consumed.push_back(g);
    std::sort(consumed.begin(), consumed.end());
    out.push_back(json{{"rule", rule},
                       {"d", d},
                       {"consumed_edges", consumed},
                       {"state_key", canonical_key(t.states[i + 1])}});
  }
  return out;
}

json graph_to_json(const GraphExpression& e) {
  json iface = json::array();
  for (const auto& n : e.interface) iface.push_back(json{{"name", n.name}, {"type", n.ty}});
  return json{{"iface", iface}, {"body", to_text(e.body)}};
}

json normal_to_json(const NormalGraph& g) {
  json iface = json::array();
  for (const auto& n : g.interface) iface.push_back(json{{"name", n.name}, {"type", n.ty}});
  json prefix = json::array();
  for (const auto& n : g.prefix) prefix.push_back(json{{"name", n.name}, {"type", n.ty}});
  json comps = json::array();
  for (const auto& c : g.components) {
    json args = json::array();
    for (const auto& a : c.args) args.push_back(a.name);
    comps.push_back(json{{"id", c.id}, {"label", c.label}, {"args", args}});
  }
  return json{{"iface", iface}, {"prefix", prefix}, {"components", comps}};
}

json certificate_to_json(const enc::Certificate& c) {
  json gamma = json::array();
  for (const auto& b : c.sequent.ctx.gamma)
    gamma.push_back(json{{"var", b.var}, {"type", to_text(b.ty)}});
  json delta = json::array();
  for (const auto& b : c.sequent.ctx.delta)
    delta.push_back(json{{"var", b.var}, {"type", to_text(b.ty)}});
  json out{{"gamma", gamma},
           {"delta", delta},
           {"term", to_text(c.sequent.term)},
           {"type", to_text(c.sequent.ty)}};
  if (c.trace) out["trace"] = trace_to_json(*c.trace);
  return out;
}

dpo::DerivationSeq trace_from_json(const dpo::GTS& gts, const json& j) {
  if (!j.is_array()) throw Error("trace JSON must be an array of steps");
  dpo::DerivationSeq seq;
  seq.states.push_back(gts.initial);
  for (const auto& step : j) {
    std::string rule = step.at("rule").get<std::string>();
    auto rit = gts.rules.find(rule);
    if (rit == gts.rules.end()) throw Error("trace step uses unknown rule '" + rule + "'");
    std::map<std::string, std::string> d;
    for (auto it = step.at("d").begin(); it != step.at("d").end(); ++it)
      d[it.key()] = it.value().get<std::string>();
    std::set<std::string> consumed;
    for (const auto& e : step.at("consumed_edges")) consumed.insert(e.get<std::string>());

    const GraphExpression& cur = seq.states.back();
    std::vector<dpo::Match> matches = dpo::find_matches(cur, rit->second);
    const dpo::Match* chosen = nullptr;
    for (const auto& m : matches) {
      std::map<std::string, std::string> md;
      for (const auto& [v, host] : m.interface_map) md[v.name] = host.name;
      std::set<std::string> mc;
      for (const auto& [l, g] : m.edge_map) mc.insert(g);
      if (md == d && mc == consumed) {
        chosen = &m;
        break;
      }
    }
    if (!chosen) throw Error("trace step for rule '" + rule + "' does not match any match");
    GraphExpression next = dpo::apply(cur, rit->second, *chosen);
    if (step.contains("state_key") &&
        step.at("state_key").get<std::string>() != canonical_key(next))
      throw Error("trace step state key does not match the replayed state");
    seq.steps.emplace_back(rule, *chosen);
    seq.states.push_back(std::move(next));
  }
  return seq;
}

qill::Sequent sequent_from_certificate_json(const TypeGraph& tg, const json& j) {
  std::string text = "Gamma: ";
  auto render = [](const json& arr) {
    if (arr.empty()) return std::string(".");
    std::string s;
    bool first = true;
    for (const auto& b : arr) {
      if (!first) s += ", ";
      first = false;
      s += b.at("var").get<std::string>() + ":(" + b.at("type").get<std::string>() + ")";
    }
    return s;
  };
  text += render(j.at("gamma"));
  text += "; Delta: " + render(j.at("delta"));
  text += " |- " + j.at("term").get<std::string>();
  text += " :: " + j.at("type").get<std::string>() + ";";
  return parse_sequent_text(text, tg);
}

}  // namespace gts
