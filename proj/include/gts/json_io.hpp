#pragma once

// JSON forms for matches, traces and certificates, matching the schemas
// shipped under docs/schemas/.

#include <json.hpp>

#include "gts/dpo.hpp"
#include "gts/encode.hpp"
#include "gts/parse.hpp"

namespace gts {

nlohmann::json match_to_json(const dpo::Match& m);
nlohmann::json trace_to_json(const dpo::DerivationSeq& t);
nlohmann::json graph_to_json(const GraphExpression& e);
nlohmann::json normal_to_json(const NormalGraph& g);
nlohmann::json certificate_to_json(const enc::Certificate& c);

/// Rebuilds a trace from its JSON form by replaying it in the system.
dpo::DerivationSeq trace_from_json(const dpo::GTS& gts, const nlohmann::json& j);

/// Reads back a serialized certificate's sequent for re-checking.
qill::Sequent sequent_from_certificate_json(const TypeGraph& tg, const nlohmann::json& j);

}  // namespace gts
