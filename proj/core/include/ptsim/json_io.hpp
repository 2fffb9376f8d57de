#pragma once

#include <nlohmann/json.hpp>

#include "ptsim/emd.hpp"
#include "ptsim/eventlog.hpp"
#include "ptsim/params.hpp"
#include "ptsim/ptree.hpp"
#include "ptsim/simengine.hpp"

// JSON forms of the public types. Every `*_from_json` throws
// ptsim::Error(InvalidArgument) on a malformed document, naming the offending
// field in the detail; semantic validation is left to the owning module.
// Schemas are documented in docs/json-schemas.md.

namespace ptsim {

using Json = nlohmann::json;

Json to_json(const Node& node);
Node node_from_json(const Json& j);
Json to_json(const ProcessTree& tree);
ProcessTree tree_from_json(const Json& j);

Json to_json(const NodeId& id);
NodeId node_id_from_json(const Json& j);

/// `{"op": "...", "node": [..], ...}`. Subtrees may be given as JSON nodes or
/// as strings in the textual grammar.
TreeEdit tree_edit_from_json(const Json& j);
Json to_json(const TreeEdit& e);

Json to_json(const ArrivalProfile& a);
ArrivalProfile arrival_from_json(const Json& j);
Json to_json(const Calendar& c);
Calendar calendar_from_json(const Json& j);
Json to_json(const ParameterSet& p);
ParameterSet params_from_json(const Json& j);

Json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const Json& j);

/// Missing keys keep the canonical column names; null drops an optional column.
Json to_json(const ColumnMapping& m);
ColumnMapping mapping_from_json(const Json& j);

Json to_json(const KpiReport& k);
Json to_json(const Variant& v);
Json to_json(const EmdReport& r);

}  // namespace ptsim
