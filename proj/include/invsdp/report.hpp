#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "invsdp/cluster.hpp"
#include "invsdp/mask.hpp"
#include "invsdp/verify.hpp"

namespace invsdp {

using Json = nlohmann::ordered_json;

Json verdict_json(const Verdict& v);
Json constraints_json(const std::vector<Constraint>& inv);
Json cluster_json(const UnderApprox& u, const std::vector<std::string>& params);
Json partition_json(const PartitionResult& p, const std::vector<std::string>& params);
Json mask_json(const MaskResult& r, const Template& tpl);

// {constraints: [{poly, relation}]} with relation one of "<=", ">=", "==";
// ">=" is normalised to "<=" by negation.
std::vector<Constraint> constraints_from_json(const Json& j, const VarList& vars);
// Cluster results carry their polynomial as h_coefficients.
Polynomial h_from_json(const Json& u, const std::vector<std::string>& params);

// Removes every "timings" member, recursively; used to compare runs.
Json strip_timings(Json j);

// Pretty-printed with a trailing newline.
std::string dump(const Json& j);

}  // namespace invsdp
