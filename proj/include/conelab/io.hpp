#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "conelab/regularized.hpp"
#include "conelab/scheme.hpp"
#include "conelab/theta.hpp"
#include "conelab/verify.hpp"

namespace conelab {

using json = nlohmann::json;

json to_json(const YVector& y);
YVector yvector_from_json(const json& j);

json to_json(const Dataset& d);
Dataset dataset_from_json(const json& j);

json to_json(const Scheme& s);
Scheme scheme_from_json(const json& j);

json params_to_json(const Scheme& s, const ParamVector& a);
ParamVector params_from_json(const Scheme& s, const json& j);

json to_json(const SpuriousCertificate& cert);
SpuriousCertificate certificate_from_json(const json& j);

json to_json(const GrowthReport& report);
json to_json(const ThetaEstimate& est);
json to_json(const JungReport& report);
json to_json(const RegSpuriousCertificate& cert, const Scheme& scheme, const Dataset& data);

// FNV-1a over the canonical dataset JSON; stored in certificates.
std::string dataset_hash(const Dataset& d);

// Writes to path.tmp and renames; serialization is key-sorted and
// shortest-round-trip for doubles, so identical content is byte-identical.
void write_json_atomic(const json& j, const std::string& path);
json read_json(const std::string& path);

}  // namespace conelab
