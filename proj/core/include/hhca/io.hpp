#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hhca/bifurcation.hpp"
#include "hhca/normalform.hpp"
#include "hhca/phaseplane.hpp"
#include "hhca/signatures.hpp"
#include "hhca/system.hpp"

namespace hhca {

using Json = nlohmann::json;  // std::map backed, so keys come out sorted

// shortest round-trip decimal
std::string format_double(double x);

// columns: t, one per state component, event (1 on the pre-reset sample)
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& names);
void write_polylines_csv(std::ostream& os, const std::vector<Polyline>& lines,
                         const std::string& x_name, const std::string& y_name);

// Parsers start from the given defaults and reject unknown keys.
ModelParams parse_model_params(const Json& j, ModelParams base = {});
HybridParams parse_hybrid_params(const Json& j, HybridParams base = {});
StimulusProtocol parse_protocol(const Json& j);
IntegratorOptions parse_integrator_options(const Json& j, IntegratorOptions base = {});
Box parse_box(const Json& j);

Json to_json(const ModelParams& p);
Json to_json(const HybridParams& p);
Json to_json(const ModelSpec& m);
Json to_json(const StimulusProtocol& p);
Json to_json(const IntegratorOptions& o);
Json to_json(const Box& b);
Json to_json(const FixedPoint& fp);
Json to_json(const NullclineSet& nc);
Json to_json(const Manifold& m);
Json to_json(const BifurcationPoint& bp);
Json to_json(const NormalFormTransform& t);
Json to_json(const ResidualReport& r);
Json to_json(const SignatureReport& r);
Json to_json(const PulseThreshold& t);

// 2-space indent, trailing newline
std::string dump(const Json& j);

}  // namespace hhca
