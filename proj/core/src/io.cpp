#include "hhca/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <set>

namespace hhca {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& names) {
    if (names.size() != traj.dim) throw ValidationError("csv: column names do not match dimension");
    os << "t";
    for (const auto& n : names) os << ',' << n;
    os << ",event\n";
    std::size_t ev = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        bool is_event = false;
        if (ev < traj.events.size() && traj.times[i] == traj.events[ev].time) {
            const auto& pre = traj.events[ev].pre_state;
            is_event = std::equal(pre.begin(), pre.end(), traj.state(i));
            if (is_event) ++ev;
        }
        os << format_double(traj.times[i]);
        for (std::size_t k = 0; k < traj.dim; ++k) os << ',' << format_double(traj.at(i, k));
        os << ',' << (is_event ? 1 : 0) << '\n';
    }
}

void write_polylines_csv(std::ostream& os, const std::vector<Polyline>& lines,
                         const std::string& x_name, const std::string& y_name) {
    os << "curve," << x_name << ',' << y_name << '\n';
    for (std::size_t c = 0; c < lines.size(); ++c)
        for (const auto& p : lines[c])
            os << c << ',' << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

namespace {

void require_object(const Json& j, const char* what) {
    if (!j.is_object()) throw ValidationError(std::string(what) + ": expected a JSON object");
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const char* what) {
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ValidationError(std::string(what) + ": unknown field '" + k + "'");
}

double number(const Json& j, const std::string& key, const char* what) {
    const Json& v = j.at(key);
    if (!v.is_number()) throw ValidationError(std::string(what) + ": '" + key + "' must be a number");
    return v.get<double>();
}

template <class T>
void read(const Json& j, const char* key, T& out, const char* what) {
    if (!j.contains(key)) return;
    if constexpr (std::is_same_v<T, bool>) {
        if (!j.at(key).is_boolean())
            throw ValidationError(std::string(what) + ": '" + key + "' must be a boolean");
        out = j.at(key).get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!j.at(key).is_number_integer())
            throw ValidationError(std::string(what) + ": '" + key + "' must be an integer");
        out = j.at(key).get<T>();
    } else {
        out = number(j, key, what);
    }
}

// JSON has no infinity; null stands for it where a bound may be absent
Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json point(const Point2& p) { return Json::array({p.x, p.y}); }

Json polylines(const std::vector<Polyline>& lines) {
    Json out = Json::array();
    for (const auto& l : lines) {
        Json pts = Json::array();
        for (const auto& p : l) pts.push_back(point(p));
        out.push_back(pts);
    }
    return out;
}

}  // namespace

ModelParams parse_model_params(const Json& j, ModelParams p) {
    const char* w = "model params";
    require_object(j, w);
    reject_unknown(j, {"C", "g_Na", "g_K", "g_L", "g_Ca", "V_Na", "V_K", "V_L", "V_Ca", "I_pump",
                       "I_app", "ca_exponent"}, w);
    read(j, "C", p.C, w);
    read(j, "g_Na", p.g_Na, w);
    read(j, "g_K", p.g_K, w);
    read(j, "g_L", p.g_L, w);
    read(j, "g_Ca", p.g_Ca, w);
    read(j, "V_Na", p.V_Na, w);
    read(j, "V_K", p.V_K, w);
    read(j, "V_L", p.V_L, w);
    read(j, "V_Ca", p.V_Ca, w);
    read(j, "I_pump", p.I_pump, w);
    read(j, "I_app", p.I_app, w);
    read(j, "ca_exponent", p.ca_exponent, w);
    p.validate();
    return p;
}

HybridParams parse_hybrid_params(const Json& j, HybridParams p) {
    const char* w = "hybrid params";
    require_object(j, w);
    reject_unknown(j, {"a", "b", "eps", "w0", "c_reset", "d_reset", "v_th", "I", "eps_z", "d_z"}, w);
    read(j, "a", p.a, w);
    read(j, "b", p.b, w);
    read(j, "eps", p.eps, w);
    read(j, "w0", p.w0, w);
    read(j, "c_reset", p.c_reset, w);
    read(j, "d_reset", p.d_reset, w);
    read(j, "v_th", p.v_th, w);
    read(j, "I", p.I, w);
    read(j, "eps_z", p.eps_z, w);
    read(j, "d_z", p.d_z, w);
    p.validate();
    return p;
}

StimulusProtocol parse_protocol(const Json& j) {
    const char* w = "protocol";
    require_object(j, w);
    reject_unknown(j, {"baseline", "step", "pulses"}, w);
    StimulusProtocol p;
    read(j, "baseline", p.baseline, w);
    if (j.contains("step") && !j.at("step").is_null()) {
        const Json& s = j.at("step");
        require_object(s, "protocol step");
        reject_unknown(s, {"amplitude", "on", "off"}, "protocol step");
        p.step = StepInput{number(s, "amplitude", w), number(s, "on", w), number(s, "off", w)};
    }
    if (j.contains("pulses")) {
        if (!j.at("pulses").is_array()) throw ValidationError("protocol: 'pulses' must be an array");
        for (const auto& q : j.at("pulses")) {
            require_object(q, "protocol pulse");
            reject_unknown(q, {"time", "amplitude", "width"}, "protocol pulse");
            p.pulses.push_back({number(q, "time", w), number(q, "amplitude", w), number(q, "width", w)});
        }
    }
    p.validate();
    return p;
}

IntegratorOptions parse_integrator_options(const Json& j, IntegratorOptions o) {
    const char* w = "integrator options";
    require_object(j, w);
    reject_unknown(j, {"rtol", "atol", "max_step", "initial_step", "event_tol", "convergence_radius",
                       "divergence_bound", "max_events", "max_steps", "detect_equilibrium",
                       "output_dt"}, w);
    read(j, "rtol", o.rtol, w);
    read(j, "atol", o.atol, w);
    if (j.contains("max_step") && j.at("max_step").is_null())
        o.max_step = std::numeric_limits<double>::infinity();
    else
        read(j, "max_step", o.max_step, w);
    read(j, "initial_step", o.initial_step, w);
    read(j, "event_tol", o.event_tol, w);
    read(j, "convergence_radius", o.convergence_radius, w);
    read(j, "divergence_bound", o.divergence_bound, w);
    read(j, "max_events", o.max_events, w);
    read(j, "max_steps", o.max_steps, w);
    read(j, "detect_equilibrium", o.detect_equilibrium, w);
    read(j, "output_dt", o.output_dt, w);
    o.validate();
    return o;
}

Box parse_box(const Json& j) {
    if (!j.is_array() || j.size() != 4)
        throw ValidationError("box: expected [x_min, x_max, y_min, y_max]");
    for (const auto& v : j)
        if (!v.is_number()) throw ValidationError("box: entries must be numbers");
    Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    b.validate();
    return b;
}

Json to_json(const ModelParams& p) {
    return {{"C", p.C},         {"g_Na", p.g_Na},     {"g_K", p.g_K},     {"g_L", p.g_L},
            {"g_Ca", p.g_Ca},   {"V_Na", p.V_Na},     {"V_K", p.V_K},     {"V_L", p.V_L},
            {"V_Ca", p.V_Ca},   {"I_pump", p.I_pump}, {"I_app", p.I_app},
            {"ca_exponent", p.ca_exponent}};
}

Json to_json(const HybridParams& p) {
    return {{"a", p.a},         {"b", p.b},     {"eps", p.eps},     {"w0", p.w0},
            {"c_reset", p.c_reset}, {"d_reset", p.d_reset}, {"v_th", p.v_th},
            {"I", p.I},         {"eps_z", p.eps_z}, {"d_z", p.d_z}};
}

Json to_json(const ModelSpec& m) {
    Json j{{"kind", to_string(m.kind)}};
    if (m.is_hh()) j["params"] = to_json(m.hh);
    else j["params"] = to_json(m.hybrid);
    return j;
}

Json to_json(const StimulusProtocol& p) {
    Json j{{"baseline", p.baseline}, {"pulses", Json::array()}};
    j["step"] = p.step ? Json{{"amplitude", p.step->amplitude}, {"on", p.step->on}, {"off", p.step->off}}
                       : Json(nullptr);
    for (const auto& q : p.pulses)
        j["pulses"].push_back({{"time", q.time}, {"amplitude", q.amplitude}, {"width", q.width}});
    return j;
}

Json to_json(const IntegratorOptions& o) {
    return {{"rtol", o.rtol},
            {"atol", o.atol},
            {"max_step", finite_or_null(o.max_step)},
            {"initial_step", o.initial_step},
            {"event_tol", o.event_tol},
            {"convergence_radius", o.convergence_radius},
            {"divergence_bound", o.divergence_bound},
            {"max_events", o.max_events},
            {"max_steps", o.max_steps},
            {"detect_equilibrium", o.detect_equilibrium},
            {"output_dt", o.output_dt}};
}

Json to_json(const Box& b) { return Json::array({b.x_min, b.x_max, b.y_min, b.y_max}); }

Json to_json(const FixedPoint& fp) {
    Json ev = Json::array();
    for (const auto& e : fp.eigenvalues) ev.push_back({{"re", e.real()}, {"im", e.imag()}});
    return {{"location", point(fp.location)},
            {"jacobian", Json::array({fp.jacobian[0], fp.jacobian[1], fp.jacobian[2], fp.jacobian[3]})},
            {"eigenvalues", ev},
            {"kind", to_string(fp.kind)}};
}

Json to_json(const NullclineSet& nc) {
    return {{"x_nullcline", polylines(nc.x_nullcline)},
            {"y_nullcline", polylines(nc.y_nullcline)},
            {"box", to_json(nc.box)},
            {"resolution", nc.resolution}};
}

Json to_json(const Manifold& m) {
    return {{"saddle", to_json(m.saddle)},
            {"branch", to_string(m.branch)},
            {"polyline", polylines({m.polyline})[0]},
            {"arclength", m.arclength},
            {"stop", to_string(m.stop)}};
}

Json to_json(const BifurcationPoint& bp) {
    Json diag = Json::object();
    for (const auto& [k, v] : bp.diagnostics) diag[k] = finite_or_null(v);
    return {{"kind", to_string(bp.kind)},
            {"found", bp.found},
            {"value", finite_or_null(bp.value)},
            {"bracket", Json::array({finite_or_null(bp.lo), finite_or_null(bp.hi)})},
            {"location", bp.location},
            {"diagnostics", diag},
            {"flags", bp.flags},
            {"note", bp.note}};
}

Json to_json(const NormalFormTransform& t) {
    return {{"V_tc", t.V_tc},
            {"n_tc", t.n_tc},
            {"I_tc", t.I_tc},
            {"alpha", t.alpha},
            {"beta", t.beta},
            {"gamma", t.gamma},
            {"discriminant", t.discriminant},
            {"lambda", t.lambda},
            {"g0", t.g0},
            {"eps", t.eps},
            {"eps_tilde", t.eps_tilde},
            {"C", t.C},
            {"linear", t.linear},
            {"offset", t.offset}};
}

Json to_json(const ResidualReport& r) {
    return {{"radii", r.radii},
            {"max_residual", r.max_residual},
            {"slope", r.slope},
            {"w_ratio_max", r.w_ratio_max},
            {"w_constant", r.w_constant}};
}

Json to_json(const SignatureReport& r) {
    const auto& th = r.thresholds;
    return {
        {"spike_times", r.spike_times},
        {"spike_count", r.spike_times.size()},
        {"latency", r.latency ? Json(*r.latency) : Json(nullptr)},
        {"plateau",
         {{"present", r.plateau.present},
          {"trough_voltage", r.plateau.trough_voltage},
          {"rest_voltage", r.plateau.rest_voltage},
          {"margin", r.plateau.margin},
          {"reason", r.plateau.reason}}},
        {"adp",
         {{"present", r.adp.present},
          {"apex_voltage", r.adp.apex_voltage},
          {"apex_time", r.adp.apex_time},
          {"trough_voltage", r.adp.trough_voltage},
          {"settle_voltage", r.adp.settle_voltage},
          {"reason", r.adp.reason}}},
        {"subthreshold_oscillations", r.subthreshold_oscillations},
        {"extra_spike_count", r.extra_spike_count ? Json(*r.extra_spike_count) : Json(nullptr)},
        {"thresholds",
         {{"spike_level", th.spike_level},
          {"plateau", th.plateau},
          {"adp", th.adp},
          {"settle_window", th.settle_window},
          {"refractory_skip", th.refractory_skip},
          {"use_events", th.use_events}}}};
}

Json to_json(const PulseThreshold& t) {
    return {{"found", t.found}, {"amplitude", t.amplitude}, {"bracket", Json::array({t.lo, t.hi})}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace hhca
