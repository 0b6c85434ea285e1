#include "scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace hhca::cli {

namespace fs = std::filesystem;

namespace {

void only_keys(const Json& j, const std::set<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw ValidationError(what + ": expected a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ValidationError(what + ": unknown field '" + k + "'");
}

double get_number(const Json& j, const char* key, double fallback, const std::string& what) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ValidationError(what + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

bool get_bool(const Json& j, const char* key, bool fallback, const std::string& what) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ValidationError(what + ": '" + key + "' must be a boolean");
    return j.at(key).get<bool>();
}

const std::map<std::string, std::set<std::string>>& request_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"simulate", {"output_dt"}},
        {"signature", {"thresholds"}},
        {"phase", {"I", "z", "box", "resolution", "manifolds", "arclength"}},
        {"bifurcate", {"kind", "range", "tol"}},
        {"normalform", {"eps", "radii"}},
        {"robustness",
         {"mode", "pulses", "pulse_time", "width", "max_amplitude", "tol", "hold", "thresholds"}},
        {"ionic-profile", {"V", "points"}},
    };
    return keys;
}

bool needs_time(const std::string& type, const Json& r) {
    if (type == "simulate" || type == "signature") return true;
    return type == "robustness" && r.value("mode", "pulses") != "matched-fold";
}

HybridFamily family_of(ModelKind k) {
    switch (k) {
        case ModelKind::hybrid3: return HybridFamily::transcritical_3;
        case ModelKind::fold: return HybridFamily::fold;
        case ModelKind::normal_form: return HybridFamily::normal_form;
        default: return HybridFamily::transcritical_2;
    }
}

ResolvedScenario resolve(const Json& j, const std::string& label) {
    const std::string what = label.empty() ? "scenario" : "scenario point '" + label + "'";
    ResolvedScenario r;
    r.label = label;
    if (!j.contains("model")) throw ValidationError(what + ": missing 'model'");
    r.model = parse_model(j.at("model"));
    if (j.contains("protocol")) r.protocol = parse_protocol(j.at("protocol"));
    if (j.contains("integrator")) r.integrator = parse_integrator_options(j.at("integrator"));
    r.t_end = get_number(j, "t_end", 0.0, what);
    if (j.contains("initial_state")) {
        const Json& s = j.at("initial_state");
        if (!s.is_array() || s.size() != dimension(r.model.kind))
            throw ValidationError(what + ": 'initial_state' must have one entry per state variable");
        std::vector<double> x;
        for (const auto& v : s) {
            if (!v.is_number()) throw ValidationError(what + ": 'initial_state' entries must be numbers");
            x.push_back(v.get<double>());
        }
        r.initial_state = x;
    }
    if (!j.contains("requests") || !j.at("requests").is_array() || j.at("requests").empty())
        throw ValidationError(what + ": 'requests' must be a non-empty array");
    std::set<std::string> names;
    for (const auto& req : j.at("requests")) {
        if (!req.is_object() || !req.contains("type") || !req.at("type").is_string())
            throw ValidationError(what + ": each request needs a string 'type'");
        std::string type = req.at("type").get<std::string>();
        auto it = request_keys().find(type);
        if (it == request_keys().end()) throw ValidationError(what + ": unknown request type '" + type + "'");
        std::set<std::string> allowed = it->second;
        allowed.insert("type");
        allowed.insert("name");
        only_keys(req, allowed, what + " request '" + type + "'");
        Json q = req;
        if (!q.contains("name")) {
            std::string base = type == "simulate" ? "trace" : type;
            if (type == "bifurcate") base = "bifurcation-" + q.value("kind", std::string("unknown"));
            std::string n = base;
            for (int k = 2; names.count(n); ++k) n = base + "-" + std::to_string(k);
            q["name"] = n;
        }
        if (!q.at("name").is_string() || q.at("name").get<std::string>().empty())
            throw ValidationError(what + ": request name must be a non-empty string");
        std::string n = q.at("name").get<std::string>();
        if (n.find('/') != std::string::npos || !names.insert(n).second)
            throw ValidationError(what + ": request name '" + n + "' is invalid or repeated");
        if (needs_time(type, q) && !(r.t_end > 0))
            throw ValidationError(what + ": request '" + n + "' needs a positive 't_end'");
        if (type == "bifurcate") bifurcation_kind_from_string(q.value("kind", std::string()));
        r.requests.push_back(q);
    }
    return r;
}

SignatureThresholds parse_thresholds(const Json& j, SignatureThresholds th) {
    only_keys(j, {"spike_level", "plateau", "adp", "settle_window", "refractory_skip", "use_events"},
              "thresholds");
    th.spike_level = get_number(j, "spike_level", th.spike_level, "thresholds");
    th.plateau = get_number(j, "plateau", th.plateau, "thresholds");
    th.adp = get_number(j, "adp", th.adp, "thresholds");
    th.settle_window = get_number(j, "settle_window", th.settle_window, "thresholds");
    th.refractory_skip = get_number(j, "refractory_skip", th.refractory_skip, "thresholds");
    th.use_events = get_bool(j, "use_events", th.use_events, "thresholds");
    th.validate();
    return th;
}

SignatureThresholds default_thresholds(const ModelSpec& m) {
    return m.is_hybrid() ? SignatureThresholds::hybrid(m.hybrid.v_th) : SignatureThresholds::hh();
}

std::vector<Pulse> parse_pulses(const Json& j) {
    StimulusProtocol p = parse_protocol(Json{{"pulses", j}});
    return p.pulses;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

std::string csv(const Trajectory& tr, ModelKind kind) {
    std::ostringstream os;
    write_trajectory_csv(os, tr, state_names(kind));
    return os.str();
}

std::string fmt(double x) { return format_double(x); }

class PointRunner {
public:
    PointRunner(const ResolvedScenario& sc, fs::path dir) : sc_(sc), dir_(std::move(dir)) {}

    std::vector<std::string> run() {
        for (const auto& req : sc_.requests) {
            const std::string name = req.at("name").get<std::string>();
            const std::string type = req.at("type").get<std::string>();
            try {
                dispatch(type, name, req);
            } catch (const ValidationError&) {
                throw;
            } catch (const ContractError&) {
                throw;
            } catch (const std::invalid_argument&) {
                throw;
            } catch (const std::exception& e) {
                std::string who = (sc_.label.empty() ? "" : sc_.label + "/") + name;
                throw RequestError(who, e.what());
            }
        }
        return lines_;
    }

private:
    const ResolvedScenario& sc_;
    fs::path dir_;
    std::optional<Trajectory> last_;
    std::vector<std::string> lines_;

    void say(const std::string& name, const std::string& text) {
        lines_.push_back((sc_.label.empty() ? "" : sc_.label + "/") + name + ": " + text);
    }

    std::vector<double> start_state(double I) const {
        if (sc_.initial_state) return *sc_.initial_state;
        return resting_state(sc_.model, I);
    }

    Trajectory run_protocol(const StimulusProtocol& p, double output_dt = -1) const {
        IntegratorOptions o = sc_.integrator;
        if (output_dt >= 0) o.output_dt = output_dt;
        return simulate(sc_.model, start_state(p.baseline), 0.0, sc_.t_end, p, o);
    }

    void dispatch(const std::string& type, const std::string& name, const Json& req) {
        if (type == "simulate") simulate_req(name, req);
        else if (type == "signature") signature_req(name, req);
        else if (type == "phase") phase_req(name, req);
        else if (type == "bifurcate") bifurcate_req(name, req);
        else if (type == "normalform") normalform_req(name, req);
        else if (type == "robustness") robustness_req(name, req);
        else if (type == "ionic-profile") ionic_req(name, req);
    }

    void simulate_req(const std::string& name, const Json& req) {
        double dt = get_number(req, "output_dt", -1.0, name);
        Trajectory tr = run_protocol(sc_.protocol, dt);
        write_text(dir_ / (name + ".csv"), csv(tr, sc_.model.kind));
        say(name, std::to_string(tr.size()) + " samples, " + std::to_string(tr.events.size()) +
                      " resets, " + to_string(tr.termination));
        last_ = std::move(tr);
    }

    void signature_req(const std::string& name, const Json& req) {
        SignatureThresholds th = default_thresholds(sc_.model);
        if (req.contains("thresholds")) th = parse_thresholds(req.at("thresholds"), th);
        if (!last_) last_ = run_protocol(sc_.protocol);
        SignatureReport r = analyze(*last_, sc_.protocol, th);
        Json j = to_json(r);
        j["first_burst_size"] = first_burst_size(r.spike_times);
        double cv = isi_cv(r.spike_times, 10);
        j["isi_cv_last10"] = std::isfinite(cv) ? Json(cv) : Json(nullptr);
        write_text(dir_ / (name + ".json"), dump(j));
        say(name, std::to_string(r.spike_times.size()) + " spikes, latency " +
                      (r.latency ? fmt(*r.latency) : std::string("none")) + ", plateau " +
                      (r.plateau.present ? "yes" : "no") + ", adp " + (r.adp.present ? "yes" : "no") +
                      ", subthreshold oscillations " + (r.subthreshold_oscillations ? "yes" : "no"));
    }

    void phase_req(const std::string& name, const Json& req) {
        double I = get_number(req, "I", sc_.protocol.baseline, name);
        double z = get_number(req, "z", 0.0, name);
        PlanarField field;
        Box box;
        if (sc_.model.is_hh()) {
            ModelParams q = sc_.model.hh;
            q.I_app += I;
            field = reduced_field(q);
        } else {
            HybridParams q = sc_.model.hybrid;
            q.I += I - z;  // the adaptation variable enters v' as -z
            HybridFamily fam = family_of(sc_.model.kind);
            field = hybrid_field(q, fam);
            box = default_box(fam);
        }
        if (req.contains("box")) box = parse_box(req.at("box"));
        NullclineOptions no;
        if (req.contains("resolution")) {
            if (!req.at("resolution").is_number_integer() || req.at("resolution").get<int>() < 8)
                throw ValidationError(name + ": 'resolution' must be an integer >= 8");
            no.resolution = req.at("resolution").get<int>();
        }
        NullclineSet nc = extract_nullclines(field, box, no);
        FixedPointSearch fps = find_fixed_points(field, nc);

        Json j{{"I", I}, {"z", z}, {"box", to_json(box)}, {"nullclines", to_json(nc)},
               {"x_name", field.x_name}, {"y_name", field.y_name}, {"warnings", fps.warnings}};
        j["fixed_points"] = Json::array();
        for (const auto& fp : fps.points) j["fixed_points"].push_back(to_json(fp));

        std::ostringstream xs, ys;
        write_polylines_csv(xs, nc.x_nullcline, field.x_name, field.y_name);
        write_polylines_csv(ys, nc.y_nullcline, field.x_name, field.y_name);
        write_text(dir_ / (name + "-" + field.x_name + "-nullcline.csv"), xs.str());
        write_text(dir_ / (name + "-" + field.y_name + "-nullcline.csv"), ys.str());

        std::ostringstream fcsv;
        fcsv << field.x_name << ',' << field.y_name << ",kind\n";
        for (const auto& fp : fps.points)
            fcsv << fmt(fp.location.x) << ',' << fmt(fp.location.y) << ',' << to_string(fp.kind) << '\n';
        write_text(dir_ / (name + "-fixed-points.csv"), fcsv.str());

        j["manifolds"] = Json::array();
        if (get_bool(req, "manifolds", false, name)) {
            ManifoldOptions mo;
            mo.box = box;
            mo.arclength_budget = get_number(req, "arclength", mo.arclength_budget, name);
            for (const auto& fp : fps.points) mo.fixed_points.push_back(fp.location);
            std::ostringstream ms;
            ms << "saddle,branch," << field.x_name << ',' << field.y_name << '\n';
            int s = 0;
            for (const auto& fp : fps.points) {
                if (fp.kind != FixedPointKind::saddle) continue;
                for (ManifoldBranch b : {ManifoldBranch::stable_plus, ManifoldBranch::stable_minus,
                                         ManifoldBranch::unstable_plus, ManifoldBranch::unstable_minus}) {
                    Manifold m = shoot_manifold(field, fp, b, mo);
                    j["manifolds"].push_back(to_json(m));
                    for (const auto& p : m.polyline)
                        ms << s << ',' << to_string(b) << ',' << fmt(p.x) << ',' << fmt(p.y) << '\n';
                }
                ++s;
            }
            write_text(dir_ / (name + "-manifolds.csv"), ms.str());
        }
        write_text(dir_ / (name + ".json"), dump(j));
        std::string kinds;
        for (const auto& fp : fps.points) kinds += (kinds.empty() ? "" : ", ") + to_string(fp.kind);
        say(name, "I=" + fmt(I) + ", " + std::to_string(fps.points.size()) + " fixed points (" + kinds + ")");
    }

    std::pair<double, double> range_of(const Json& req, double lo, double hi) const {
        if (!req.contains("range") || req.at("range") == "auto") return {lo, hi};
        const Json& r = req.at("range");
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number() ||
            !(r[0].get<double>() < r[1].get<double>()))
            throw ValidationError("bifurcate: 'range' must be \"auto\" or [lo, hi] with lo < hi");
        return {r[0].get<double>(), r[1].get<double>()};
    }

    void bifurcate_req(const std::string& name, const Json& req) {
        BifurcationKind kind = bifurcation_kind_from_string(req.at("kind").get<std::string>());
        BifurcationPoint bp;
        if (kind == BifurcationKind::hybrid_homoclinic) {
            if (sc_.model.kind != ModelKind::hybrid2)
                throw ValidationError(name + ": hybrid-homoclinic needs a 2-variable hybrid model");
            auto [lo, hi] = range_of(req, -2.0, 2.0);
            bp = detect_hybrid_homoclinic(sc_.model.hybrid, lo, hi, get_number(req, "tol", 1e-4, name));
        } else {
            if (!sc_.model.is_hh())
                throw ValidationError(name + ": " + to_string(kind) + " needs a Hodgkin-Huxley model");
            const ModelParams& p = sc_.model.hh;
            switch (kind) {
                case BifurcationKind::transcritical:
                    bp = detect_transcritical(p);
                    break;
                case BifurcationKind::hopf: {
                    auto [lo, hi] = range_of(req, 0.0, 12.0);
                    bp = detect_hopf(p, lo, hi, EquilibriumBranch::lowest, get_number(req, "tol", 1e-4, name));
                    break;
                }
                case BifurcationKind::snlc: {
                    auto [lo, hi] = range_of(req, 0.0, 12.0);
                    bp = detect_snlc(p, lo, hi, get_number(req, "tol", 1e-2, name));
                    break;
                }
                case BifurcationKind::saddle_node: {
                    auto [lo, hi] = range_of(req, detect_transcritical(p).value + 0.01, 40.0);
                    bp = detect_saddle_node(p, lo, hi, get_number(req, "tol", 1e-8, name));
                    break;
                }
                case BifurcationKind::saddle_homoclinic: {
                    auto [lo, hi] = range_of(req, detect_transcritical(p).value + 0.01, 3.0);
                    bp = detect_saddle_homoclinic(p, lo, hi, get_number(req, "tol", 1e-3, name));
                    break;
                }
                default:
                    break;
            }
        }
        write_text(dir_ / (name + ".json"), dump(to_json(bp)));
        std::string flags;
        for (const auto& f : bp.flags) flags += " [" + f + "]";
        say(name, to_string(bp.kind) + (bp.found ? " at I=" + fmt(bp.value) : " not found") + flags);
    }

    void normalform_req(const std::string& name, const Json& req) {
        if (!sc_.model.is_hh()) throw ValidationError(name + ": normalform needs a Hodgkin-Huxley model");
        const ModelParams& p = sc_.model.hh;
        BifurcationPoint tc = detect_transcritical(p);
        NormalFormTransform xf = compute_transform(p, tc, get_number(req, "eps", 0.0, name));
        std::vector<double> radii{0.2, 0.1, 0.05};
        if (req.contains("radii")) {
            radii.clear();
            for (const auto& r : req.at("radii")) {
                if (!r.is_number() || !(r.get<double>() > 0))
                    throw ValidationError(name + ": radii must be positive numbers");
                radii.push_back(r.get<double>());
            }
            if (radii.size() < 2) throw ValidationError(name + ": need at least two radii");
        }
        ResidualReport rr = residual_report(p, xf, radii);
        Json j{{"transcritical", to_json(tc)}, {"transform", to_json(xf)}, {"residual", to_json(rr)}};
        write_text(dir_ / (name + ".json"), dump(j));
        say(name, "lambda=" + fmt(xf.lambda) + ", eps~=" + fmt(xf.eps_tilde) + ", residual slope " +
                      fmt(rr.slope));
    }

    void robustness_req(const std::string& name, const Json& req) {
        std::string mode = req.value("mode", std::string("pulses"));
        if (mode == "matched-fold") {
            if (sc_.model.kind != ModelKind::hybrid2)
                throw ValidationError(name + ": matched-fold needs a 2-variable hybrid model");
            double hold = get_number(req, "hold", -1.0, name);
            double width = get_number(req, "width", 0.5, name);
            double amax = get_number(req, "max_amplitude", 50.0, name);
            double tol = get_number(req, "tol", 1e-3, name);
            RobustnessSetup tc = transcritical_setup(sc_.model.hybrid, hold);
            RobustnessSetup fold = matched_fold_setup(tc);
            PulseThreshold a = setup_threshold(tc, width, amax, tol);
            PulseThreshold b = setup_threshold(fold, width, amax, tol);
            auto side = [&](const RobustnessSetup& s, const PulseThreshold& t) {
                return Json{{"model", to_json(s.model)}, {"start", s.start}, {"hold", s.hold},
                            {"apex_time", s.apex_time}, {"apex_voltage", s.apex_voltage},
                            {"rest_voltage", s.rest_voltage}, {"threshold", to_json(t)}};
            };
            Json j{{"transcritical", side(tc, a)}, {"fold", side(fold, b)}, {"pulse_width", width},
                   {"fold_more_fragile", a.found && b.found && b.amplitude < a.amplitude}};
            IntegratorOptions o;
            o.output_dt = 0.01;
            StimulusProtocol hp;
            hp.baseline = hold;
            write_text(dir_ / (name + "-transcritical.csv"),
                       csv(simulate(tc.model, tc.start, 0, tc.t_end, hp, o), tc.model.kind));
            write_text(dir_ / (name + "-fold.csv"),
                       csv(simulate(fold.model, fold.start, 0, fold.t_end, hp, o), fold.model.kind));
            write_text(dir_ / (name + ".json"), dump(j));
            say(name, "pulse threshold transcritical " + fmt(a.amplitude) + ", fold " + fmt(b.amplitude));
            return;
        }
        SignatureThresholds th = default_thresholds(sc_.model);
        if (req.contains("thresholds")) th = parse_thresholds(req.at("thresholds"), th);
        Simulator sim = [this](const StimulusProtocol& p) { return run_protocol(p); };
        if (mode == "pulses") {
            if (!req.contains("pulses")) throw ValidationError(name + ": 'pulses' required");
            std::vector<Pulse> pulses = parse_pulses(req.at("pulses"));
            SignatureReport r = robustness_run(sim, sc_.protocol, pulses, th);
            StimulusProtocol pulsed = sc_.protocol;
            pulsed.pulses.insert(pulsed.pulses.end(), pulses.begin(), pulses.end());
            write_text(dir_ / (name + "-nominal.csv"), csv(sim(sc_.protocol), sc_.model.kind));
            write_text(dir_ / (name + "-pulsed.csv"), csv(sim(pulsed), sc_.model.kind));
            write_text(dir_ / (name + ".json"), dump(to_json(r)));
            say(name, "extra spikes " + std::to_string(r.extra_spike_count.value_or(0)));
        } else if (mode == "threshold") {
            PulseThreshold t = pulse_threshold(
                sim, sc_.protocol, get_number(req, "pulse_time", 0.0, name),
                get_number(req, "width", 0.5, name), get_number(req, "max_amplitude", 50.0, name), th,
                get_number(req, "tol", 1e-3, name));
            write_text(dir_ / (name + ".json"), dump(to_json(t)));
            say(name, t.found ? "pulse threshold " + fmt(t.amplitude) : "no extra spike up to max amplitude");
        } else {
            throw ValidationError(name + ": unknown robustness mode '" + mode + "'");
        }
    }

    void ionic_req(const std::string& name, const Json& req) {
        if (!sc_.model.is_hh()) throw ValidationError(name + ": ionic-profile needs a Hodgkin-Huxley model");
        std::vector<double> Vs{0.0};
        if (req.contains("V")) {
            Vs.clear();
            for (const auto& v : req.at("V")) {
                if (!v.is_number()) throw ValidationError(name + ": 'V' entries must be numbers");
                Vs.push_back(v.get<double>());
            }
        }
        int points = req.contains("points") ? req.at("points").get<int>() : 201;
        if (points < 2) throw ValidationError(name + ": 'points' must be >= 2");
        std::vector<double> grid(points);
        for (int i = 0; i < points; ++i) grid[i] = static_cast<double>(i) / (points - 1);
        std::ostringstream os;
        os << "V,n,I_ion\n";
        Json j{{"profiles", Json::array()}};
        std::string text;
        for (double V : Vs) {
            auto prof = ionic_current_profile(V, grid, sc_.model.hh);
            int ups = 0, downs = 0;
            for (std::size_t i = 1; i < prof.size(); ++i) (prof[i] > prof[i - 1] ? ups : downs)++;
            for (std::size_t i = 0; i < grid.size(); ++i)
                os << fmt(V) << ',' << fmt(grid[i]) << ',' << fmt(prof[i]) << '\n';
            bool increasing = downs == 0;
            j["profiles"].push_back({{"V", V}, {"strictly_increasing", increasing},
                                     {"rising_steps", ups}, {"falling_steps", downs}});
            text += (text.empty() ? "" : ", ") + std::string("V=") + fmt(V) +
                    (increasing ? " increasing" : " non-monotone");
        }
        write_text(dir_ / (name + ".csv"), os.str());
        write_text(dir_ / (name + ".json"), dump(j));
        say(name, text);
    }
};

}  // namespace

ModelSpec parse_model(const Json& j) {
    only_keys(j, {"preset", "kind", "params"}, "model");
    ModelSpec m;
    if (j.contains("preset")) {
        if (!j.at("preset").is_string()) throw ValidationError("model: 'preset' must be a string");
        m = preset(j.at("preset").get<std::string>());
    } else if (!j.contains("kind")) {
        throw ValidationError("model: needs 'preset' or 'kind'");
    }
    if (j.contains("kind")) {
        if (!j.at("kind").is_string()) throw ValidationError("model: 'kind' must be a string");
        bool was_hh = m.is_hh();
        m.kind = model_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("preset") && was_hh != m.is_hh() )
            throw ValidationError("model: kind does not fit the preset's parameter family");
    }
    if (j.contains("params")) {
        bool hh_params = m.kind == ModelKind::full || m.kind == ModelKind::reduced;
        if (hh_params) m.hh = parse_model_params(j.at("params"), m.hh);
        else m.hybrid = parse_hybrid_params(j.at("params"), m.hybrid);
    }
    m.validate();
    return m;
}

Scenario parse_scenario(const Json& j) {
    only_keys(j, {"name", "description", "model", "protocol", "integrator", "t_end", "initial_state",
                  "requests", "sweep", "random_free"},
              "scenario");
    Scenario s;
    s.name = j.value("name", std::string("scenario"));
    if (j.contains("random_free") && j.at("random_free") != true)
        throw ValidationError("scenario: 'random_free' can only be true");
    if (!j.contains("sweep")) {
        s.points.push_back(resolve(j, ""));
        return s;
    }
    const Json& sweep = j.at("sweep");
    if (!sweep.is_array() || sweep.empty()) throw ValidationError("scenario: 'sweep' must be a non-empty array");
    Json base = j;
    base.erase("sweep");
    std::set<std::string> labels;
    for (const auto& pt : sweep) {
        only_keys(pt, {"label", "patch"}, "sweep point");
        if (!pt.contains("label") || !pt.at("label").is_string())
            throw ValidationError("sweep point: needs a string 'label'");
        std::string label = pt.at("label").get<std::string>();
        if (label.empty() || label.find('/') != std::string::npos || label == "." || label == ".." ||
            !labels.insert(label).second)
            throw ValidationError("sweep point: label '" + label + "' is invalid or repeated");
        Json merged = base;
        if (pt.contains("patch")) {
            const Json& patch = pt.at("patch");
            only_keys(patch, {"model", "protocol", "integrator", "t_end", "initial_state", "requests"},
                      "sweep patch '" + label + "'");
            merged.merge_patch(patch);
        }
        s.points.push_back(resolve(merged, label));
    }
    return s;
}

Scenario load_scenario(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open scenario file " + path.string());
    Json j;
    try {
        j = Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw ValidationError("scenario file " + path.string() + ": " + e.what());
    }
    return parse_scenario(j);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

Json build_manifest(const fs::path& dir, const std::string& scenario) {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) {
            std::string rel = fs::relative(e.path(), dir).generic_string();
            if (rel != "manifest.json") files.push_back(rel);
        }
    std::sort(files.begin(), files.end());
    Json list = Json::array();
    for (const auto& f : files) {
        std::ifstream is(dir / f, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        list.push_back({{"path", f}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }
    return {{"scenario", scenario}, {"files", list}};
}

Json run_scenario(const Scenario& s, const fs::path& out, const RunOptions& opts) {
    // drop what a previous run of this directory produced so the manifest stays exact
    fs::path old = out / "manifest.json";
    if (fs::exists(old)) {
        std::ifstream is(old);
        Json m = Json::parse(is, nullptr, false);
        if (m.is_object() && m.contains("files"))
            for (const auto& f : m.at("files")) fs::remove(out / f.at("path").get<std::string>());
        fs::remove(old);
    }
    fs::create_directories(out);

    std::vector<ResolvedScenario> points = s.points;
    for (auto& p : points) {
        if (opts.rtol) p.integrator.rtol = *opts.rtol;
        if (opts.atol) p.integrator.atol = *opts.atol;
        p.integrator.validate();
    }
    std::vector<std::vector<std::string>> lines(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < points.size();) {
            try {
                fs::path dir = points[i].label.empty() ? out : out / points[i].label;
                lines[i] = PointRunner(points[i], dir).run();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(points.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::string summary = "scenario " + s.name + "\n";
    for (const auto& l : lines)
        for (const auto& x : l) summary += x + "\n";
    write_text(out / "summary.txt", summary);
    Json manifest = build_manifest(out, s.name);
    write_text(out / "manifest.json", dump(manifest));
    return manifest;
}

fs::path recipe_dir() { return fs::path(HHCA_RECIPE_DIR); }

std::vector<std::string> recipe_names(const fs::path& dir) {
    std::vector<std::string> names;
    if (!fs::is_directory(dir)) return names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace hhca::cli
