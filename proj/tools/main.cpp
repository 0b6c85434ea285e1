#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "scenario.hpp"

using namespace hhca;
using namespace hhca::cli;
namespace fs = std::filesystem;

namespace {

// inline JSON if it looks like an object, otherwise a file path
Json json_arg(const std::string& s, const char* what) {
    try {
        if (!s.empty() && s.front() == '{') return Json::parse(s);
        std::ifstream is(s);
        if (!is) throw ValidationError(std::string(what) + ": cannot open " + s);
        return Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string(what) + ": " + e.what());
    }
}

struct Common {
    std::string preset, kind, params, protocol, out = "out";
    double t_end = 0;
    double output_dt = 0.05;
    std::optional<double> rtol, atol;
    int jobs = 1;
};

void add_model_flags(CLI::App* c, Common& o, bool model_kind = true) {
    c->add_option("--preset", o.preset, "model preset (see 'presets')");
    if (model_kind)
        c->add_option("--kind", o.kind, "model kind: full, reduced, normal-form, hybrid2, hybrid3, fold");
    c->add_option("--params", o.params, "parameter overrides: JSON file or inline object");
    c->add_option("--out", o.out, "output directory");
    c->add_option("--rtol", o.rtol, "integrator relative tolerance");
    c->add_option("--atol", o.atol, "integrator absolute tolerance");
}

void add_protocol_flags(CLI::App* c, Common& o) {
    c->add_option("--protocol", o.protocol, "stimulus protocol: JSON file or inline object");
    c->add_option("--t-end", o.t_end, "end time (ms)")->required();
    c->add_option("--output-dt", o.output_dt, "sampling interval of the stored trace");
}

Json base_scenario(const Common& o, const std::string& name) {
    Json model = Json::object();
    if (!o.preset.empty()) model["preset"] = o.preset;
    if (!o.kind.empty()) model["kind"] = o.kind;
    if (o.preset.empty() && o.kind.empty()) model["preset"] = "hh-calcium";
    if (!o.params.empty()) model["params"] = json_arg(o.params, "--params");
    Json j{{"name", name}, {"model", model}};
    if (!o.protocol.empty()) j["protocol"] = json_arg(o.protocol, "--protocol");
    if (o.t_end > 0) j["t_end"] = o.t_end;
    j["integrator"] = {{"output_dt", o.output_dt}};
    return j;
}

int run(const Json& scenario, const Common& o) {
    Scenario s = parse_scenario(scenario);
    RunOptions ro;
    ro.jobs = o.jobs;
    ro.rtol = o.rtol;
    ro.atol = o.atol;
    run_scenario(s, o.out, ro);
    std::ifstream is(fs::path(o.out) / "summary.txt");
    std::cout << is.rdbuf();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hhca: reduced Hodgkin-Huxley with calcium, transcritical hybrid models"};
    app.require_subcommand(1);
    Common o;
    std::function<int()> action;

    auto* sim = app.add_subcommand("simulate", "integrate a model under a stimulus protocol");
    add_model_flags(sim, o);
    add_protocol_flags(sim, o);
    sim->callback([&] {
        action = [&] {
            Json j = base_scenario(o, "simulate");
            j["requests"] = Json::array({{{"type", "simulate"}}});
            return run(j, o);
        };
    });

    double phase_I = 0, phase_z = 0;
    int resolution = 600;
    bool manifolds = false;
    std::vector<double> box;
    auto* ph = app.add_subcommand("phase", "nullclines, fixed points and saddle manifolds");
    add_model_flags(ph, o);
    ph->add_option("--I", phase_I, "extra input current");
    ph->add_option("--z", phase_z, "adaptation slice for the 3-variable hybrid model");
    ph->add_option("--resolution", resolution, "marching-squares grid cells per axis");
    ph->add_option("--box", box, "x_min x_max y_min y_max")->expected(4);
    ph->add_flag("--manifolds", manifolds, "shoot the saddle manifolds");
    ph->callback([&] {
        action = [&] {
            Json j = base_scenario(o, "phase");
            Json r{{"type", "phase"}, {"I", phase_I}, {"z", phase_z}, {"resolution", resolution},
                   {"manifolds", manifolds}};
            if (!box.empty()) r["box"] = box;
            j["requests"] = Json::array({r});
            return run(j, o);
        };
    });

    std::string bif_kind, range = "auto";
    auto* bif = app.add_subcommand("bifurcate", "locate a bifurcation in the applied current");
    add_model_flags(bif, o, false);
    bif->add_option("--kind", bif_kind,
                    "transcritical, hopf, saddle-node, saddle-homoclinic, snlc, hybrid-homoclinic")
        ->required();
    bif->add_option("--range", range, "lo,hi or auto");
    bif->callback([&] {
        action = [&] {
            Json j = base_scenario(o, "bifurcate");
            Json r{{"type", "bifurcate"}, {"kind", bif_kind}};
            if (range != "auto") {
                auto comma = range.find(',');
                if (comma == std::string::npos) throw ValidationError("--range: expected lo,hi or auto");
                try {
                    r["range"] = {std::stod(range.substr(0, comma)), std::stod(range.substr(comma + 1))};
                } catch (const std::logic_error&) {
                    throw ValidationError("--range: expected lo,hi or auto");
                }
            }
            j["requests"] = Json::array({r});
            return run(j, o);
        };
    });

    auto* nf = app.add_subcommand("normalform", "transcritical normal-form transform and residuals");
    add_model_flags(nf, o);
    nf->callback([&] {
        action = [&] {
            Json j = base_scenario(o, "normalform");
            j["requests"] = Json::array({{{"type", "normalform"}}});
            return run(j, o);
        };
    });

    auto* sig = app.add_subcommand("signature", "latency, plateau, ADP and ringing of a step response");
    add_model_flags(sig, o);
    add_protocol_flags(sig, o);
    sig->callback([&] {
        action = [&] {
            Json j = base_scenario(o, "signature");
            j["requests"] = Json::array({{{"type", "simulate"}}, {{"type", "signature"}}});
            return run(j, o);
        };
    });

    std::vector<std::string> pulses;
    double hold = -1.0;
    std::string mode = "pulses";
    auto* rob = app.add_subcommand("robustness", "extra spikes caused by small current pulses");
    add_model_flags(rob, o);
    rob->add_option("--protocol", o.protocol, "stimulus protocol: JSON file or inline object");
    rob->add_option("--t-end", o.t_end, "end time");
    rob->add_option("--pulse", pulses, "time,amplitude,width (repeatable)");
    rob->add_option("--mode", mode, "pulses or matched-fold");
    rob->add_option("--hold", hold, "holding current for matched-fold");
    rob->callback([&] {
        action = [&] {
            Json j = base_scenario(o, "robustness");
            Json r{{"type", "robustness"}, {"mode", mode}};
            if (mode == "matched-fold") {
                r["hold"] = hold;
            } else {
                Json ps = Json::array();
                for (const auto& p : pulses) {
                    double t, a, w;
                    if (std::sscanf(p.c_str(), "%lf,%lf,%lf", &t, &a, &w) != 3)
                        throw ValidationError("--pulse: expected time,amplitude,width");
                    ps.push_back({{"time", t}, {"amplitude", a}, {"width", w}});
                }
                r["pulses"] = ps;
            }
            j["requests"] = Json::array({r});
            return run(j, o);
        };
    });

    std::string scenario_path;
    auto* rs = app.add_subcommand("run-scenario", "execute a scenario JSON file");
    rs->add_option("scenario", scenario_path, "scenario file")->required();
    rs->add_option("--out", o.out, "output directory");
    rs->add_option("--jobs", o.jobs, "parallel sweep points");
    rs->add_option("--rtol", o.rtol, "integrator relative tolerance");
    rs->add_option("--atol", o.atol, "integrator absolute tolerance");
    rs->callback([&] {
        action = [&] {
            Scenario s = load_scenario(scenario_path);
            RunOptions ro{o.jobs, o.rtol, o.atol};
            run_scenario(s, o.out, ro);
            std::ifstream is(fs::path(o.out) / "summary.txt");
            std::cout << is.rdbuf();
            return 0;
        };
    });

    std::string figure, recipes = recipe_dir().string();
    auto* rf = app.add_subcommand("run-figure", "execute a built-in figure recipe");
    rf->add_option("name", figure, "recipe name")->required();
    rf->add_option("--out", o.out, "output directory (default out/<name>)");
    rf->add_option("--jobs", o.jobs, "parallel sweep points");
    rf->add_option("--recipes", recipes, "recipe directory");
    rf->callback([&] {
        action = [&] {
            auto names = recipe_names(recipes);
            if (std::find(names.begin(), names.end(), figure) == names.end())
                throw ValidationError("unknown figure recipe '" + figure + "'");
            Scenario s = load_scenario(fs::path(recipes) / (figure + ".json"));
            fs::path out = o.out == "out" ? fs::path("out") / figure : fs::path(o.out);
            run_scenario(s, out, RunOptions{o.jobs, std::nullopt, std::nullopt});
            std::ifstream is(out / "summary.txt");
            std::cout << is.rdbuf();
            return 0;
        };
    });

    bool list_recipes = false;
    auto* pr = app.add_subcommand("presets", "list model presets and figure recipes");
    pr->add_flag("--recipes", list_recipes, "list figure recipes instead");
    pr->callback([&] {
        action = [&] {
            if (list_recipes) {
                for (const auto& n : recipe_names(recipes)) std::cout << n << "\n";
                return 0;
            }
            Json j = Json::object();
            for (const auto& n : preset_names()) j[n] = to_json(preset(n));
            std::cout << dump(j);
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        return action();
    } catch (const RequestError& e) {
        std::cerr << "request '" << e.request << "' failed: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {  // ValidationError and friends
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
}
