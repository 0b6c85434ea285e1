// Acceptance checks. Usage: hhca_acceptance <1..12> | all
// Prints one PASS/FAIL line per criterion; exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "hhca/bifurcation.hpp"
#include "hhca/normalform.hpp"
#include "hhca/phaseplane.hpp"
#include "hhca/signatures.hpp"
#include "scenario.hpp"

using namespace hhca;
namespace fs = std::filesystem;

namespace {

struct Result {
    bool pass = false;
    std::string detail;
};

std::string num(double x, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

// --- 1: transcritical location ---------------------------------------------------
Result transcritical_location() {
    auto bp = detect_transcritical(hh_calcium());
    double det = bp.diagnostics.count("hessian_det") ? bp.diagnostics.at("hessian_det") : NAN;
    double fvv = bp.diagnostics.count("f_xx") ? bp.diagnostics.at("f_xx") : NAN;
    bool ok = bp.found && bp.value > 2.40 && bp.value < 2.46 && det < 0 && fvv != 0 &&
              bp.hi - bp.lo <= 1e-4;
    return {ok, "I_tc=" + num(bp.value, 9) + " bracket=" + num(bp.hi - bp.lo, 3) + " det=" + num(det) +
                    " f_VV=" + num(fvv) + " (target interval (2.40, 2.46))"};
}

// --- 2: saddle-homoclinic ----------------------------------------------------------
Result saddle_homoclinic() {
    auto tc = detect_transcritical(hh_calcium());
    auto sh = detect_saddle_homoclinic(hh_calcium(), tc.value + 0.01, 3.0);
    bool ok = sh.found && sh.value >= 2.487 && sh.value <= 2.507;
    return {ok, "I_SH=" + num(sh.value, 7) + " bracket=[" + num(sh.lo, 7) + ", " + num(sh.hi, 7) +
                    "] (target [2.487, 2.507])"};
}

// --- 3: orderings --------------------------------------------------------------------
Result orderings() {
    auto tc = detect_transcritical(hh_calcium());
    auto sh = detect_saddle_homoclinic(hh_calcium(), tc.value + 0.01, 3.0);
    auto sn = detect_saddle_node(hh_calcium(), tc.value + 0.01, 40.0);
    auto ah = detect_hopf(hh_classic(), 0.0, 12.0);
    auto snlc = detect_snlc(hh_classic(), 0.0, 12.0);
    bool ok = tc.found && sh.found && sn.found && ah.found && snlc.found && tc.value < sh.value &&
              sh.value < sn.value && snlc.value < ah.value && ah.value > 0 && ah.value < 12;
    return {ok, "calcium: I_tc=" + num(tc.value) + " I_SH=" + num(sh.value) + " I_SN=" + num(sn.value) +
                    "; classic: I_SNLC=" + num(snlc.value) + " I_AH=" + num(ah.value)};
}

// --- 4: census -------------------------------------------------------------------------
std::string kinds(const FixedPointSearch& s) {
    std::string out;
    for (const auto& p : s.points) out += (out.empty() ? "" : ",") + to_string(p.kind) + "@" + num(p.location.x, 5);
    return out;
}

Result census() {
    Box box;
    PlanarField c = reduced_field(hh_classic()), k = reduced_field(hh_calcium());
    auto sc = find_fixed_points(c, extract_nullclines(c, box));
    auto sk = find_fixed_points(k, extract_nullclines(k, box));
    bool ok_c = sc.points.size() == 1 && sc.points[0].kind == FixedPointKind::stable_focus;
    bool ok_k = sk.points.size() == 3 && sk.points[0].kind == FixedPointKind::stable_node &&
                sk.points[1].kind == FixedPointKind::saddle &&
                sk.points[2].kind == FixedPointKind::unstable_focus;
    return {ok_c && ok_k, "classic [" + kinds(sc) + "] calcium [" + kinds(sk) + "]"};
}

// --- 5: ionic current profile ------------------------------------------------------------
Result ionic_monotonicity() {
    const double V = 0.0;
    std::vector<double> grid(200);
    for (int i = 0; i < 200; ++i) grid[i] = i / 199.0;
    auto pc = ionic_current_profile(V, grid, hh_classic());
    auto pk = ionic_current_profile(V, grid, hh_calcium());
    bool inc = true;
    for (int i = 1; i < 200; ++i) inc = inc && pc[i] > pc[i - 1];
    // non-monotone, with a descending run followed later by an ascending one
    int changes = 0, last = 0;
    bool fell = false, rose_after = false;
    for (int i = 1; i < 200; ++i) {
        int s = pk[i] > pk[i - 1] ? 1 : (pk[i] < pk[i - 1] ? -1 : 0);
        if (!s) continue;
        if (s < 0) fell = true;
        if (s > 0 && fell) rose_after = true;
        if (last && s != last) ++changes;
        last = s;
    }
    bool valley = changes >= 1 && rose_after;
    auto argmin = std::min_element(pk.begin(), pk.end()) - pk.begin();
    return {inc && valley, "V=0: classic increasing=" + std::string(inc ? "yes" : "no") +
                               ", calcium derivative sign changes=" + std::to_string(changes) +
                               ", descent then ascent=" + (rose_after ? "yes" : "no") + ", minimum at n=" +
                               num(grid[argmin], 3)};
}

// --- 6: triple signature -------------------------------------------------------------------
SignatureReport step_signature(const std::string& preset_name) {
    ModelSpec m = preset(preset_name);
    m.kind = ModelKind::full;
    StimulusProtocol p;
    p.step = StepInput{12.0, 100.0, 400.0};
    IntegratorOptions o;
    o.output_dt = 0.05;
    Trajectory tr = simulate(m, resting_state(m, 0.0), 0.0, 500.0, p, o);
    return analyze(tr, p, SignatureThresholds::hh());
}

Result triple_signature() {
    auto c = step_signature("hh-classic"), k = step_signature("hh-calcium");
    bool ok = c.latency && k.latency && *k.latency > *c.latency && k.plateau.present &&
              !c.plateau.present && k.adp.present && !c.adp.present && c.subthreshold_oscillations;
    auto b = [](bool x) { return std::string(x ? "true" : "false"); };
    return {ok, "latency classic " + (c.latency ? num(*c.latency) : "none") + " calcium " +
                    (k.latency ? num(*k.latency) : "none") + "; plateau " + b(c.plateau.present) + "/" +
                    b(k.plateau.present) + "; adp " + b(c.adp.present) + "/" + b(k.adp.present) +
                    "; classic oscillations " + b(c.subthreshold_oscillations)};
}

// --- 7: TC firing-mode switch ------------------------------------------------------------------
SignatureReport tc_run(double w0) {
    ModelSpec m = preset("tc-high-ca");
    m.hybrid.w0 = w0;
    StimulusProtocol p;
    p.baseline = -5.0;
    p.step = StepInput{90.0, 100.0, 300.0};
    IntegratorOptions o;
    o.output_dt = 0.01;
    Trajectory tr = simulate(m, resting_state(m, -5.0), 0.0, 400.0, p, o);
    return analyze(tr, p, SignatureThresholds::hybrid(m.hybrid.v_th));
}

std::vector<double> in_step(const std::vector<double>& s) {
    std::vector<double> out;
    for (double t : s)
        if (t >= 100 && t < 300) out.push_back(t);
    return out;
}

Result firing_switch() {
    auto lo = tc_run(3.2), hi = tc_run(-4.0);
    auto sl = in_step(lo.spike_times), sh = in_step(hi.spike_times);
    double cv = isi_cv(sl, 10);
    std::size_t burst = first_burst_size(sh, 3.0);
    bool tonic = sl.size() >= 11 && cv < 0.05 && !lo.plateau.present;
    bool bursting = burst >= 2 && hi.plateau.present && hi.adp.present;
    bool later = lo.latency && hi.latency && *hi.latency > *lo.latency;
    return {tonic && bursting && later,
            "w0=3.2: " + std::to_string(sl.size()) + " spikes, CV " + num(cv, 3) + ", plateau " +
                (lo.plateau.present ? "true" : "false") + "; w0=-4: burst of " + std::to_string(burst) +
                ", plateau " + (hi.plateau.present ? "true" : "false") + ", adp " +
                (hi.adp.present ? "true" : "false") + "; latency " + (lo.latency ? num(*lo.latency) : "none") +
                " vs " + (hi.latency ? num(*hi.latency) : "none")};
}

// --- 8: normal-form residuals --------------------------------------------------------------------
Result normal_form_residuals() {
    auto xf = compute_transform(hh_calcium(), detect_transcritical(hh_calcium()));
    auto r = residual_report(hh_calcium(), xf, {0.2, 0.1, 0.05});
    bool ok = r.slope >= 2.7 && std::isfinite(r.w_constant);
    return {ok, "slope " + num(r.slope, 4) + ", C " + num(r.w_constant, 4) + ", eps~ " + num(xf.eps_tilde, 4)};
}

// --- 9: hybrid homoclinic reset invariance ---------------------------------------------------------
Result reset_invariance() {
    // resets on the left upper branch (w > 0, left of the repelling branch)
    const Point2 resets[] = {{0, 5}, {-2, 3}, {0, 10}, {5, 8}, {-5, 6}};
    double lo = INFINITY, hi = -INFINITY;
    std::string vals;
    bool all = true;
    for (const auto& r : resets) {
        HybridParams hp;
        hp.a = 0.1;
        hp.eps = 0.1;
        hp.w0 = -4.0;
        hp.c_reset = r.x;
        hp.d_reset = r.y;
        auto bp = detect_hybrid_homoclinic(hp, -2.0, 2.0);
        all = all && bp.found;
        lo = std::min(lo, bp.value);
        hi = std::max(hi, bp.value);
        vals += (vals.empty() ? "" : " ") + num(bp.value, 7);
    }
    return {all && hi - lo < 1e-3, "I_c = " + vals + ", spread " + num(hi - lo, 3)};
}

// --- 10: calcium sweep census -----------------------------------------------------------------------
Result calcium_sweep() {
    const std::pair<double, double> pts[] = {{0, 0}, {1, -0.74}, {1.5, -2.78}, {3, -15.6}};
    std::string d;
    std::vector<FixedPointSearch> res;
    for (auto [g, ip] : pts) {
        ModelParams p = hh_calcium();
        p.g_Ca = g;
        p.I_pump = ip;
        PlanarField f = reduced_field(p);
        res.push_back(find_fixed_points(f, extract_nullclines(f, Box{})));
        d += (d.empty() ? "" : "; ") + ("g_Ca=" + num(g, 3) + ": " + std::to_string(res.back().points.size()));
    }
    const auto& last = res.back().points;
    bool stable_low = false;
    if (last.size() >= 3) {
        const auto& p0 = last.front();
        stable_low = p0.kind == FixedPointKind::stable_node || p0.kind == FixedPointKind::stable_focus;
        for (std::size_t i = 1; i < last.size(); ++i)
            stable_low = stable_low && last[i].kind != FixedPointKind::stable_node &&
                         last[i].kind != FixedPointKind::stable_focus;
    }
    return {res.front().points.size() == 1 && last.size() >= 3 && stable_low, d};
}

// --- 11: numerics hygiene ------------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Result hygiene() {
    std::vector<std::string> bad;

    // tolerance halving on a harmonic oscillator
    VectorField osc{2, [](double, const double* x, double, double* dx) {
                        dx[0] = x[1];
                        dx[1] = -x[0];
                    }};
    double prev = INFINITY;
    for (double tol = 1e-5; tol >= 1e-10 / 1.5; tol /= 2) {
        IntegratorOptions o;
        o.rtol = tol;
        o.atol = tol * 1e-2;
        double err = std::fabs(integrate(osc, {1.0, 0.0}, 0, 20, {}, o).back()[0] - std::cos(20.0));
        if (!(err < 100 * tol) || !(err < 1.5 * prev)) bad.push_back("self-convergence at tol " + num(tol));
        prev = err;
    }

    // FD vs analytic jacobian
    PlanarField f = reduced_field(hh_calcium());
    std::mt19937 rng(20261015);
    std::uniform_real_distribution<double> V(-60, 120), n(0, 1);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        Point2 x{V(rng), n(rng)};
        Mat2 a = f.jac(x.x, x.y), d = jacobian(f, x);
        double scale = 0;
        for (double v : a) scale = std::max(scale, std::fabs(v));
        for (int k = 0; k < 4; ++k)
            worst = std::max(worst, std::fabs(a[k] - d[k]) / std::max(std::fabs(a[k]), 1e-3 * scale));
    }
    if (worst > 1e-5) bad.push_back("jacobian rel err " + num(worst, 3));

    // forward invariance of [0,1] for the gates
    for (int i = 0; i < 200; ++i) {
        double v = -100 + 1.3 * i;
        FullState lo = full_rhs({v, 0, 0, 0}, hh_calcium()), hi = full_rhs({v, 1, 1, 1}, hh_calcium());
        if (lo.n < 0 || lo.m < 0 || lo.h < 0 || hi.n > 0 || hi.m > 0 || hi.h > 0) {
            bad.push_back("gate invariance at V=" + num(v));
            break;
        }
    }

    // marching squares against v^2 - w^2 + I = 0
    const double I = 1.0;
    const Box box{-3, 3, -3, 3};
    const int res = 120;
    auto lines = contour_zero([&](double v, double w) { return v * v - w * w + I; }, box, res);
    const double diag = std::hypot(box.width() / res, box.height() / res);
    double h1 = 0;
    for (const auto& pl : lines)
        for (const auto& p : pl) {
            // nearest point on the hyperbola along v = +-sqrt(w^2 - I), dense sample
            double best = INFINITY;
            for (int k = 0; k <= 6000; ++k) {
                double w = -3 + 6.0 * k / 6000, r = w * w - I;
                if (r < 0) continue;
                double vv = std::sqrt(r);
                best = std::min({best, std::hypot(p.x - vv, p.y - w), std::hypot(p.x + vv, p.y - w)});
            }
            h1 = std::max(h1, best);
        }
    double h2 = 0;
    for (int k = 0; k <= 600; ++k) {
        double w = -3 + 6.0 * k / 600, r = w * w - I;
        if (r < 0 || std::sqrt(r) > 3) continue;
        for (double s : {-1.0, 1.0}) {
            double best = INFINITY;
            for (const auto& pl : lines)
                for (const auto& p : pl) best = std::min(best, std::hypot(p.x - s * std::sqrt(r), p.y - w));
            h2 = std::max(h2, best);
        }
    }
    double haus = std::max(h1, h2);
    if (!(haus < 2 * diag)) bad.push_back("hausdorff " + num(haus, 3));

    // every figure recipe twice, manifests compared byte for byte
    fs::path tmp = fs::temp_directory_path() / "hhca_acceptance_rerun";
    int recipes = 0;
    for (const auto& name : cli::recipe_names()) {
        cli::Scenario s = cli::load_scenario(cli::recipe_dir() / (name + ".json"));
        fs::remove_all(tmp);
        cli::run_scenario(s, tmp / "a");
        cli::run_scenario(s, tmp / "b", cli::RunOptions{4, {}, {}});
        if (slurp(tmp / "a" / "manifest.json") != slurp(tmp / "b" / "manifest.json"))
            bad.push_back("rerun differs: " + name);
        ++recipes;
    }
    fs::remove_all(tmp);

    std::string d = "jacobian rel err " + num(worst, 3) + ", hausdorff " + num(haus, 3) + " (limit " +
                    num(2 * diag, 3) + "), " + std::to_string(recipes) + " recipes rerun";
    for (const auto& b : bad) d += "; FAILED " + b;
    return {bad.empty() && recipes > 0, d};
}

// --- 12: transcritical vs fold robustness ----------------------------------------------------------------
Result robustness() {
    HybridParams hp;
    hp.a = 0.1;
    hp.eps = 0.1;
    hp.w0 = -4.0;
    hp.c_reset = 0.0;
    hp.d_reset = 5.0;
    RobustnessSetup tc = transcritical_setup(hp, -1.0);
    RobustnessSetup fold = matched_fold_setup(tc);
    PulseThreshold a = setup_threshold(tc, 0.5, 50.0), b = setup_threshold(fold, 0.5, 50.0);
    bool ok = a.found && b.found && b.amplitude < a.amplitude;
    return {ok, "pulse threshold transcritical " + (a.found ? num(a.amplitude, 5) : "none") + ", fold " +
                    (b.found ? num(b.amplitude, 5) : "none") + " (fold reset w " +
                    num(fold.model.hybrid.d_reset, 4) + ")"};
}

struct Criterion {
    const char* title;
    std::function<Result()> run;
};

const Criterion criteria[] = {
    {"transcritical location", transcritical_location},
    {"saddle-homoclinic current", saddle_homoclinic},
    {"bifurcation orderings", orderings},
    {"fixed-point census", census},
    {"ionic-current monotonicity", ionic_monotonicity},
    {"triple-signature contrast", triple_signature},
    {"TC firing-mode switch", firing_switch},
    {"normal-form residual order", normal_form_residuals},
    {"hybrid homoclinic reset invariance", reset_invariance},
    {"calcium sweep census", calcium_sweep},
    {"numerics hygiene", hygiene},
    {"transcritical vs fold robustness", robustness},
};

bool run_one(int id) {
    const auto& c = criteria[id - 1];
    auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
        r = c.run();
    } catch (const std::exception& e) {
        r = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %s: %s (%.2f s)\n", r.pass ? "PASS" : "FAIL", id, c.title, r.detail.c_str(), secs);
    std::fflush(stdout);
    return r.pass;
}

}  // namespace

int main(int argc, char** argv) {
    const int n = static_cast<int>(std::size(criteria));
    std::string arg = argc > 1 ? argv[1] : "all";
    if (arg == "all") {
        int failed = 0;
        for (int i = 1; i <= n; ++i) failed += !run_one(i);
        return failed ? 1 : 0;
    }
    int id = std::atoi(arg.c_str());
    if (id < 1 || id > n) {
        std::fprintf(stderr, "usage: %s <1..%d | all>\n", argv[0], n);
        return 2;
    }
    return run_one(id) ? 0 : 1;
}
