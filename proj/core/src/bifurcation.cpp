#include "hhca/bifurcation.hpp"
#include "hhca/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hhca {

std::string to_string(BifurcationKind k) {
    switch (k) {
        case BifurcationKind::transcritical: return "transcritical";
        case BifurcationKind::hopf: return "hopf";
        case BifurcationKind::saddle_node: return "saddle-node";
        case BifurcationKind::saddle_homoclinic: return "saddle-homoclinic";
        case BifurcationKind::snlc: return "snlc";
        case BifurcationKind::hybrid_homoclinic: return "hybrid-homoclinic";
    }
    return "transcritical";
}

BifurcationKind bifurcation_kind_from_string(const std::string& s) {
    for (BifurcationKind k :
         {BifurcationKind::transcritical, BifurcationKind::hopf, BifurcationKind::saddle_node,
          BifurcationKind::saddle_homoclinic, BifurcationKind::snlc,
          BifurcationKind::hybrid_homoclinic})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown bifurcation kind '" + s + "'");
}

bool BifurcationPoint::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

FieldFamily reduced_family(const ModelParams& p) {
    return [p](double I) {
        ModelParams q = p;
        q.I_app = I;
        return reduced_field(q);
    };
}

namespace {

constexpr int kMaxBisect = 60;

}  // namespace

// ---------------------------------------------------------------- transcritical

TranscriticalProblem transcritical_problem(const ModelParams& p) {
    p.validate();
    TranscriticalProblem tp;
    ModelParams q = p;
    q.I_app = 0.0;
    tp.f = [q](double V, double n) { return reduced_rhs({V, n}, q).V; };
    tp.grad = [q](double V, double n) {
        auto J = reduced_jacobian({V, n}, q);
        return std::array<double, 2>{J[0], J[1]};
    };
    tp.dfdI = 1.0 / p.C;
    tp.physiological = Box{p.V_K, p.V_Na, 0.0, 1.0};
    return tp;
}

TranscriticalProblem normal_form_problem() {
    TranscriticalProblem tp;
    tp.f = [](double v, double w) { return v * v - w * w; };
    tp.grad = [](double v, double w) { return std::array<double, 2>{2 * v, -2 * w}; };
    tp.dfdI = 1.0;
    tp.search = Box{-1.0, 1.0, -1.0, 1.0};
    tp.physiological = Box{-1.0, 1.0, -1.0, 1.0};
    return tp;
}

BifurcationPoint detect_transcritical(const TranscriticalProblem& prob) {
    auto grad = [&](double x, double y) -> std::array<double, 2> {
        if (prob.grad) return prob.grad(x, y);
        double hx = 1e-6 * (1 + std::fabs(x)), hy = 1e-6 * (1 + std::fabs(y));
        return {(prob.f(x + hx, y) - prob.f(x - hx, y)) / (2 * hx),
                (prob.f(x, y + hy) - prob.f(x, y - hy)) / (2 * hy)};
    };
    // Hessian as central differences of the gradient
    auto hess = [&](double x, double y) -> Mat2 {
        double hx = 1e-5 * (1 + std::fabs(x)), hy = 1e-5 * (1 + std::fabs(y));
        auto gxp = grad(x + hx, y), gxm = grad(x - hx, y);
        auto gyp = grad(x, y + hy), gym = grad(x, y - hy);
        double fxx = (gxp[0] - gxm[0]) / (2 * hx), fyy = (gyp[1] - gym[1]) / (2 * hy);
        double fxy = 0.5 * ((gxp[1] - gxm[1]) / (2 * hx) + (gyp[0] - gym[0]) / (2 * hy));
        return {fxx, fxy, fxy, fyy};
    };
    PlanarField gf;
    gf.f = grad;
    gf.jac = hess;

    struct Root {
        Point2 x;
        Mat2 H;
        double res;
    };
    std::vector<Root> roots;
    const Box& S = prob.search;
    const int K = prob.seeds_per_axis;
    NewtonOptions nopt;
    nopt.tol = 1e-10;
    nopt.max_iter = 60;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            Point2 s{S.x_min + S.width() * (i + 0.5) / K, S.y_min + S.height() * (j + 0.5) / K};
            auto r = newton_solve(gf, s, nopt);
            if (!r) continue;
            bool dup = false;
            for (const auto& q : roots)
                if (std::hypot(q.x.x - r->x, q.x.y - r->y) < 1e-6) { dup = true; break; }
            if (dup) continue;
            auto g = grad(r->x, r->y);
            roots.push_back({*r, hess(r->x, r->y), std::max(std::fabs(g[0]), std::fabs(g[1]))});
        }
    if (roots.empty())
        throw BifurcationError("transcritical: no critical point of the fast nullcline function found");

    auto transversal = [](const Root& r) {
        double det = r.H[0] * r.H[3] - r.H[1] * r.H[2];
        return det < 0 && std::fabs(r.H[0]) > 1e-12;
    };
    const Box& P = prob.physiological;
    const Root* best = nullptr;
    for (const auto& r : roots)
        if (transversal(r) && P.contains(r.x)) {
            best = &r;
            break;
        }
    bool physiological = best != nullptr;
    if (!best) {
        double bestd = std::numeric_limits<double>::infinity();
        for (const auto& r : roots) {
            if (!transversal(r)) continue;
            Point2 q = P.normalize(r.x);
            double dx = std::max({0.0, -q.x, q.x - 1}), dy = std::max({0.0, -q.y, q.y - 1});
            double d = std::hypot(dx, dy);
            if (d < bestd) {
                bestd = d;
                best = &r;
            }
        }
    }
    if (!best) {
        const Root& r = roots.front();
        double det = r.H[0] * r.H[3] - r.H[1] * r.H[2];
        if (!(det < 0))
            throw BifurcationError("transcritical: Hessian determinant is not negative (self-intersection not transversal)");
        throw BifurcationError("transcritical: second V-derivative vanishes (degenerate intersection)");
    }
    BifurcationPoint bp;
    bp.kind = BifurcationKind::transcritical;
    double f0 = prob.f(best->x.x, best->x.y);
    bp.value = -f0 / prob.dfdI;
    // f_V at the singular point changes sign across the value
    const double half = 5e-7;
    bp.lo = bp.value - half;
    bp.hi = bp.value + half;
    bp.location = {best->x.x, best->x.y};
    double det = best->H[0] * best->H[3] - best->H[1] * best->H[2];
    bp.diagnostics["hessian_det"] = det;
    bp.diagnostics["f_xx"] = best->H[0];
    bp.diagnostics["f_xy"] = best->H[1];
    bp.diagnostics["f_yy"] = best->H[3];
    bp.diagnostics["gradient_residual"] = best->res;
    bp.diagnostics["physiological"] = physiological ? 1.0 : 0.0;
    bp.diagnostics["critical_points_found"] = static_cast<double>(roots.size());
    if (!physiological) {
        bp.flags.push_back("nonphysiological");
        bp.note = "transversal self-intersection lies outside the physiological box";
    }
    return bp;
}

BifurcationPoint detect_transcritical(const ModelParams& p) {
    return detect_transcritical(transcritical_problem(p));
}

// ---------------------------------------------------------------- branches

namespace {

std::vector<Point2> reduced_equilibria(const ModelParams& p, double I) {
    ModelParams q = p;
    q.I_app = I;
    std::vector<Point2> out;
    for (double V : equilibrium_voltages(q, true)) out.push_back({V, n_inf(V)});
    return out;
}

struct Tracked {
    double I;
    Point2 x;
};

// continuation step with adaptive halving; returns false if the branch is lost
bool advance(const FieldFamily& fam, Tracked& cur, double I_next) {
    double I = cur.I;
    Point2 x = cur.x;
    double step = I_next - I;
    int halvings = 0;
    while (I != I_next) {
        double In = std::fabs(I_next - I) <= std::fabs(step) ? I_next : I + step;
        auto r = newton_solve(fam(In), x);
        if (r && std::hypot(r->x - x.x, r->y - x.y) < 1e3 * (std::fabs(step) + 1e-12) + 1.0) {
            x = *r;
            I = In;
        } else {
            if (++halvings > 12) return false;
            step *= 0.5;
        }
    }
    cur = {I, x};
    return true;
}

}  // namespace

BifurcationPoint detect_hopf(const FieldFamily& family, Point2 guess, double lo, double hi,
                             double tol) {
    if (!(hi > lo)) throw ValidationError("detect_hopf: empty range");
    auto x0 = newton_solve(family(lo), guess);
    if (!x0) throw BifurcationError("detect_hopf: no equilibrium near the guess at range start");
    auto monitor = [&](double I, const Point2& x, double& det) {
        Mat2 J = make_fixed_point(family(I), x).jacobian;
        det = J[0] * J[3] - J[1] * J[2];
        return J[0] + J[3];
    };
    Tracked cur{lo, *x0};
    double det0;
    double tr0 = monitor(lo, cur.x, det0);
    const double dI = (hi - lo) / 200.0;
    BifurcationPoint bp;
    bp.kind = BifurcationKind::hopf;
    for (int k = 1; k <= 200; ++k) {
        double In = k == 200 ? hi : lo + k * dI;
        Tracked nxt = cur;
        if (!advance(family, nxt, In))
            throw BifurcationError("detect_hopf: equilibrium branch lost during continuation");
        double det1;
        double tr1 = monitor(In, nxt.x, det1);
        if ((tr0 < 0) != (tr1 < 0) && det0 > 0 && det1 > 0) {
            Tracked a = cur, b = nxt;
            double tra = tr0;
            for (int it = 0; it < kMaxBisect && b.I - a.I > tol; ++it) {
                Tracked m = a;
                if (!advance(family, m, 0.5 * (a.I + b.I)))
                    throw BifurcationError("detect_hopf: branch lost during bisection");
                double dm;
                double trm = monitor(m.I, m.x, dm);
                if ((trm < 0) == (tra < 0)) { a = m; tra = trm; } else b = m;
            }
            bp.lo = a.I;
            bp.hi = b.I;
            bp.value = 0.5 * (a.I + b.I);
            bp.location = {b.x.x, b.x.y};
            double db;
            bp.diagnostics["trace_lo"] = tra;
            bp.diagnostics["trace_hi"] = monitor(b.I, b.x, db);
            bp.diagnostics["det_hi"] = db;
            bp.diagnostics["frequency"] = std::sqrt(std::max(0.0, db));
            bp.note = "criticality not computed";
            return bp;
        }
        cur = nxt;
        tr0 = tr1;
        det0 = det1;
    }
    bp.found = false;
    bp.lo = lo;
    bp.hi = hi;
    bp.value = std::numeric_limits<double>::quiet_NaN();
    bp.note = "no change of stability along the branch in range";
    return bp;
}

BifurcationPoint detect_hopf(const ModelParams& p, double lo, double hi, EquilibriumBranch branch,
                             double tol) {
    auto eq = reduced_equilibria(p, lo);
    if (eq.empty()) throw BifurcationError("detect_hopf: no equilibrium at range start");
    Point2 g = branch == EquilibriumBranch::lowest ? eq.front() : eq.back();
    return detect_hopf(reduced_family(p), g, lo, hi, tol);
}

BifurcationPoint detect_saddle_node(const FieldFamily& family, Point2 node, Point2 saddle,
                                    double lo, double hi, double tol) {
    if (!(hi > lo)) throw ValidationError("detect_saddle_node: empty range");
    struct Pair {
        double I;
        Point2 a, b;
    };
    auto solve_pair = [&](const Pair& from, double I, Pair& out) {
        Tracked ta{from.I, from.a}, tb{from.I, from.b};
        if (!advance(family, ta, I) || !advance(family, tb, I)) return false;
        out = {I, ta.x, tb.x};
        return std::hypot(ta.x.x - tb.x.x, ta.x.y - tb.x.y) > 1e-5;
    };
    auto a0 = newton_solve(family(lo), node), b0 = newton_solve(family(lo), saddle);
    if (!a0 || !b0 || std::hypot(a0->x - b0->x, a0->y - b0->y) <= 1e-5)
        throw BifurcationError("detect_saddle_node: node/saddle pair absent at range start");
    Pair cur{lo, *a0, *b0};
    const double dI = (hi - lo) / 200.0;
    BifurcationPoint bp;
    bp.kind = BifurcationKind::saddle_node;
    for (int k = 1; k <= 200; ++k) {
        double In = k == 200 ? hi : lo + k * dI;
        Pair nxt;
        if (solve_pair(cur, In, nxt)) {
            cur = nxt;
            continue;
        }
        double a = cur.I, b = In;
        for (int it = 0; it < kMaxBisect && b - a > tol; ++it) {
            double m = 0.5 * (a + b);
            Pair pm;
            if (solve_pair(cur, m, pm)) {
                cur = pm;
                a = m;
            } else {
                b = m;
            }
        }
        bp.lo = a;
        bp.hi = b;
        bp.value = 0.5 * (a + b);
        Point2 mid{0.5 * (cur.a.x + cur.b.x), 0.5 * (cur.a.y + cur.b.y)};
        auto r = newton_solve(family(bp.value), mid);
        Point2 at = r ? *r : mid;
        FixedPoint fp = make_fixed_point(family(bp.value), at);
        bp.location = {at.x, at.y};
        bp.diagnostics["det_at_merge"] = fp.jacobian[0] * fp.jacobian[3] - fp.jacobian[1] * fp.jacobian[2];
        bp.diagnostics["pair_separation_lo"] = std::hypot(cur.a.x - cur.b.x, cur.a.y - cur.b.y);
        return bp;
    }
    bp.found = false;
    bp.lo = lo;
    bp.hi = hi;
    bp.value = std::numeric_limits<double>::quiet_NaN();
    bp.note = "node/saddle pair persists over the whole range";
    return bp;
}

BifurcationPoint detect_saddle_node(const ModelParams& p, double lo, double hi, double tol) {
    auto eq = reduced_equilibria(p, lo);
    if (eq.size() < 2) throw BifurcationError("detect_saddle_node: node/saddle pair absent at range start");
    return detect_saddle_node(reduced_family(p), eq[0], eq[1], lo, hi, tol);
}

// ---------------------------------------------------------------- saddle-homoclinic

FixedPoint reduced_saddle(const ModelParams& p, double I) {
    ModelParams q = p;
    q.I_app = I;
    PlanarField f = reduced_field(q);
    for (const auto& e : reduced_equilibria(p, I)) {
        auto r = newton_solve(f, e);
        Point2 x = r ? *r : e;
        FixedPoint fp = make_fixed_point(f, x);
        if (fp.kind == FixedPointKind::saddle) return fp;
    }
    throw BifurcationError("no saddle at I_app = " + std::to_string(I));
}

namespace {

struct FlowState {
    OdeStepper st;
    FlowState(const PlanarField& field, double tsign, const IntegratorOptions& o, Point2 x0)
        : st(make(field, tsign), o) {
        double x[2] = {x0.x, x0.y};
        st.reset(0.0, x, 0.0);
    }
    static VectorField make(const PlanarField& field, double tsign) {
        VectorField vf;
        vf.dim = 2;
        vf.eval = [field, tsign](double, const double* x, double, double* dx) {
            auto f = field.f(x[0], x[1]);
            dx[0] = tsign * f[0];
            dx[1] = tsign * f[1];
        };
        return vf;
    }
    // time in (t_prev, t] where n crosses level, by bisection on dense output
    double locate(double level) const {
        double lo = st.t_prev(), hi = st.t();
        double glo = st.dense_component(lo, 1) - level;
        for (int it = 0; it < 200 && hi - lo > 0; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            double gm = st.dense_component(mid, 1) - level;
            if ((gm < 0) == (glo < 0)) { lo = mid; glo = gm; } else hi = mid;
        }
        return hi;
    }
};

}  // namespace

MissDistance homoclinic_miss_distance(const ModelParams& p, double I,
                                      const MissDistanceOptions& opts) {
    ModelParams q = p;
    q.I_app = I;
    PlanarField field = reduced_field(q);
    MissDistance md;
    md.saddle = reduced_saddle(p, I);
    const Point2 s = md.saddle.location;
    const Box& box = opts.box;
    const double n_ref = s.y + opts.dn;
    md.n_section = n_ref;
    const double W = box.width(), H = box.height();

    // stable branch heading up in n, traced in reverse time
    Point2 ds = saddle_direction(md.saddle, true, box);
    if (ds.y < 0) ds = {-ds.x, -ds.y};
    {
        FlowState fs(field, -1.0, opts.integrator, {s.x + opts.delta * ds.x * W, s.y + opts.delta * ds.y * H});
        bool found = false;
        while (fs.st.step(opts.t_max)) {
            Point2 x{fs.st.x()[0], fs.st.x()[1]};
            if (!box.contains(x)) break;
            if (fs.st.x_prev()[1] < n_ref && x.y >= n_ref) {
                double tc = fs.locate(n_ref);
                md.V_s = fs.st.dense_component(tc, 0);
                found = true;
                break;
            }
        }
        if (!found) throw BifurcationError("miss distance: stable manifold does not reach the section");
        if (std::fabs(md.V_s - s.x) > opts.window)
            throw BifurcationError("miss distance: stable manifold crosses the section outside the window");
    }

    // unstable branch heading to larger V (the spike excursion)
    Point2 du = saddle_direction(md.saddle, false, box);
    if (du.x < 0) du = {-du.x, -du.y};
    FlowState fu(field, 1.0, opts.integrator, {s.x + opts.delta * du.x * W, s.y + opts.delta * du.y * H});
    const double V_exc = s.x + opts.excursion;
    int excursions = 0;
    bool above = false;
    while (true) {
        if (!fu.st.step(opts.t_max))
            throw BifurcationError("miss distance: unstable manifold did not return within t_max");
        Point2 x{fu.st.x()[0], fu.st.x()[1]};
        if (!box.contains(x))
            throw BifurcationError("miss distance: unstable manifold left the box without returning");
        if (!above && x.x > V_exc) {
            above = true;
            if (++excursions >= 2) {
                md.value = std::numeric_limits<double>::infinity();
                md.V_u = std::numeric_limits<double>::infinity();
                md.crossed = false;
                return md;
            }
        } else if (above && x.x < V_exc) {
            above = false;
        }
        if (excursions >= 1 && fu.st.x_prev()[1] > n_ref && x.y <= n_ref) {
            double tc = fu.locate(n_ref);
            double V = fu.st.dense_component(tc, 0);
            if (std::fabs(V - s.x) <= opts.window) {
                md.V_u = V;
                md.value = md.V_u - md.V_s;
                md.crossed = true;
                return md;
            }
        }
        if (excursions >= 1 && std::hypot(fu.st.dx()[0] / W, fu.st.dx()[1] / H) < 1e-12)
            throw BifurcationError("miss distance: unstable manifold settled without crossing the section");
    }
}

BifurcationPoint detect_saddle_homoclinic(const ModelParams& p, double lo, double hi, double tol,
                                          const MissDistanceOptions& opts) {
    if (!(hi > lo)) throw ValidationError("detect_saddle_homoclinic: empty range");
    MissDistance mlo = homoclinic_miss_distance(p, lo, opts);
    MissDistance mhi = homoclinic_miss_distance(p, hi, opts);
    BifurcationPoint bp;
    bp.kind = BifurcationKind::saddle_homoclinic;
    bp.diagnostics["section_offset"] = opts.dn;
    if ((mlo.value < 0) == (mhi.value < 0)) {
        bp.found = false;
        bp.lo = lo;
        bp.hi = hi;
        bp.value = std::numeric_limits<double>::quiet_NaN();
        bp.diagnostics["miss_lo"] = mlo.value;
        bp.diagnostics["miss_hi"] = mhi.value;
        bp.note = "miss distance has the same sign at both ends";
        return bp;
    }
    bool lo_neg = mlo.value < 0;
    double a = lo, b = hi;
    for (int it = 0; it < kMaxBisect && b - a > tol; ++it) {
        double m = 0.5 * (a + b);
        MissDistance mm = homoclinic_miss_distance(p, m, opts);
        if ((mm.value < 0) == lo_neg) { a = m; mlo = mm; } else { b = m; mhi = mm; }
    }
    bp.lo = a;
    bp.hi = b;
    bp.value = 0.5 * (a + b);
    bp.location = {mhi.saddle.location.x, mhi.saddle.location.y};
    bp.diagnostics["miss_lo"] = mlo.value;
    bp.diagnostics["miss_hi"] = mhi.value;
    return bp;
}

// ---------------------------------------------------------------- SNLC

std::vector<double> spiking_initial_state(const ModelParams& p, double I) {
    ModelParams q = p;
    q.I_app = I;
    auto Vs = equilibrium_voltages(q, true);
    double n0 = Vs.empty() ? 0.4 : n_inf(Vs.front());
    return {60.0, n0};
}

SpikingCheck sustained_spiking(const ModelParams& p, double I, const std::vector<double>& s0,
                               const SnlcOptions& opts) {
    ModelSpec m;
    m.kind = ModelKind::reduced;
    m.hh = p;
    m.hh.I_app = I;
    VectorField f = make_field(m);
    StimulusProtocol none;
    Trajectory tr = integrate(f, s0, 0.0, opts.transient + opts.window, none, opts.integrator);
    SpikingCheck out;
    for (std::size_t i = 1; i < tr.size(); ++i) {
        if (tr.times[i] <= opts.transient) continue;
        if (tr.at(i - 1, 0) < opts.spike_level && tr.at(i, 0) >= opts.spike_level) ++out.spikes;
    }
    out.spiking = out.spikes >= opts.min_spikes;
    out.end_state = tr.back();
    return out;
}

BifurcationPoint detect_snlc(const ModelParams& p, double lo, double hi, double tol,
                             const SnlcOptions& opts) {
    if (!(hi > lo)) throw ValidationError("detect_snlc: empty range");
    SpikingCheck top = sustained_spiking(p, hi, spiking_initial_state(p, hi), opts);
    if (!top.spiking) throw BifurcationError("detect_snlc: no sustained spiking at range top");
    BifurcationPoint bp;
    bp.kind = BifurcationKind::snlc;
    bp.diagnostics["tolerance"] = tol;
    SpikingCheck bottom = sustained_spiking(p, lo, top.end_state, opts);
    if (bottom.spiking) {
        bp.found = false;
        bp.lo = lo;
        bp.hi = hi;
        bp.value = std::numeric_limits<double>::quiet_NaN();
        bp.note = "spiking persists at range bottom";
        return bp;
    }
    double a = lo, b = hi;
    std::vector<double> state = top.end_state;
    for (int it = 0; it < kMaxBisect && b - a > tol; ++it) {
        double m = 0.5 * (a + b);
        SpikingCheck c = sustained_spiking(p, m, state, opts);
        if (c.spiking) {
            b = m;
            state = c.end_state;
        } else {
            a = m;
        }
    }
    bp.lo = a;
    bp.hi = b;
    bp.value = 0.5 * (a + b);
    bp.location = state;
    bp.note = "simulation-based: hysteresis sweep from the spiking side";
    return bp;
}

// ---------------------------------------------------------------- hybrid homoclinic

ResetOutcome classify_reset_outcome(const HybridParams& hp, double I, Point2 reset_point,
                                    double t_budget) {
    HybridParams q = hp;
    q.I = I;
    const HybridEquilibrium* rest = nullptr;
    auto eqs = hybrid_equilibria(q, HybridFamily::transcritical_2, I);
    for (const auto& e : eqs)
        if (e.stable) { rest = &e; break; }
    PlanarField field = hybrid_field(q, HybridFamily::transcritical_2);
    VectorField vf;
    vf.dim = 2;
    vf.eval = [field](double, const double* x, double, double* dx) {
        auto f = field.f(x[0], x[1]);
        dx[0] = f[0];
        dx[1] = f[1];
    };
    IntegratorOptions o;
    OdeStepper st(vf, o);
    double x0[2] = {reset_point.x, reset_point.y};
    st.reset(0.0, x0, 0.0);
    while (st.step(t_budget)) {
        if (st.x()[0] >= q.v_th) return ResetOutcome::spike;
        if (rest && std::hypot(st.x()[0] - rest->v, st.x()[1] - rest->w) < 1e-6)
            return ResetOutcome::rest;
    }
    throw BifurcationError("hybrid homoclinic: outcome ambiguous within the time budget");
}

BifurcationPoint detect_hybrid_homoclinic(const HybridParams& hp, double lo, double hi,
                                          double tol) {
    if (!(hp.w0 < 0)) throw ValidationError("detect_hybrid_homoclinic: requires w0 < 0");
    if (!(hi > lo)) throw ValidationError("detect_hybrid_homoclinic: empty range");
    hp.validate();
    bool has_rest = false;
    for (const auto& e : hybrid_equilibria(hp, HybridFamily::transcritical_2, lo))
        has_rest = has_rest || e.stable;
    if (!has_rest)
        throw ValidationError("detect_hybrid_homoclinic: no stable equilibrium at range start");
    Point2 rp{hp.c_reset, hp.d_reset};
    BifurcationPoint bp;
    bp.kind = BifurcationKind::hybrid_homoclinic;
    bp.location = {rp.x, rp.y};
    ResetOutcome olo = classify_reset_outcome(hp, lo, rp), ohi = classify_reset_outcome(hp, hi, rp);
    if (olo == ohi) {
        bp.found = false;
        bp.lo = lo;
        bp.hi = hi;
        bp.value = std::numeric_limits<double>::quiet_NaN();
        bp.note = olo == ResetOutcome::rest ? "reset point returns to rest across the range"
                                            : "reset point spikes across the range";
        return bp;
    }
    double a = lo, b = hi;
    for (int it = 0; it < kMaxBisect && b - a > tol; ++it) {
        double m = 0.5 * (a + b);
        if (classify_reset_outcome(hp, m, rp) == olo) a = m; else b = m;
    }
    bp.lo = a;
    bp.hi = b;
    bp.value = 0.5 * (a + b);
    bp.diagnostics["outcome_lo"] = olo == ResetOutcome::rest ? 0.0 : 1.0;
    return bp;
}

}  // namespace hhca
