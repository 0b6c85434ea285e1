#include "hhca/models.hpp"

#include <cmath>
#include <algorithm>

namespace hhca {

namespace {

// x / (exp(x/10) - 1) and its derivative, with the removable singularity at x = 0
double vtrap(double x) {
    if (std::fabs(x) < 1e-4) {
        double u = x / 10.0;
        return 10.0 * (1.0 - u / 2.0 + u * u / 12.0 - u * u * u * u / 720.0);
    }
    return x / std::expm1(x / 10.0);
}

double dvtrap(double x) {
    double u = x / 10.0;
    if (std::fabs(x) < 1e-4) return -0.5 + u / 6.0 - u * u * u / 180.0;
    double e = std::exp(u);
    double d = std::expm1(u);
    return (d - u * e) / (d * d);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace

void ModelParams::validate() const {
    require(std::isfinite(C) && C > 0, "C must be > 0");
    require(g_Na >= 0 && g_K >= 0 && g_L >= 0 && g_Ca >= 0, "conductances must be >= 0");
    require(ca_exponent >= 1, "ca_exponent must be >= 1");
    for (double x : {g_Na, g_K, g_L, g_Ca, V_Na, V_K, V_L, V_Ca, I_pump, I_app})
        require(std::isfinite(x), "parameters must be finite");
}

ModelParams hh_classic() {
    ModelParams p;
    p.g_Ca = 0.0;
    p.I_pump = 0.0;
    return p;
}

ModelParams hh_calcium() { return ModelParams{}; }

Rates hh_rates(double V) {
    Rates r;
    r.alpha_n = 0.01 * vtrap(10.0 - V);
    r.beta_n = 0.125 * std::exp(-V / 80.0);
    r.alpha_m = 0.1 * vtrap(25.0 - V);
    r.beta_m = 4.0 * std::exp(-V / 18.0);
    r.alpha_h = 0.07 * std::exp(-V / 20.0);
    r.beta_h = 1.0 / (std::exp((30.0 - V) / 10.0) + 1.0);
    return r;
}

Rates hh_rate_derivatives(double V) {
    Rates d;
    d.alpha_n = -0.01 * dvtrap(10.0 - V);
    d.beta_n = -0.125 * std::exp(-V / 80.0) / 80.0;
    d.alpha_m = -0.1 * dvtrap(25.0 - V);
    d.beta_m = -4.0 * std::exp(-V / 18.0) / 18.0;
    d.alpha_h = -0.07 * std::exp(-V / 20.0) / 20.0;
    double e = std::exp((30.0 - V) / 10.0);
    d.beta_h = e / 10.0 / ((e + 1.0) * (e + 1.0));
    return d;
}

double m_inf(double V) {
    Rates r = hh_rates(V);
    return r.alpha_m / (r.alpha_m + r.beta_m);
}

double n_inf(double V) {
    Rates r = hh_rates(V);
    return r.alpha_n / (r.alpha_n + r.beta_n);
}

double h_inf(double V) {
    Rates r = hh_rates(V);
    return r.alpha_h / (r.alpha_h + r.beta_h);
}

double dm_inf(double V) {
    Rates r = hh_rates(V), d = hh_rate_derivatives(V);
    double s = r.alpha_m + r.beta_m;
    return (d.alpha_m * r.beta_m - r.alpha_m * d.beta_m) / (s * s);
}

double dn_inf(double V) {
    Rates r = hh_rates(V), d = hh_rate_derivatives(V);
    double s = r.alpha_n + r.beta_n;
    return (d.alpha_n * r.beta_n - r.alpha_n * d.beta_n) / (s * s);
}

double ipow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

FullState full_rhs(const FullState& s, const ModelParams& p) {
    Rates r = hh_rates(s.V);
    double I_ion = -p.g_K * ipow(s.n, 4) * (s.V - p.V_K) -
                   p.g_Na * ipow(s.m, 3) * s.h * (s.V - p.V_Na) - p.g_L * (s.V - p.V_L) -
                   p.g_Ca * ipow(s.n, p.ca_exponent) * (s.V - p.V_Ca) + p.I_pump;
    FullState d;
    d.V = (I_ion + p.I_app) / p.C;
    d.n = r.alpha_n * (1.0 - s.n) - r.beta_n * s.n;
    d.m = r.alpha_m * (1.0 - s.m) - r.beta_m * s.m;
    d.h = r.alpha_h * (1.0 - s.h) - r.beta_h * s.h;
    return d;
}

namespace {

double reduced_current(double V, double n, const ModelParams& p) {
    double m = m_inf(V);
    return -p.g_K * ipow(n, 4) * (V - p.V_K) - p.g_Na * m * m * m * (0.89 - 1.1 * n) * (V - p.V_Na) -
           p.g_L * (V - p.V_L) - p.g_Ca * ipow(n, p.ca_exponent) * (V - p.V_Ca) + p.I_pump;
}

}  // namespace

PlanarState reduced_rhs(const PlanarState& s, const ModelParams& p) {
    Rates r = hh_rates(s.V);
    return {(reduced_current(s.V, s.n, p) + p.I_app) / p.C,
            r.alpha_n * (1.0 - s.n) - r.beta_n * s.n};
}

std::array<double, 4> reduced_jacobian(const PlanarState& s, const ModelParams& p) {
    const double V = s.V, n = s.n;
    Rates r = hh_rates(V), d = hh_rate_derivatives(V);
    double m = m_inf(V), dm = dm_inf(V);
    double hn = 0.89 - 1.1 * n;
    int a = p.ca_exponent;
    double fV = -p.g_K * ipow(n, 4) - p.g_Na * 3.0 * m * m * dm * hn * (V - p.V_Na) -
                p.g_Na * m * m * m * hn - p.g_L - p.g_Ca * ipow(n, a);
    double fn = -4.0 * p.g_K * ipow(n, 3) * (V - p.V_K) + 1.1 * p.g_Na * m * m * m * (V - p.V_Na) -
                a * p.g_Ca * ipow(n, a - 1) * (V - p.V_Ca);
    return {fV / p.C, fn / p.C, d.alpha_n * (1.0 - n) - d.beta_n * n, -(r.alpha_n + r.beta_n)};
}

std::vector<double> ionic_current_profile(double V, const std::vector<double>& n_grid,
                                          const ModelParams& p) {
    if (n_grid.empty()) throw ValidationError("ionic_current_profile: empty n grid");
    std::vector<double> out;
    out.reserve(n_grid.size());
    for (double n : n_grid) {
        if (!(n >= 0.0 && n <= 1.0)) throw ValidationError("ionic_current_profile: n outside [0,1]");
        out.push_back(-reduced_current(V, n, p));
    }
    return out;
}

std::vector<double> equilibrium_voltages(const ModelParams& p, bool reduced, double V_lo,
                                         double V_hi) {
    auto F = [&](double V) {
        double n = n_inf(V);
        if (reduced) return reduced_rhs({V, n}, p).V;
        return full_rhs({V, n, m_inf(V), h_inf(V)}, p).V;
    };
    std::vector<double> roots;
    const double dV = 0.01;
    double a = V_lo, fa = F(a);
    for (int k = 1; a < V_hi; ++k) {
        double b = V_lo + k * dV, fb = F(b);
        if (fa == 0.0) {
            roots.push_back(a);
        } else if (fa * fb < 0.0) {
            double lo = a, hi = b, flo = fa;
            for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::fabs(lo)); ++it) {
                double mid = 0.5 * (lo + hi), fm = F(mid);
                if (fm == 0.0) { lo = hi = mid; break; }
                if ((fm < 0) == (flo < 0)) { lo = mid; flo = fm; } else hi = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    return roots;
}

void HybridParams::validate() const {
    require(std::isfinite(eps) && eps > 0, "eps must be > 0");
    require(v_th > c_reset, "v_th must exceed c_reset");
    require(eps_z >= 0, "eps_z must be >= 0");
    require(d_z >= 0, "d_z must be >= 0");
    for (double x : {a, b, w0, c_reset, d_reset, v_th, I, eps_z, d_z})
        require(std::isfinite(x), "parameters must be finite");
}

HybridParams tc_low_ca() { return HybridParams{}; }

HybridParams tc_high_ca() {
    HybridParams p;
    p.w0 = -4.0;
    return p;
}

HybridState hybrid_rhs(const HybridState& s, const HybridParams& p, HybridVariant variant) {
    HybridState d;
    if (variant == HybridVariant::two_var) {
        d.v = s.v * s.v - s.w * s.w + p.I;
        d.z = 0.0;
    } else {
        d.v = s.v * s.v + p.b * s.v * s.w - s.w * s.w + p.I - s.z;
        d.z = -p.eps_z * s.z;
    }
    d.w = p.eps * (p.a * s.v - s.w + p.w0);
    return d;
}

HybridState hybrid_reset(const HybridState& s, const HybridParams& p, HybridVariant variant) {
    if (!(s.v >= p.v_th))
        throw ContractError("hybrid_reset: guard not satisfied (v < v_th)");
    HybridState r = s;
    r.v = p.c_reset;
    r.w = p.d_reset;
    if (variant == HybridVariant::three_var) r.z = s.z + p.d_z;
    return r;
}

ResetMap constant_reset(double c, double d) {
    return [c, d](const HybridState& s) {
        HybridState r = s;
        r.v = c;
        r.w = d;
        return r;
    };
}

HybridState fold_hybrid_rhs(const HybridState& s, const HybridParams& p) {
    HybridState d;
    d.v = s.v * s.v - s.w + p.I;
    d.w = p.eps * (p.a * s.v - s.w + p.w0);
    d.z = 0.0;
    return d;
}

std::vector<HybridEquilibrium> hybrid_equilibria(const HybridParams& p, HybridFamily family,
                                                 double I) {
    // substitute w = a v + w0 into the v-nullcline -> A v^2 + B v + C0 = 0
    double a = p.a, w0 = p.w0, A, B, C0;
    switch (family) {
        case HybridFamily::transcritical_3:
            A = 1.0 + p.b * a - a * a;
            B = p.b * w0 - 2.0 * a * w0;
            C0 = I - w0 * w0;
            break;
        case HybridFamily::fold:
            A = 1.0;
            B = -a;
            C0 = I - w0;
            break;
        default:
            A = 1.0 - a * a;
            B = -2.0 * a * w0;
            C0 = I - w0 * w0;
            break;
    }
    std::vector<double> vs;
    if (A == 0.0) {
        if (B != 0.0) vs.push_back(-C0 / B);
    } else {
        double disc = B * B - 4.0 * A * C0;
        if (disc > 0.0) {
            // stable quadratic formula
            double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
            double r1 = q / A, r2 = (q != 0.0) ? C0 / q : -B / A - r1;
            vs.push_back(std::min(r1, r2));
            vs.push_back(std::max(r1, r2));
        } else if (disc == 0.0) {
            vs.push_back(-B / (2.0 * A));
        }
    }
    std::vector<HybridEquilibrium> out;
    for (double v : vs) {
        double w = a * v + w0;
        double j11, j12;
        switch (family) {
            case HybridFamily::transcritical_3:
                j11 = 2.0 * v + p.b * w;
                j12 = p.b * v - 2.0 * w;
                break;
            case HybridFamily::fold:
                j11 = 2.0 * v;
                j12 = -1.0;
                break;
            default:
                j11 = 2.0 * v;
                j12 = -2.0 * w;
                break;
        }
        double j21 = p.eps * a, j22 = -p.eps;
        double tr = j11 + j22, det = j11 * j22 - j12 * j21;
        out.push_back({v, w, det > 0.0 && tr < 0.0});
    }
    return out;
}

}  // namespace hhca
