#include "hhca/normalform.hpp"

#include <cmath>

namespace hhca {

std::array<double, 2> NormalFormTransform::to_normal(double V, double n) const {
    double dV = V - V_tc, dn = n - n_tc;
    return {linear[0] * dV + linear[1] * dn, linear[2] * dV + linear[3] * dn};
}

std::array<double, 2> NormalFormTransform::to_model(double v, double w) const {
    double det = linear[0] * linear[3] - linear[1] * linear[2];
    double dV = (linear[3] * v - linear[1] * w) / det;
    double dn = (-linear[2] * v + linear[0] * w) / det;
    return {V_tc + dV, n_tc + dn};
}

double NormalFormTransform::rescaled_input(double I) const {
    return lambda * eps_tilde + alpha * (I - I_tc) / C;
}

std::array<double, 3> second_derivatives(const std::function<double(double, double)>& f, double x,
                                         double y) {
    auto at = [&](double hx, double hy) {
        double f0 = f(x, y);
        double fxx = (f(x + hx, y) - 2 * f0 + f(x - hx, y)) / (hx * hx);
        double fyy = (f(x, y + hy) - 2 * f0 + f(x, y - hy)) / (hy * hy);
        double fxy = (f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) +
                      f(x - hx, y - hy)) / (4 * hx * hy);
        return std::array<double, 3>{fxx, fxy, fyy};
    };
    double hx = 1e-3 * (1 + std::fabs(x)), hy = 1e-3 * (1 + std::fabs(y));
    auto D1 = at(hx, hy), D2 = at(0.5 * hx, 0.5 * hy);
    std::array<double, 3> out;
    for (int k = 0; k < 3; ++k) out[k] = (4 * D2[k] - D1[k]) / 3;
    return out;
}

double estimate_eps(const ModelParams& p, double V_tc, double n_tc) {
    double num = 0, den = 0;
    const int K = 200;
    for (int k = 0; k <= K; ++k) {
        double V = V_tc - 10.0 + 20.0 * k / K;
        Rates r = hh_rates(V);
        num += (r.alpha_n + r.beta_n) * p.C;
        den += std::fabs(reduced_jacobian({V, n_tc}, p)[0]) * p.C;
    }
    return num / den;
}

NormalFormTransform compute_transform(const std::function<double(double, double)>& fast,
                                      const std::function<double(double, double)>& slow,
                                      double x_tc, double y_tc, double I_tc, double C, double eps) {
    if (!(eps > 0)) throw NormalFormError("normal form: eps must be > 0");
    NormalFormTransform t;
    t.V_tc = x_tc;
    t.n_tc = y_tc;
    t.I_tc = I_tc;
    t.C = C;
    t.eps = eps;
    auto d2 = second_derivatives(fast, x_tc, y_tc);
    t.alpha = 0.5 * d2[0];
    t.beta = 0.5 * d2[1];
    t.gamma = 0.5 * d2[2];
    if (t.alpha == 0.0) throw NormalFormError("normal form: second V-derivative vanishes");
    t.discriminant = t.beta * t.beta - t.gamma * t.alpha;
    if (!(t.discriminant > 0))
        throw NormalFormError("normal form: discriminant beta^2 - gamma*alpha is not positive");
    double sd = std::sqrt(t.discriminant);
    t.lambda = -t.beta / sd;
    t.g0 = slow(x_tc, y_tc) / eps;
    if (!(t.g0 < 0)) throw NormalFormError("normal form: slow field at the singular point is not negative");
    t.eps_tilde = -sd * t.g0 * eps;
    t.linear = {t.alpha, t.beta, 0.0, sd};
    t.offset = {x_tc, y_tc};
    return t;
}

NormalFormTransform compute_transform(const ModelParams& p, const BifurcationPoint& tc,
                                      double eps) {
    if (tc.kind != BifurcationKind::transcritical || tc.location.size() != 2 || !tc.found)
        throw NormalFormError("normal form: needs a detected transcritical point");
    ModelParams q = p;
    q.I_app = tc.value;
    double e = eps > 0 ? eps : estimate_eps(q, tc.location[0], tc.location[1]);
    auto fast = [q](double V, double n) { return reduced_rhs({V, n}, q).V; };
    auto slow = [q](double V, double n) { return reduced_rhs({V, n}, q).n; };
    return compute_transform(fast, slow, tc.location[0], tc.location[1], tc.value, p.C, e);
}

std::array<double, 2> pushforward_field(const ModelParams& p, const NormalFormTransform& xf,
                                        double v, double w, double I) {
    auto x = xf.to_model(v, w);
    ModelParams q = p;
    q.I_app = I;
    PlanarState d = reduced_rhs({x[0], x[1]}, q);
    return {xf.linear[0] * d.V + xf.linear[1] * d.n, xf.linear[2] * d.V + xf.linear[3] * d.n};
}

ResidualReport residual_report(const ModelParams& p, const NormalFormTransform& xf,
                               std::vector<double> radii, int n_rings, int n_angles) {
    ResidualReport rep;
    rep.radii = radii;
    ModelParams q = p;
    q.I_app = xf.I_tc;
    const double two_pi = 6.283185307179586;
    for (double r : radii) {
        double mres = 0, wmax = 0;
        for (int i = 1; i <= n_rings; ++i) {
            double rho = r * i / n_rings;
            for (int k = 0; k < n_angles; ++k) {
                double th = two_pi * k / n_angles;
                double v = rho * std::cos(th), w = rho * std::sin(th);
                auto x = xf.to_model(v, w);
                PlanarState d = reduced_rhs({x[0], x[1]}, q);
                // the recovery contribution beta*dn/dt is O(eps); leave it out
                double fast = xf.alpha * d.V;
                mres = std::max(mres, std::fabs(fast - (v * v - w * w)));
                double dw = xf.linear[3] * d.n;
                double ratio = std::fabs(dw / xf.eps_tilde + 1.0) /
                               (std::fabs(v) + std::fabs(w) + xf.eps_tilde);
                wmax = std::max(wmax, ratio);
            }
        }
        rep.max_residual.push_back(mres);
        rep.w_ratio_max.push_back(wmax);
        rep.w_constant = std::max(rep.w_constant, wmax);
    }
    // least squares slope of log residual on log radius
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
        double lx = std::log(radii[i]), ly = std::log(rep.max_residual[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return rep;
}

}  // namespace hhca
