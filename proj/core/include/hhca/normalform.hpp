#pragma once

#include <array>
#include <functional>
#include <vector>

#include "hhca/bifurcation.hpp"
#include "hhca/models.hpp"

namespace hhca {

struct NormalFormTransform {
    double V_tc = 0, n_tc = 0, I_tc = 0;
    double alpha = 0, beta = 0, gamma = 0;
    double discriminant = 0;
    double lambda = 0;
    double g0 = 0;          // slow field at the singular point, eps * g = dn/dt
    double eps = 0;         // physiological timescale ratio (estimate or caller-supplied)
    double eps_tilde = 0;   // rescaled eps, positive when g0 < 0
    double C = 1.0;
    // (v, w) = L * (V - V_tc, n - n_tc)
    std::array<double, 4> linear{};
    std::array<double, 2> offset{};

    std::array<double, 2> to_normal(double V, double n) const;
    std::array<double, 2> to_model(double v, double w) const;
    // rescaled input for the physiological current I
    double rescaled_input(double I) const;
};

struct NormalFormError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ratio of the recovery rate to the fast-equation slope around the singular point
double estimate_eps(const ModelParams& p, double V_tc, double n_tc);

// Generic second derivatives of f(x, y) by central differences with one Richardson step.
// Returns {f_xx, f_xy, f_yy}.
std::array<double, 3> second_derivatives(const std::function<double(double, double)>& f, double x,
                                         double y);

// eps <= 0 selects the estimate
NormalFormTransform compute_transform(const ModelParams& p, const BifurcationPoint& tc,
                                      double eps = 0.0);

// Transform for an arbitrary planar pair fast(x,y) + (I - I_tc)/C, slow(x,y) = dn/dt.
NormalFormTransform compute_transform(const std::function<double(double, double)>& fast,
                                      const std::function<double(double, double)>& slow,
                                      double x_tc, double y_tc, double I_tc, double C, double eps);

// (dv/dt, dw/dt) of the reduced model seen in normal-form coordinates
std::array<double, 2> pushforward_field(const ModelParams& p, const NormalFormTransform& xf,
                                        double v, double w, double I);

struct ResidualReport {
    std::vector<double> radii;
    std::vector<double> max_residual;      // |dv/dt - (v^2 - w^2 + I~)| with the eps part removed
    double slope = 0;                      // log-log fit of max_residual vs radius
    std::vector<double> w_ratio_max;       // max |dw/dt / eps~ + 1| / (|v| + |w| + eps~)
    double w_constant = 0;                 // largest of the above
};

ResidualReport residual_report(const ModelParams& p, const NormalFormTransform& xf,
                               std::vector<double> radii = {0.2, 0.1, 0.05}, int n_rings = 24,
                               int n_angles = 96);

}  // namespace hhca
