#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhca {

struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// HH-family parameters. Units: uF/cm^2, mS/cm^2, mV, uA/cm^2.
struct ModelParams {
    double C = 1.0;
    double g_Na = 120.0;
    double g_K = 36.0;
    double g_L = 0.3;
    double g_Ca = 2.7;
    double V_Na = 120.0;
    double V_K = -12.0;
    double V_L = 10.6;
    double V_Ca = 150.0;
    double I_pump = -17.0;
    double I_app = 0.0;
    int ca_exponent = 3;

    void validate() const;
};

ModelParams hh_classic();
ModelParams hh_calcium();

struct FullState {
    double V, n, m, h;
};

struct PlanarState {
    double V, n;
};

struct Rates {
    double alpha_n, beta_n, alpha_m, beta_m, alpha_h, beta_h;
};

Rates hh_rates(double V);
// dRates/dV, same field layout
Rates hh_rate_derivatives(double V);

double m_inf(double V);
double n_inf(double V);
double h_inf(double V);
double dm_inf(double V);
double dn_inf(double V);

// small integer power that is well defined for negative bases
double ipow(double x, int k);

FullState full_rhs(const FullState& s, const ModelParams& p);
PlanarState reduced_rhs(const PlanarState& s, const ModelParams& p);

// row-major [dfV/dV, dfV/dn, dg/dV, dg/dn]
std::array<double, 4> reduced_jacobian(const PlanarState& s, const ModelParams& p);

// -C*dV/dt with I_app left out
std::vector<double> ionic_current_profile(double V, const std::vector<double>& n_grid,
                                          const ModelParams& p);

// Equilibrium voltages (gates at steady state), ascending. Full model uses h_inf,
// the reduced model h = 0.89 - 1.1 n_inf.
std::vector<double> equilibrium_voltages(const ModelParams& p, bool reduced,
                                         double V_lo = -100.0, double V_hi = 160.0);

struct HybridParams {
    double a = 0.1;
    double b = -3.0;
    double eps = 1.0;
    double w0 = 3.2;
    double c_reset = 15.0;
    double d_reset = 15.0;
    double v_th = 100.0;
    double I = 0.0;
    double eps_z = 0.1;
    double d_z = 40.0;

    void validate() const;
};

HybridParams tc_low_ca();
HybridParams tc_high_ca();

struct HybridState {
    double v = 0.0, w = 0.0, z = 0.0;
};

enum class HybridVariant { two_var, three_var };

HybridState hybrid_rhs(const HybridState& s, const HybridParams& p, HybridVariant variant);
HybridState hybrid_reset(const HybridState& s, const HybridParams& p, HybridVariant variant);

using ResetMap = std::function<HybridState(const HybridState&)>;

// fixed (c, d) reset, the form used by the transcritical model
ResetMap constant_reset(double c, double d);

HybridState fold_hybrid_rhs(const HybridState& s, const HybridParams& p);

struct HybridEquilibrium {
    double v, w;
    bool stable;
};

enum class HybridFamily { transcritical_2, transcritical_3, fold, normal_form };

// equilibria of the continuous part at input I (z = 0 for the 3-variable model)
std::vector<HybridEquilibrium> hybrid_equilibria(const HybridParams& p, HybridFamily family,
                                                 double I);

}  // namespace hhca
