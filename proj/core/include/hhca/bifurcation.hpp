#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hhca/integrate.hpp"
#include "hhca/models.hpp"
#include "hhca/phaseplane.hpp"

namespace hhca {

enum class BifurcationKind { transcritical, hopf, saddle_node, saddle_homoclinic, snlc,
                             hybrid_homoclinic };

std::string to_string(BifurcationKind k);
BifurcationKind bifurcation_kind_from_string(const std::string& s);

struct BifurcationPoint {
    BifurcationKind kind = BifurcationKind::transcritical;
    bool found = true;
    double value = 0.0;
    double lo = 0.0, hi = 0.0;
    std::vector<double> location;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> flags;
    std::string note;

    bool has_flag(const std::string& f) const;
};

struct BifurcationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One-parameter family of planar fields; the parameter is the input current.
using FieldFamily = std::function<PlanarField(double I)>;

FieldFamily reduced_family(const ModelParams& p);

// --- transcritical -----------------------------------------------------------

struct TranscriticalProblem {
    std::function<double(double, double)> f;           // fast component at I = 0
    std::function<std::array<double, 2>(double, double)> grad;  // optional analytic gradient
    double dfdI = 1.0;
    Box search{-40.0, 100.0, -0.3, 1.2};
    Box physiological{-12.0, 120.0, 0.0, 1.0};
    int seeds_per_axis = 24;
};

TranscriticalProblem transcritical_problem(const ModelParams& p);
// truncated normal form v^2 - w^2 + I
TranscriticalProblem normal_form_problem();

BifurcationPoint detect_transcritical(const TranscriticalProblem& prob);
BifurcationPoint detect_transcritical(const ModelParams& p);

// --- equilibrium-branch detectors ---------------------------------------------

enum class EquilibriumBranch { lowest, highest };

BifurcationPoint detect_hopf(const FieldFamily& family, Point2 guess, double lo, double hi,
                             double tol = 1e-4);
BifurcationPoint detect_hopf(const ModelParams& p, double lo, double hi,
                             EquilibriumBranch branch = EquilibriumBranch::lowest,
                             double tol = 1e-4);

BifurcationPoint detect_saddle_node(const FieldFamily& family, Point2 node, Point2 saddle,
                                    double lo, double hi, double tol = 1e-8);
BifurcationPoint detect_saddle_node(const ModelParams& p, double lo, double hi,
                                    double tol = 1e-8);

// --- saddle-homoclinic --------------------------------------------------------

struct MissDistanceOptions {
    double dn = 0.02;          // section offset above the saddle
    double window = 30.0;      // mV either side of the saddle
    double excursion = 40.0;   // spike marker above V_saddle
    double delta = 1e-6;       // seeding offset, box-normalized
    double t_max = 5000.0;
    Box box{-100.0, 160.0, -0.2, 1.2};
    IntegratorOptions integrator = [] {
        IntegratorOptions o;
        o.rtol = 1e-10;
        o.atol = 1e-12;
        return o;
    }();
};

struct MissDistance {
    double value = 0.0;  // +inf: unstable branch re-spiked without crossing
    double V_s = 0.0, V_u = 0.0, n_section = 0.0;
    bool crossed = false;
    FixedPoint saddle;
};

// saddle of the reduced model at I_app = I (the one adjacent to the hyperpolarized node)
FixedPoint reduced_saddle(const ModelParams& p, double I);

MissDistance homoclinic_miss_distance(const ModelParams& p, double I,
                                      const MissDistanceOptions& opts = {});

BifurcationPoint detect_saddle_homoclinic(const ModelParams& p, double lo, double hi,
                                          double tol = 1e-3, const MissDistanceOptions& opts = {});

// --- SNLC ---------------------------------------------------------------------

struct SnlcOptions {
    double transient = 100.0;
    double window = 200.0;
    int min_spikes = 3;
    double spike_level = 20.0;
    IntegratorOptions integrator;
};

struct SpikingCheck {
    bool spiking = false;
    int spikes = 0;
    std::vector<double> end_state;
};

SpikingCheck sustained_spiking(const ModelParams& p, double I, const std::vector<double>& s0,
                               const SnlcOptions& opts = {});
// initial condition used at the top of the range
std::vector<double> spiking_initial_state(const ModelParams& p, double I);

BifurcationPoint detect_snlc(const ModelParams& p, double lo, double hi, double tol = 1e-2,
                             const SnlcOptions& opts = {});

// --- hybrid homoclinic ----------------------------------------------------------

enum class ResetOutcome { rest, spike };

ResetOutcome classify_reset_outcome(const HybridParams& hp, double I, Point2 reset_point,
                                    double t_budget = 1e5);

BifurcationPoint detect_hybrid_homoclinic(const HybridParams& hp, double lo, double hi,
                                          double tol = 1e-4);

}  // namespace hhca
