#pragma once

#include <string>
#include <vector>

#include "hhca/integrate.hpp"
#include "hhca/models.hpp"

namespace hhca {

enum class ModelKind { full, reduced, normal_form, hybrid2, hybrid3, fold };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct ModelSpec {
    ModelKind kind = ModelKind::reduced;
    ModelParams hh;
    HybridParams hybrid;
    // fold model only; defaults to constant (c_reset, d_reset)
    ResetMap fold_reset;

    bool is_hybrid() const;
    bool is_hh() const { return kind == ModelKind::full || kind == ModelKind::reduced; }
    void validate() const;
};

std::size_t dimension(ModelKind k);
std::vector<std::string> state_names(ModelKind k);

// Protocol current is added to I_app (HH family) or I (hybrid family).
VectorField make_field(const ModelSpec& m);
HybridSystem make_hybrid(const ModelSpec& m);

// Most hyperpolarized stable equilibrium at extra input I, or the reset point for hybrid
// models that have none.
std::vector<double> resting_state(const ModelSpec& m, double I = 0.0);

Trajectory simulate(const ModelSpec& m, const std::vector<double>& s0, double t0, double t1,
                    const StimulusProtocol& protocol, const IntegratorOptions& opts);

// "hh-classic", "hh-calcium", "tc-low-ca", "tc-high-ca"
std::vector<std::string> preset_names();
ModelSpec preset(const std::string& name);

}  // namespace hhca
