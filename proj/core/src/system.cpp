#include "hhca/system.hpp"

#include <cmath>

namespace hhca {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::full: return "full";
        case ModelKind::reduced: return "reduced";
        case ModelKind::normal_form: return "normal-form";
        case ModelKind::hybrid2: return "hybrid2";
        case ModelKind::hybrid3: return "hybrid3";
        case ModelKind::fold: return "fold";
    }
    return "reduced";
}

ModelKind model_kind_from_string(const std::string& s) {
    for (ModelKind k : {ModelKind::full, ModelKind::reduced, ModelKind::normal_form,
                        ModelKind::hybrid2, ModelKind::hybrid3, ModelKind::fold})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown model kind '" + s + "'");
}

bool ModelSpec::is_hybrid() const {
    return kind == ModelKind::hybrid2 || kind == ModelKind::hybrid3 || kind == ModelKind::fold;
}

void ModelSpec::validate() const {
    if (is_hh()) hh.validate(); else hybrid.validate();
}

std::size_t dimension(ModelKind k) {
    switch (k) {
        case ModelKind::full: return 4;
        case ModelKind::hybrid3: return 3;
        default: return 2;
    }
}

std::vector<std::string> state_names(ModelKind k) {
    switch (k) {
        case ModelKind::full: return {"V", "n", "m", "h"};
        case ModelKind::reduced: return {"V", "n"};
        case ModelKind::hybrid3: return {"v", "w", "z"};
        default: return {"v", "w"};
    }
}

VectorField make_field(const ModelSpec& m) {
    m.validate();
    VectorField f;
    f.dim = dimension(m.kind);
    switch (m.kind) {
        case ModelKind::full:
            f.eval = [p = m.hh](double, const double* x, double I, double* dx) {
                ModelParams q = p;
                q.I_app += I;
                FullState d = full_rhs({x[0], x[1], x[2], x[3]}, q);
                dx[0] = d.V; dx[1] = d.n; dx[2] = d.m; dx[3] = d.h;
            };
            break;
        case ModelKind::reduced:
            f.eval = [p = m.hh](double, const double* x, double I, double* dx) {
                ModelParams q = p;
                q.I_app += I;
                PlanarState d = reduced_rhs({x[0], x[1]}, q);
                dx[0] = d.V; dx[1] = d.n;
            };
            break;
        case ModelKind::normal_form:
        case ModelKind::hybrid2:
            f.eval = [p = m.hybrid](double, const double* x, double I, double* dx) {
                HybridParams q = p;
                q.I += I;
                HybridState d = hybrid_rhs({x[0], x[1], 0.0}, q, HybridVariant::two_var);
                dx[0] = d.v; dx[1] = d.w;
            };
            break;
        case ModelKind::hybrid3:
            f.eval = [p = m.hybrid](double, const double* x, double I, double* dx) {
                HybridParams q = p;
                q.I += I;
                HybridState d = hybrid_rhs({x[0], x[1], x[2]}, q, HybridVariant::three_var);
                dx[0] = d.v; dx[1] = d.w; dx[2] = d.z;
            };
            break;
        case ModelKind::fold:
            f.eval = [p = m.hybrid](double, const double* x, double I, double* dx) {
                HybridParams q = p;
                q.I += I;
                HybridState d = fold_hybrid_rhs({x[0], x[1], 0.0}, q);
                dx[0] = d.v; dx[1] = d.w;
            };
            break;
    }
    return f;
}

HybridSystem make_hybrid(const ModelSpec& m) {
    if (!m.is_hybrid()) throw ValidationError("make_hybrid: model kind has no reset");
    HybridSystem sys;
    sys.field = make_field(m);
    sys.guard_index = 0;
    sys.threshold = m.hybrid.v_th;
    const HybridParams p = m.hybrid;
    if (m.kind == ModelKind::fold) {
        ResetMap r = m.fold_reset ? m.fold_reset : constant_reset(p.c_reset, p.d_reset);
        sys.reset = [r](const std::vector<double>& x) {
            HybridState s = r({x[0], x[1], 0.0});
            return std::vector<double>{s.v, s.w};
        };
    } else if (m.kind == ModelKind::hybrid3) {
        sys.reset = [p](const std::vector<double>& x) {
            HybridState s = hybrid_reset({x[0], x[1], x[2]}, p, HybridVariant::three_var);
            return std::vector<double>{s.v, s.w, s.z};
        };
    } else {
        sys.reset = [p](const std::vector<double>& x) {
            HybridState s = hybrid_reset({x[0], x[1], 0.0}, p, HybridVariant::two_var);
            return std::vector<double>{s.v, s.w};
        };
    }
    return sys;
}

std::vector<double> resting_state(const ModelSpec& m, double I) {
    if (m.is_hh()) {
        ModelParams q = m.hh;
        q.I_app += I;
        bool reduced = m.kind == ModelKind::reduced;
        std::vector<double> Vs = equilibrium_voltages(q, reduced);
        if (Vs.empty()) throw std::runtime_error("resting_state: no equilibrium");
        double V = Vs.front();
        if (reduced) {
            for (double v : Vs) {
                auto J = reduced_jacobian({v, n_inf(v)}, q);
                double tr = J[0] + J[3], det = J[0] * J[3] - J[1] * J[2];
                if (det > 0 && tr < 0) { V = v; break; }
            }
            return {V, n_inf(V)};
        }
        return {V, n_inf(V), m_inf(V), h_inf(V)};
    }
    HybridFamily fam = m.kind == ModelKind::hybrid3 ? HybridFamily::transcritical_3
                       : m.kind == ModelKind::fold  ? HybridFamily::fold
                                                    : HybridFamily::transcritical_2;
    for (const auto& e : hybrid_equilibria(m.hybrid, fam, m.hybrid.I + I)) {
        if (!e.stable) continue;
        if (m.kind == ModelKind::hybrid3) return {e.v, e.w, 0.0};
        return {e.v, e.w};
    }
    if (m.kind == ModelKind::hybrid3) return {m.hybrid.c_reset, m.hybrid.d_reset, 0.0};
    return {m.hybrid.c_reset, m.hybrid.d_reset};
}

Trajectory simulate(const ModelSpec& m, const std::vector<double>& s0, double t0, double t1,
                    const StimulusProtocol& protocol, const IntegratorOptions& opts) {
    if (m.is_hybrid()) return integrate_hybrid(make_hybrid(m), s0, t0, t1, protocol, opts);
    return integrate(make_field(m), s0, t0, t1, protocol, opts);
}

std::vector<std::string> preset_names() {
    return {"hh-classic", "hh-calcium", "tc-low-ca", "tc-high-ca"};
}

ModelSpec preset(const std::string& name) {
    ModelSpec m;
    if (name == "hh-classic") {
        m.kind = ModelKind::reduced;
        m.hh = hh_classic();
    } else if (name == "hh-calcium") {
        m.kind = ModelKind::reduced;
        m.hh = hh_calcium();
    } else if (name == "tc-low-ca") {
        m.kind = ModelKind::hybrid3;
        m.hybrid = tc_low_ca();
    } else if (name == "tc-high-ca") {
        m.kind = ModelKind::hybrid3;
        m.hybrid = tc_high_ca();
    } else {
        throw ValidationError("unknown preset '" + name + "'");
    }
    return m;
}

}  // namespace hhca
