#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhca {

// dx = f(t, x; I), with I the protocol current added on top of the model's own input
struct VectorField {
    std::size_t dim = 0;
    std::function<void(double t, const double* x, double I, double* dx)> eval;
};

struct Pulse {
    double time = 0.0;
    double amplitude = 0.0;
    double width = 0.0;
};

struct StepInput {
    double amplitude = 0.0;
    double on = 0.0;
    double off = 0.0;
};

// Piecewise-constant current. Step and pulses are active on half-open [start, end).
struct StimulusProtocol {
    double baseline = 0.0;
    std::optional<StepInput> step;
    std::vector<Pulse> pulses;

    void validate() const;
    double current(double t) const;
    // sorted, unique discontinuities strictly inside (t0, t1)
    std::vector<double> breakpoints(double t0, double t1) const;
};

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0: automatic
    double event_tol = 1e-10;
    double convergence_radius = 1e-8;
    double divergence_bound = 1e8;
    std::size_t max_events = 1000000;
    std::size_t max_steps = 50000000;
    bool detect_equilibrium = false;
    double output_dt = 0.0;  // 0: record every accepted step

    void validate() const;
};

enum class Termination { time_limit, converged, diverged, error };

std::string to_string(Termination t);

struct ResetEvent {
    double time;
    std::vector<double> pre_state;
    std::vector<double> post_state;
};

struct Trajectory {
    std::size_t dim = 0;
    std::vector<double> times;
    std::vector<double> states;  // row-major, dim per sample
    std::vector<ResetEvent> events;
    Termination termination = Termination::time_limit;
    std::string message;

    std::size_t size() const { return times.size(); }
    const double* state(std::size_t i) const { return states.data() + i * dim; }
    double at(std::size_t i, std::size_t k) const { return states[i * dim + k]; }
    std::vector<double> component(std::size_t k) const;
    std::vector<double> back() const;
};

struct IntegrationError : std::runtime_error {
    IntegrationError(const std::string& what, double t, std::vector<double> state)
        : std::runtime_error(what), t(t), last_state(std::move(state)) {}
    double t;
    std::vector<double> last_state;
};

// Dormand-Prince 5(4) with PI step control and 4th-order dense output.
class OdeStepper {
public:
    OdeStepper(VectorField f, const IntegratorOptions& opts);

    // (re)start at t with state x, input I held constant until the next reset
    void reset(double t, const double* x, double I);
    void set_direction(int sign) { dir_ = sign >= 0 ? 1.0 : -1.0; }

    // one accepted step, never going past t_stop (in the integration direction)
    // returns false once t_stop has been reached
    bool step(double t_stop);

    double t() const { return t_; }
    double t_prev() const { return t_old_; }
    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& x_prev() const { return x_old_; }
    const std::vector<double>& dx() const { return k1_; }
    // dense output on [t_prev, t]
    void dense(double t, double* out) const;
    double dense_component(double t, std::size_t k) const;
    std::size_t dim() const { return n_; }
    double last_step() const { return h_last_; }
    std::size_t accepted() const { return naccept_; }

private:
    double initial_step(double t_stop);
    double err_norm(const std::vector<double>& err, const std::vector<double>& y0,
                    const std::vector<double>& y1) const;

    VectorField f_;
    IntegratorOptions o_;
    std::size_t n_;
    double dir_ = 1.0;
    double t_ = 0, t_old_ = 0, h_ = 0, h_last_ = 0, I_ = 0;
    double facold_ = 1e-4;
    bool fresh_ = true;
    std::size_t naccept_ = 0;
    std::vector<double> x_, x_old_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_, err_;
    std::vector<double> r1_, r2_, r3_, r4_, r5_;
};

Trajectory integrate(const VectorField& f, const std::vector<double>& s0, double t0, double t1,
                     const StimulusProtocol& protocol, const IntegratorOptions& opts);

// Threshold-reset system: a crossing of x[guard_index] upward through threshold triggers reset.
struct HybridSystem {
    VectorField field;
    std::size_t guard_index = 0;
    double threshold = 0.0;
    std::function<std::vector<double>(const std::vector<double>&)> reset;
};

Trajectory integrate_hybrid(const HybridSystem& sys, const std::vector<double>& s0, double t0,
                            double t1, const StimulusProtocol& protocol,
                            const IntegratorOptions& opts);

}  // namespace hhca
