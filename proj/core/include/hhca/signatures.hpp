#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hhca/integrate.hpp"
#include "hhca/models.hpp"
#include "hhca/system.hpp"

namespace hhca {

struct SignatureThresholds {
    double spike_level = 20.0;
    double plateau = 10.0;
    double adp = 1.0;
    double settle_window = 50.0;
    double refractory_skip = 3.0;
    bool use_events = false;  // hybrid runs: reset events are the spikes

    void validate() const;
    static SignatureThresholds hh();
    static SignatureThresholds hybrid(double v_th);
};

struct PlateauRecord {
    bool present = false;
    double trough_voltage = 0;
    double rest_voltage = 0;
    double margin = 0;
    std::string reason;
};

struct AdpRecord {
    bool present = false;
    double apex_voltage = 0;
    double apex_time = 0;
    double trough_voltage = 0;
    double settle_voltage = 0;
    std::string reason;
};

struct SignatureReport {
    std::vector<double> spike_times;
    std::optional<double> latency;
    PlateauRecord plateau;
    AdpRecord adp;
    bool subthreshold_oscillations = false;
    std::optional<int> extra_spike_count;
    SignatureThresholds thresholds;
};

struct SignatureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> detect_spikes(const Trajectory& traj, const SignatureThresholds& th);
std::optional<double> measure_latency(const std::vector<double>& spike_times,
                                      const StimulusProtocol& protocol);
PlateauRecord detect_plateau(const Trajectory& traj, const std::vector<double>& spike_times,
                             const StimulusProtocol& protocol, const SignatureThresholds& th);
AdpRecord detect_adp(const Trajectory& traj, const std::vector<double>& spike_times,
                     const StimulusProtocol& protocol, const SignatureThresholds& th);
bool detect_subthreshold_oscillations(const Trajectory& traj, const SignatureThresholds& th);

SignatureReport analyze(const Trajectory& traj, const StimulusProtocol& protocol,
                        const SignatureThresholds& th);

// coefficient of variation of the last k inter-spike intervals
double isi_cv(const std::vector<double>& spike_times, std::size_t last_k);
// spikes before the first interval longer than growth x the first interval (0 if none)
std::size_t first_burst_size(const std::vector<double>& spike_times, double growth = 3.0);

using Simulator = std::function<Trajectory(const StimulusProtocol&)>;

SignatureReport robustness_run(const Simulator& sim, const StimulusProtocol& nominal,
                               const std::vector<Pulse>& pulses, const SignatureThresholds& th);

struct PulseThreshold {
    bool found = false;
    double amplitude = 0;   // smallest amplitude seen to add a spike (upper end of bracket)
    double lo = 0, hi = 0;
};

// bisection on the pulse amplitude for the first extra spike
PulseThreshold pulse_threshold(const Simulator& sim, const StimulusProtocol& nominal,
                               double pulse_time, double width, double max_amplitude,
                               const SignatureThresholds& th, double tol = 1e-3);

// --- matched transcritical / fold comparison ------------------------------------

struct RobustnessSetup {
    ModelSpec model;
    std::vector<double> start;  // post-reset state the nominal run starts from
    double hold = 0;            // holding current
    double t_end = 0;
    double apex_time = 0;
    double apex_voltage = 0;
    double rest_voltage = 0;
};

// 2-variable transcritical model started from its reset point, no spike in the nominal run
RobustnessSetup transcritical_setup(const HybridParams& hp, double hold, double t_end = 200.0);

// fold model whose rest and saddle v-positions match the transcritical model at the
// same holding current; reset w chosen in the fold's ADP window to match the ADP height
RobustnessSetup matched_fold_setup(const RobustnessSetup& tc, double d_lo = -6.0,
                                   double d_hi = 6.0, int d_steps = 481);

PulseThreshold setup_threshold(const RobustnessSetup& s, double width, double max_amplitude,
                               double tol = 1e-3);

}  // namespace hhca
