#include "hhca/signatures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hhca {

void SignatureThresholds::validate() const {
    if (!(plateau > 0 && adp > 0 && settle_window > 0 && refractory_skip >= 0))
        throw ValidationError("signature thresholds must be positive");
    if (!std::isfinite(spike_level)) throw ValidationError("spike level must be finite");
}

SignatureThresholds SignatureThresholds::hh() { return SignatureThresholds{}; }

SignatureThresholds SignatureThresholds::hybrid(double v_th) {
    SignatureThresholds t;
    t.spike_level = v_th;
    t.plateau = 5.0;
    t.adp = 1.0;
    t.settle_window = 50.0;
    t.refractory_skip = 0.0;
    t.use_events = true;
    return t;
}

std::vector<double> detect_spikes(const Trajectory& traj, const SignatureThresholds& th) {
    std::vector<double> out;
    if (th.use_events) {
        for (const auto& e : traj.events) out.push_back(e.time);
        return out;
    }
    if (traj.size() < 2) return out;
    const double L = th.spike_level;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        double a = traj.at(i - 1, 0), b = traj.at(i, 0);
        if (!(a < L && b >= L)) continue;
        double t0 = traj.times[i - 1], t1 = traj.times[i];
        double tc = t0 + (L - a) / (b - a) * (t1 - t0);
        // require a peak within 5 ms
        bool peak = false;
        for (std::size_t j = i; j + 1 < traj.size() && traj.times[j] <= tc + 5.0; ++j)
            if (traj.at(j, 0) >= traj.at(j - 1, 0) && traj.at(j, 0) > traj.at(j + 1, 0)) {
                peak = true;
                break;
            }
        if (peak && (out.empty() || tc > out.back())) out.push_back(tc);
    }
    return out;
}

std::optional<double> measure_latency(const std::vector<double>& spike_times,
                                      const StimulusProtocol& protocol) {
    if (!protocol.step) return std::nullopt;
    for (double t : spike_times)
        if (t >= protocol.step->on && t < protocol.step->off) return t - protocol.step->on;
    return std::nullopt;
}

namespace {

// time-weighted mean of component 0 over [a, b]
double window_mean(const Trajectory& tr, double a, double b) {
    double acc = 0, span = 0;
    for (std::size_t i = 1; i < tr.size(); ++i) {
        double t0 = std::max(a, tr.times[i - 1]), t1 = std::min(b, tr.times[i]);
        if (t1 <= t0) continue;
        // linear interpolation inside the sample interval
        double dt = tr.times[i] - tr.times[i - 1];
        auto v = [&](double t) {
            double s = (t - tr.times[i - 1]) / dt;
            return tr.at(i - 1, 0) + s * (tr.at(i, 0) - tr.at(i - 1, 0));
        };
        acc += 0.5 * (v(t0) + v(t1)) * (t1 - t0);
        span += t1 - t0;
    }
    if (span <= 0) throw SignatureError("empty averaging window");
    return acc / span;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

PlateauRecord detect_plateau(const Trajectory& traj, const std::vector<double>& spike_times,
                             const StimulusProtocol& protocol, const SignatureThresholds& th) {
    PlateauRecord rec;
    if (!protocol.step) {
        rec.reason = "protocol has no step";
        return rec;
    }
    const double on = protocol.step->on, off = protocol.step->off;
    std::vector<double> in_step;
    for (double t : spike_times)
        if (t >= on && t < off) in_step.push_back(t);
    rec.rest_voltage = window_mean(traj, std::max(traj.times.front(), on - th.settle_window), on);
    if (in_step.size() < 2) {
        rec.reason = "fewer than 2 spikes during the step";
        rec.trough_voltage = rec.rest_voltage;
        return rec;
    }
    // per-interval minima; the half-intervals outside the first/last spike are never used
    std::vector<double> troughs;
    std::size_t i = 0;
    for (std::size_t k = 0; k + 1 < in_step.size(); ++k) {
        double a = in_step[k], b = in_step[k + 1];
        double m = std::numeric_limits<double>::infinity();
        while (i < traj.size() && traj.times[i] <= a) ++i;
        for (std::size_t j = i; j < traj.size() && traj.times[j] < b; ++j)
            m = std::min(m, traj.at(j, 0));
        if (std::isfinite(m)) troughs.push_back(m);
    }
    if (troughs.empty()) {
        rec.reason = "no samples between spikes";
        return rec;
    }
    rec.trough_voltage = median(troughs);
    rec.margin = rec.trough_voltage - rec.rest_voltage;
    rec.present = rec.margin > th.plateau;
    return rec;
}

AdpRecord detect_adp(const Trajectory& traj, const std::vector<double>& spike_times,
                     const StimulusProtocol& protocol, const SignatureThresholds& th) {
    AdpRecord rec;
    if (spike_times.empty()) throw SignatureError("ADP: no spike in trace");
    const double t_end = traj.times.back();
    double anchor = spike_times.back();
    if (protocol.step) anchor = std::max(anchor, protocol.step->off);
    if (t_end - anchor < th.settle_window)
        throw SignatureError("ADP: trace does not extend a settle window past the last spike");
    rec.settle_voltage = window_mean(traj, t_end - th.settle_window, t_end);

    auto bps = protocol.breakpoints(traj.times.front(), t_end);
    const double start = spike_times.back() + th.refractory_skip;
    std::size_t i = 1;
    while (i + 1 < traj.size() && traj.times[i] <= start) ++i;
    // end of the downstroke
    std::size_t trough = 0;
    for (; i + 1 < traj.size(); ++i)
        if (traj.at(i, 0) <= traj.at(i - 1, 0) && traj.at(i, 0) < traj.at(i + 1, 0)) {
            trough = i;
            break;
        }
    if (!trough) {
        rec.reason = "no trough after the last spike";
        return rec;
    }
    rec.trough_voltage = traj.at(trough, 0);
    for (std::size_t j = trough + 1; j + 1 < traj.size(); ++j) {
        if (!(traj.at(j, 0) > traj.at(j - 1, 0) && traj.at(j, 0) >= traj.at(j + 1, 0))) continue;
        double tol = std::max(1e-9, traj.times[j + 1] - traj.times[j - 1]);
        bool at_bp = std::any_of(bps.begin(), bps.end(),
                                 [&](double b) { return std::fabs(traj.times[j] - b) <= tol; });
        if (at_bp) continue;
        rec.apex_time = traj.times[j];
        rec.apex_voltage = traj.at(j, 0);
        rec.present = rec.apex_voltage - rec.settle_voltage > th.adp;
        if (!rec.present) rec.reason = "hump below threshold";
        return rec;
    }
    rec.reason = "no local maximum after the trough";
    return rec;
}

bool detect_subthreshold_oscillations(const Trajectory& traj, const SignatureThresholds& th) {
    const double t_end = traj.times.back(), t0 = t_end - th.settle_window;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    int changes = 0, last_sign = 0;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        if (traj.times[i - 1] < t0) continue;
        double v = traj.at(i, 0);
        lo = std::min({lo, v, traj.at(i - 1, 0)});
        hi = std::max({hi, v, traj.at(i - 1, 0)});
        double d = v - traj.at(i - 1, 0);
        if (std::fabs(d) < 1e-9) continue;
        int s = d > 0 ? 1 : -1;
        if (last_sign != 0 && s != last_sign) ++changes;
        last_sign = s;
    }
    if (!std::isfinite(lo)) return false;
    return changes >= 2 && hi - lo < th.plateau;
}

SignatureReport analyze(const Trajectory& traj, const StimulusProtocol& protocol,
                        const SignatureThresholds& th) {
    th.validate();
    if (traj.size() < 2) throw SignatureError("trajectory needs at least 2 samples");
    SignatureReport r;
    r.thresholds = th;
    r.spike_times = detect_spikes(traj, th);
    r.latency = measure_latency(r.spike_times, protocol);
    r.plateau = detect_plateau(traj, r.spike_times, protocol, th);
    if (r.spike_times.empty()) r.adp.reason = "no spike in trace";
    else r.adp = detect_adp(traj, r.spike_times, protocol, th);
    r.subthreshold_oscillations = detect_subthreshold_oscillations(traj, th);
    return r;
}

double isi_cv(const std::vector<double>& spike_times, std::size_t last_k) {
    if (spike_times.size() < 3 || last_k < 2) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> isi;
    for (std::size_t i = 1; i < spike_times.size(); ++i)
        isi.push_back(spike_times[i] - spike_times[i - 1]);
    if (isi.size() > last_k) isi.erase(isi.begin(), isi.end() - static_cast<std::ptrdiff_t>(last_k));
    double m = std::accumulate(isi.begin(), isi.end(), 0.0) / isi.size();
    double s = 0;
    for (double d : isi) s += (d - m) * (d - m);
    return std::sqrt(s / isi.size()) / m;
}

std::size_t first_burst_size(const std::vector<double>& spike_times, double growth) {
    if (spike_times.size() < 3) return 0;
    double d0 = spike_times[1] - spike_times[0];
    for (std::size_t i = 2; i < spike_times.size(); ++i)
        if (spike_times[i] - spike_times[i - 1] > growth * d0) return i;
    return 0;
}

SignatureReport robustness_run(const Simulator& sim, const StimulusProtocol& nominal,
                               const std::vector<Pulse>& pulses, const SignatureThresholds& th) {
    Trajectory base = sim(nominal);
    StimulusProtocol pulsed = nominal;
    pulsed.pulses.insert(pulsed.pulses.end(), pulses.begin(), pulses.end());
    Trajectory tr = sim(pulsed);
    SignatureReport r;
    r.thresholds = th;
    r.spike_times = detect_spikes(tr, th);
    r.latency = measure_latency(r.spike_times, pulsed);
    if (pulsed.step) r.plateau = detect_plateau(tr, r.spike_times, pulsed, th);
    r.extra_spike_count = static_cast<int>(r.spike_times.size()) -
                          static_cast<int>(detect_spikes(base, th).size());
    return r;
}

PulseThreshold pulse_threshold(const Simulator& sim, const StimulusProtocol& nominal,
                               double pulse_time, double width, double max_amplitude,
                               const SignatureThresholds& th, double tol) {
    auto extra = [&](double A) {
        return *robustness_run(sim, nominal, {{pulse_time, A, width}}, th).extra_spike_count;
    };
    PulseThreshold pt;
    pt.lo = 0;
    pt.hi = max_amplitude;
    if (extra(max_amplitude) <= 0) return pt;
    pt.found = true;
    double a = 0, b = max_amplitude;
    while (b - a > tol) {
        double m = 0.5 * (a + b);
        if (extra(m) > 0) b = m; else a = m;
    }
    pt.lo = a;
    pt.hi = b;
    pt.amplitude = b;
    return pt;
}

namespace {

struct Hump {
    bool found = false;
    double t = 0, v = 0;
};

// first interior local maximum of v; from a reset the trace may start by falling or rising
Hump first_hump(const Trajectory& tr) {
    for (std::size_t j = 1; j + 1 < tr.size(); ++j)
        if (tr.at(j, 0) > tr.at(j - 1, 0) && tr.at(j, 0) >= tr.at(j + 1, 0))
            return {true, tr.times[j], tr.at(j, 0)};
    return {};
}

IntegratorOptions fine_output() {
    IntegratorOptions o;
    o.output_dt = 0.01;
    return o;
}

Trajectory run_setup(const RobustnessSetup& s, const StimulusProtocol& p) {
    return simulate(s.model, s.start, 0.0, s.t_end, p, fine_output());
}

StimulusProtocol hold_protocol(double hold) {
    StimulusProtocol p;
    p.baseline = hold;
    return p;
}

}  // namespace

RobustnessSetup transcritical_setup(const HybridParams& hp, double hold, double t_end) {
    RobustnessSetup s;
    s.model.kind = ModelKind::hybrid2;
    s.model.hybrid = hp;
    s.hold = hold;
    s.t_end = t_end;
    s.start = {hp.c_reset, hp.d_reset};
    bool rest = false;
    for (const auto& e : hybrid_equilibria(hp, HybridFamily::transcritical_2, hp.I + hold))
        if (e.stable) {
            s.rest_voltage = e.v;
            rest = true;
            break;
        }
    if (!rest) throw SignatureError("transcritical setup: no stable rest at the holding current");
    Trajectory tr = run_setup(s, hold_protocol(hold));
    if (!tr.events.empty()) throw SignatureError("transcritical setup: nominal run spikes");
    Hump h = first_hump(tr);
    if (!h.found) throw SignatureError("transcritical setup: nominal run has no ADP hump");
    s.apex_time = h.t;
    s.apex_voltage = h.v;
    return s;
}

RobustnessSetup matched_fold_setup(const RobustnessSetup& tc, double d_lo, double d_hi,
                                   int d_steps) {
    const HybridParams& hp = tc.model.hybrid;
    auto eq = hybrid_equilibria(hp, HybridFamily::transcritical_2, hp.I + tc.hold);
    if (eq.size() != 2) throw SignatureError("fold matching: transcritical model needs rest and saddle");
    double v_rest = 0, v_saddle = 0;
    for (const auto& e : eq) (e.stable ? v_rest : v_saddle) = e.v;
    HybridParams fp = hp;
    fp.a = v_rest + v_saddle;
    // fold equilibria: v^2 - a v + (I + hold) - w0 = 0 with roots v_rest, v_saddle
    fp.w0 = (hp.I + tc.hold) - v_rest * v_saddle;
    const double target = tc.apex_voltage - tc.rest_voltage;
    RobustnessSetup best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < d_steps; ++k) {
        double d = d_lo + (d_hi - d_lo) * k / (d_steps - 1);
        RobustnessSetup s;
        s.model.kind = ModelKind::fold;
        s.model.hybrid = fp;
        s.model.hybrid.d_reset = d;
        s.hold = tc.hold;
        s.t_end = tc.t_end;
        s.start = {fp.c_reset, d};
        s.rest_voltage = v_rest;
        Trajectory tr;
        try {
            tr = run_setup(s, hold_protocol(tc.hold));
        } catch (const IntegrationError&) {
            continue;
        }
        if (!tr.events.empty()) continue;
        Hump h = first_hump(tr);
        // a hump right at the reset instant is the reset transient, not an ADP
        if (!h.found || h.t < 1.0 || h.v - v_rest <= 1.0) continue;
        double gap = std::fabs((h.v - v_rest) - target);
        if (gap < best_gap) {
            best_gap = gap;
            s.apex_time = h.t;
            s.apex_voltage = h.v;
            best = s;
        }
    }
    if (!std::isfinite(best_gap)) throw SignatureError("fold matching: no reset value gives an ADP");
    return best;
}

PulseThreshold setup_threshold(const RobustnessSetup& s, double width, double max_amplitude,
                               double tol) {
    Simulator sim = [&s](const StimulusProtocol& p) { return run_setup(s, p); };
    return pulse_threshold(sim, hold_protocol(s.hold), s.apex_time, width, max_amplitude,
                           SignatureThresholds::hybrid(s.model.hybrid.v_th), tol);
}

}  // namespace hhca
