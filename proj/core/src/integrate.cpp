#include "hhca/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace hhca {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Hairer's continuous extension
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kBeta = 0.04, kExpo1 = 0.2 - kBeta * 0.75, kSafe = 0.9, kFacc1 = 5.0,
                 kFacc2 = 0.1;

}  // namespace

void StimulusProtocol::validate() const {
    if (!std::isfinite(baseline)) throw std::invalid_argument("protocol: baseline not finite");
    if (step) {
        if (!(step->on < step->off)) throw std::invalid_argument("protocol: step on must be < off");
        if (!std::isfinite(step->amplitude))
            throw std::invalid_argument("protocol: step amplitude not finite");
    }
    for (const auto& p : pulses) {
        if (!(p.width > 0)) throw std::invalid_argument("protocol: pulse width must be > 0");
        if (!std::isfinite(p.time) || !std::isfinite(p.amplitude))
            throw std::invalid_argument("protocol: pulse not finite");
    }
}

double StimulusProtocol::current(double t) const {
    double I = baseline;
    if (step && t >= step->on && t < step->off) I += step->amplitude;
    for (const auto& p : pulses)
        if (t >= p.time && t < p.time + p.width) I += p.amplitude;
    return I;
}

std::vector<double> StimulusProtocol::breakpoints(double t0, double t1) const {
    std::vector<double> b;
    auto add = [&](double t) {
        if (t > t0 && t < t1) b.push_back(t);
    };
    if (step) {
        add(step->on);
        add(step->off);
    }
    for (const auto& p : pulses) {
        add(p.time);
        add(p.time + p.width);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

void IntegratorOptions::validate() const {
    if (!(rtol > 0 && atol > 0 && event_tol > 0 && convergence_radius > 0 && divergence_bound > 0))
        throw std::invalid_argument("integrator: tolerances must be > 0");
    if (!(max_step > 0)) throw std::invalid_argument("integrator: max_step must be > 0");
    if (output_dt < 0) throw std::invalid_argument("integrator: output_dt must be >= 0");
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::time_limit: return "time-limit";
        case Termination::converged: return "converged-to-equilibrium";
        case Termination::diverged: return "diverged";
        case Termination::error: return "error";
    }
    return "error";
}

std::vector<double> Trajectory::component(std::size_t k) const {
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = states[i * dim + k];
    return out;
}

std::vector<double> Trajectory::back() const {
    if (times.empty()) return {};
    return {states.end() - static_cast<std::ptrdiff_t>(dim), states.end()};
}

OdeStepper::OdeStepper(VectorField f, const IntegratorOptions& opts)
    : f_(std::move(f)), o_(opts), n_(f_.dim) {
    for (auto* v : {&x_, &x_old_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_, &err_,
                    &r1_, &r2_, &r3_, &r4_, &r5_})
        v->assign(n_, 0.0);
}

void OdeStepper::reset(double t, const double* x, double I) {
    t_ = t_old_ = t;
    I_ = I;
    std::copy(x, x + n_, x_.begin());
    x_old_ = x_;
    f_.eval(t_, x_.data(), I_, k1_.data());
    fresh_ = true;
    h_ = 0.0;  // a step size from the previous segment may be far too large after a jump in I
    facold_ = 1e-4;
    // dense output degenerates to a constant until the first step
    r1_ = x_;
    std::fill(r2_.begin(), r2_.end(), 0.0);
    std::fill(r3_.begin(), r3_.end(), 0.0);
    std::fill(r4_.begin(), r4_.end(), 0.0);
    std::fill(r5_.begin(), r5_.end(), 0.0);
}

double OdeStepper::err_norm(const std::vector<double>& err, const std::vector<double>& y0,
                            const std::vector<double>& y1) const {
    double e = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        double sk = o_.atol + o_.rtol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
        double r = std::fabs(err[i]) / sk;
        if (!std::isfinite(r)) return r;  // std::max would drop a NaN
        e = std::max(e, r);
    }
    return e;
}

double OdeStepper::initial_step(double t_stop) {
    // Hairer's starting-step heuristic
    double dnf = 0, dny = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        double sk = o_.atol + o_.rtol * std::fabs(x_[i]);
        dnf = std::max(dnf, std::fabs(k1_[i]) / sk);
        dny = std::max(dny, std::fabs(x_[i]) / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
    h = std::min({h, o_.max_step, std::fabs(t_stop - t_)});
    for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = x_[i] + dir_ * h * k1_[i];
    f_.eval(t_ + dir_ * h, ytmp_.data(), I_, k2_.data());
    double der2 = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        double sk = o_.atol + o_.rtol * std::fabs(x_[i]);
        der2 = std::max(der2, std::fabs(k2_[i] - k1_[i]) / sk);
    }
    der2 /= h;
    double der12 = std::max(der2, dnf);
    double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    h = std::min({100 * h, h1, o_.max_step, std::fabs(t_stop - t_)});
    return h;
}

bool OdeStepper::step(double t_stop) {
    double span = (t_stop - t_) * dir_;
    if (span <= 0) return false;
    if (fresh_ || h_ <= 0) {
        if (h_ <= 0) h_ = o_.initial_step > 0 ? o_.initial_step : initial_step(t_stop);
        fresh_ = false;
    }
    bool rejected = false;
    for (;;) {
        double h = std::min(h_, o_.max_step);
        bool last = false;
        if (h >= span * (1.0 - 1e-12)) {
            h = span;
            last = true;
        }
        if (h < 1e-14 * std::max(1.0, std::fabs(t_)))
            throw IntegrationError("step size underflow", t_, x_);
        const double hs = dir_ * h;
        const double t = t_;
        const double* y = x_.data();
        for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y[i] + hs * a21 * k1_[i];
        f_.eval(t + c2 * hs, ytmp_.data(), I_, k2_.data());
        for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y[i] + hs * (a31 * k1_[i] + a32 * k2_[i]);
        f_.eval(t + c3 * hs, ytmp_.data(), I_, k3_.data());
        for (std::size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + hs * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
        f_.eval(t + c4 * hs, ytmp_.data(), I_, k4_.data());
        for (std::size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + hs * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        f_.eval(t + c5 * hs, ytmp_.data(), I_, k5_.data());
        for (std::size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + hs * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] +
                                    a65 * k5_[i]);
        double tnew = last ? t_stop : t + hs;
        f_.eval(tnew, ytmp_.data(), I_, k6_.data());
        for (std::size_t i = 0; i < n_; ++i)
            ynew_[i] = y[i] + hs * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] +
                                    a76 * k6_[i]);
        f_.eval(tnew, ynew_.data(), I_, k7_.data());
        for (std::size_t i = 0; i < n_; ++i)
            err_[i] = hs * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                            e7 * k7_[i]);
        double err = err_norm(err_, x_, ynew_);
        if (!std::isfinite(err)) {
            h_ = 0.1 * h;
            rejected = true;
            continue;
        }
        double fac11 = std::pow(err, kExpo1);
        double fac = fac11 / std::pow(facold_, kBeta);
        fac = std::max(kFacc2, std::min(kFacc1, fac / kSafe));
        double hnew = h / fac;
        if (err <= 1.0) {
            facold_ = std::max(err, 1e-4);
            for (std::size_t i = 0; i < n_; ++i) {
                double ydiff = ynew_[i] - y[i];
                double bspl = hs * k1_[i] - ydiff;
                r1_[i] = y[i];
                r2_[i] = ydiff;
                r3_[i] = bspl;
                r4_[i] = ydiff - hs * k7_[i] - bspl;
                r5_[i] = hs * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] +
                               d6 * k6_[i] + d7 * k7_[i]);
            }
            if (rejected) hnew = std::min(hnew, h);
            x_old_ = x_;
            t_old_ = t_;
            x_.swap(ynew_);
            k1_.swap(k7_);
            t_ = tnew;
            h_last_ = h;
            // keep the controller's proposal even when the step was clipped
            h_ = last ? std::max(hnew, h_) : hnew;
            ++naccept_;
            if (naccept_ > o_.max_steps) throw IntegrationError("step budget exhausted", t_, x_);
            return true;
        }
        h_ = h / std::min(kFacc1, fac11 / kSafe);
        rejected = true;
    }
}

void OdeStepper::dense(double t, double* out) const {
    if (t == t_) {
        std::copy(x_.begin(), x_.end(), out);
        return;
    }
    double h = t_ - t_old_;
    double th = h == 0 ? 0.0 : (t - t_old_) / h, th1 = 1.0 - th;
    for (std::size_t i = 0; i < n_; ++i)
        out[i] = r1_[i] + th * (r2_[i] + th1 * (r3_[i] + th * (r4_[i] + th1 * r5_[i])));
}

double OdeStepper::dense_component(double t, std::size_t i) const {
    if (t == t_) return x_[i];
    double h = t_ - t_old_;
    double th = h == 0 ? 0.0 : (t - t_old_) / h, th1 = 1.0 - th;
    return r1_[i] + th * (r2_[i] + th1 * (r3_[i] + th * (r4_[i] + th1 * r5_[i])));
}

namespace {

struct Recorder {
    Trajectory& tr;
    double t0, dt;
    long long next = 1;

    void push(double t, const double* x) {
        if (!tr.times.empty() && !(t > tr.times.back())) return;
        tr.times.push_back(t);
        tr.states.insert(tr.states.end(), x, x + tr.dim);
    }
    // record what the stepper covered, up to (and including) t_end
    void covered(const OdeStepper& s, double t_end, bool include_end) {
        if (dt <= 0) {
            if (include_end) {
                std::vector<double> buf(tr.dim);
                s.dense(t_end, buf.data());
                push(t_end, buf.data());
            }
            return;
        }
        std::vector<double> buf(tr.dim);
        for (;;) {
            double tg = t0 + static_cast<double>(next) * dt;
            if (tg > t_end) break;
            if (tg == t_end && !include_end) break;
            s.dense(tg, buf.data());
            push(tg, buf.data());
            ++next;
        }
    }
};

bool diverged(const std::vector<double>& x, double bound) {
    for (double v : x)
        if (!std::isfinite(v) || std::fabs(v) > bound) return true;
    return false;
}

Trajectory run(const VectorField& f, const HybridSystem* hyb, const std::vector<double>& s0,
               double t0, double t1, const StimulusProtocol& protocol,
               const IntegratorOptions& opts) {
    if (!(t1 > t0)) throw std::invalid_argument("integrate: t1 must be > t0");
    if (s0.size() != f.dim) throw std::invalid_argument("integrate: state dimension mismatch");
    for (double v : s0)
        if (!std::isfinite(v)) throw std::invalid_argument("integrate: initial state not finite");
    opts.validate();
    protocol.validate();
    if (hyb && !(s0[hyb->guard_index] < hyb->threshold))
        throw std::invalid_argument("integrate_hybrid: initial state at or above threshold");

    Trajectory tr;
    tr.dim = f.dim;
    Recorder rec{tr, t0, opts.output_dt};
    rec.push(t0, s0.data());

    std::vector<double> bps = protocol.breakpoints(t0, t1);
    bps.push_back(t1);
    OdeStepper st(f, opts);
    std::vector<double> x = s0;
    double t = t0;
    const std::size_t g = hyb ? hyb->guard_index : 0;
    std::vector<double> buf(f.dim);

    for (std::size_t seg = 0; seg < bps.size(); ++seg) {
        const double t_end = bps[seg];
        const bool last_seg = seg + 1 == bps.size();
        const double I = protocol.current(0.5 * (t + t_end));
        st.reset(t, x.data(), I);
        int quiet = 0;
        while (true) {
            if (!st.step(t_end)) break;
            if (hyb && st.x_prev()[g] < hyb->threshold && st.x()[g] >= hyb->threshold) {
                double lo = st.t_prev(), hi = st.t();
                for (int it = 0; it < 30 && hi - lo > opts.event_tol; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (st.dense_component(mid, g) >= hyb->threshold) hi = mid; else lo = mid;
                }
                std::vector<double> pre(f.dim);
                st.dense(hi, pre.data());
                if (pre[g] < hyb->threshold) pre[g] = hyb->threshold;
                rec.covered(st, hi, false);
                rec.push(hi, pre.data());
                std::vector<double> post = hyb->reset(pre);
                tr.events.push_back({hi, pre, post});
                if (tr.events.size() > opts.max_events)
                    throw IntegrationError("runaway spiking: event budget exceeded", hi, post);
                t = hi;
                x = post;
                st.reset(t, x.data(), I);
                quiet = 0;
                continue;
            }
            rec.covered(st, st.t(), opts.output_dt <= 0 || st.t() == t1);
            t = st.t();
            x = st.x();
            if (diverged(x, opts.divergence_bound)) {
                rec.push(t, x.data());
                tr.termination = Termination::diverged;
                tr.message = "state norm exceeded divergence bound";
                return tr;
            }
            if (opts.detect_equilibrium && last_seg) {
                double speed = 0, move = 0;
                for (std::size_t i = 0; i < f.dim; ++i) {
                    speed = std::max(speed, std::fabs(st.dx()[i]));
                    move = std::max(move, std::fabs(st.x()[i] - st.x_prev()[i]));
                }
                quiet = (speed < 1e-9 && move < opts.convergence_radius) ? quiet + 1 : 0;
                if (quiet >= 3) {
                    rec.push(t, x.data());
                    tr.termination = Termination::converged;
                    return tr;
                }
            }
        }
    }
    rec.push(t1, x.data());
    tr.termination = Termination::time_limit;
    return tr;
}

}  // namespace

Trajectory integrate(const VectorField& f, const std::vector<double>& s0, double t0, double t1,
                     const StimulusProtocol& protocol, const IntegratorOptions& opts) {
    return run(f, nullptr, s0, t0, t1, protocol, opts);
}

Trajectory integrate_hybrid(const HybridSystem& sys, const std::vector<double>& s0, double t0,
                            double t1, const StimulusProtocol& protocol,
                            const IntegratorOptions& opts) {
    if (!sys.reset) throw std::invalid_argument("integrate_hybrid: no reset map");
    return run(sys.field, &sys, s0, t0, t1, protocol, opts);
}

}  // namespace hhca
