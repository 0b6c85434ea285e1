"""Independent reference values for the unit tests.

mpmath at 40 digits for the algebraic quantities, scipy's DOP853 for the
trajectory-based ones. Nothing here shares code with the C++ library.
Run: python3 tests/oracles/compute_oracles.py > tests/oracles/oracles.txt
"""
import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp

mp.mp.dps = 40

CLASSIC = dict(C=1, gNa=120, gK=36, gL=0.3, gCa=0.0, VNa=120, VK=-12, VL=10.6, VCa=150, Ipump=0.0, a=3)
CALCIUM = dict(CLASSIC, gCa=2.7, Ipump=-17.0)


def vtrap(x):
    return 10 if x == 0 else x / mp.expm1(x / 10)


def rates(V):
    V = mp.mpf(V)
    an = mp.mpf("0.01") * vtrap(10 - V)
    bn = mp.mpf("0.125") * mp.exp(-V / 80)
    am = mp.mpf("0.1") * vtrap(25 - V)
    bm = 4 * mp.exp(-V / 18)
    ah = mp.mpf("0.07") * mp.exp(-V / 20)
    bh = 1 / (mp.exp((30 - V) / 10) + 1)
    return an, bn, am, bm, ah, bh


def ninf(V):
    an, bn, *_ = rates(V)
    return an / (an + bn)


def minf(V):
    _, _, am, bm, _, _ = rates(V)
    return am / (am + bm)


def fV(V, n, p, I=0):
    V = mp.mpf(V)
    n = mp.mpf(n)
    return (-p["gK"] * n**4 * (V - p["VK"]) - p["gNa"] * minf(V) ** 3 * (mp.mpf("0.89") - mp.mpf("1.1") * n) * (V - p["VNa"])
            - mp.mpf(p["gL"]) * (V - mp.mpf(p["VL"])) - mp.mpf(p["gCa"]) * n ** p["a"] * (V - p["VCa"]) + mp.mpf(p["Ipump"]) + I) / p["C"]


def gn(V, n):
    an, bn, *_ = rates(V)
    return an * (1 - n) - bn * n


def jac(V, n, p, I):
    return [[mp.diff(lambda x: fV(x, n, p, I), V), mp.diff(lambda y: fV(V, y, p, I), n)],
            [mp.diff(lambda x: gn(x, n), V), mp.diff(lambda y: gn(V, y), n)]]


def classify(J):
    tr = J[0][0] + J[1][1]
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    disc = tr * tr - 4 * det
    if det < 0:
        return "saddle"
    kind = "focus" if disc < 0 else "node"
    return ("stable-" if tr < 0 else "unstable-") + kind


def equilibria(p, I=0):
    h = lambda V: fV(V, ninf(V), p, I)
    out = []
    grid = [(-100 + 0.25 * k) for k in range(1041)]
    for a, b in zip(grid, grid[1:]):
        if h(a) * h(b) < 0:
            out.append(mp.findroot(h, (a, b), solver="bisect" if False else "anderson"))
    return out


def line(name, value):
    if isinstance(value, str):
        print(f"{name} = {value}")
    else:
        print(f"{name} = {mp.nstr(value, 17)}")


def main():
    for V in (-20, 0, 10, 25, 60):
        an, bn, am, bm, ah, bh = rates(V)
        line(f"rates V={V} alpha_n", an)
        line(f"rates V={V} beta_n", bn)
        line(f"rates V={V} alpha_m", am)
        line(f"rates V={V} beta_m", bm)
        line(f"rates V={V} alpha_h", ah)
        line(f"rates V={V} beta_h", bh)
        line(f"n_inf V={V}", ninf(V))
        line(f"m_inf V={V}", minf(V))

    for tag, p in (("classic", CLASSIC), ("calcium", CALCIUM)):
        line(f"reduced_rhs {tag} (5,0.4) V", fV(5, "0.4", p))
        line(f"reduced_rhs {tag} (5,0.4) n", gn(5, mp.mpf("0.4")))
        J = jac(mp.mpf(5), mp.mpf("0.4"), p, 0)
        for i, k in enumerate(("VV", "Vn", "nV", "nn")):
            line(f"jacobian {tag} (5,0.4) {k}", J[i // 2][i % 2])
        for V in equilibria(p):
            J = jac(V, ninf(V), p, 0)
            line(f"equilibrium {tag} I=0 V", V)
            line(f"equilibrium {tag} I=0 kind", classify(J))

    # transcritical: grad f_V = 0, then I_tc makes f_V vanish there
    p = CALCIUM
    gV = lambda V, n: mp.diff(lambda x: fV(x, n, p), V)
    gN = lambda V, n: mp.diff(lambda y: fV(V, y, p), n)
    Vt, nt = mp.findroot([gV, gN], (mp.mpf("5.5"), mp.mpf("0.43")))
    Itc = -fV(Vt, nt, p)
    line("transcritical calcium V", Vt)
    line("transcritical calcium n", nt)
    line("transcritical calcium I", Itc)
    fxx = mp.diff(lambda x: fV(x, nt, p), Vt, 2)
    fyy = mp.diff(lambda y: fV(Vt, y, p), nt, 2)
    fxy = mp.diff(lambda x, y: fV(x, y, p), (Vt, nt), (1, 1))
    line("transcritical calcium f_VV", fxx)
    line("transcritical calcium f_Vn", fxy)
    line("transcritical calcium f_nn", fyy)
    line("transcritical calcium hessian_det", fxx * fyy - fxy**2)
    al, be, ga = fxx / 2, fxy / 2, fyy / 2
    D = be**2 - ga * al
    line("normalform alpha", al)
    line("normalform beta", be)
    line("normalform gamma", ga)
    line("normalform lambda", -be / mp.sqrt(D))
    line("normalform eps_tilde", -mp.sqrt(D) * gn(Vt, nt))

    q = CLASSIC
    gV = lambda V, n: mp.diff(lambda x: fV(x, n, q), V)
    gN = lambda V, n: mp.diff(lambda y: fV(V, y, q), n)
    Vc, nc = mp.findroot([gV, gN], (mp.mpf("-10"), mp.mpf("0.1")))
    line("transcritical classic V", Vc)
    line("transcritical classic n", nc)
    line("transcritical classic I", -fV(Vc, nc, q))

    # saddle-node of equilibria: I(V) = -f_V(V, n_inf(V)) stationary on the lower branch
    Ieq = lambda V: -fV(V, ninf(V), CALCIUM)
    Vsn = mp.findroot(lambda V: mp.diff(Ieq, V), mp.mpf(-20))
    line("saddle-node calcium V", Vsn)
    line("saddle-node calcium I", Ieq(Vsn))

    # Hopf on the classic rest branch: trace of the Jacobian crosses zero
    def tr_at(I):
        V = equilibria(CLASSIC, I)[0]
        J = jac(V, ninf(V), CLASSIC, I)
        return J[0][0] + J[1][1]
    Ih = mp.findroot(tr_at, (mp.mpf(5), mp.mpf(7)), solver="anderson")
    line("hopf classic I", Ih)

    for V in (-10, 0):
        vals = [fV(V, mp.mpf(k) / 200, CALCIUM) for k in (0, 100, 200)]
        for k, v in zip((0, 100, 200), vals):
            line(f"ionic calcium V={V} n={k / 200}", -v)

    hybrid_oracles()
    trajectory_oracles()


def hybrid_oracles():
    # 2-variable transcritical hybrid model, a=0.1, eps=0.1, w0=-4
    a, eps, w0, vth = 0.1, 0.1, -4.0, 100.0

    def outcome(I, c, d):
        # equilibria: v^2 - (a v + w0)^2 + I = 0
        A, B, Cc = 1 - a * a, -2 * a * w0, -w0 * w0 + I
        roots = sorted(np.roots([A, B, Cc]).real)
        vr = roots[0]
        wr = a * vr + w0
        f = lambda t, x: [x[0] ** 2 - x[1] ** 2 + I, eps * (a * x[0] - x[1] + w0)]
        hit = lambda t, x: x[0] - vth
        hit.terminal, hit.direction = True, 1
        sol = solve_ivp(f, (0, 1e4), [c, d], method="DOP853", rtol=1e-11, atol=1e-12, events=hit)
        if sol.t_events[0].size:
            return "spike"
        assert abs(sol.y[0, -1] - vr) < 1e-6 and abs(sol.y[1, -1] - wr) < 1e-6
        return "rest"

    for c, d in ((0, 5), (-2, 3), (0, 10)):
        lo, hi = -2.0, 2.0
        olo = outcome(lo, c, d)
        while hi - lo > 1e-7:
            m = 0.5 * (lo + hi)
            if outcome(m, c, d) == olo:
                lo = m
            else:
                hi = m
        print(f"hybrid homoclinic reset=({c},{d}) I = {0.5 * (lo + hi):.10f}")

    I = 1.0
    for w0v in (3.2, -4.0):
        A, B, Cc = 1 - a * a, -2 * a * w0v, -w0v * w0v + I
        for v in sorted(np.roots([A, B, Cc]).real):
            print(f"hybrid equilibrium w0={w0v} I={I} v = {v:.17g}")


def trajectory_oracles():
    # reduced calcium model step: rest at I=0, then I_app = 12 for 300 ms
    def rhs(p, I):
        def f(t, x):
            return [float(fV(x[0], x[1], p, I)), float(gn(x[0], x[1]))]
        return f

    V0 = float(equilibria(CALCIUM)[0])
    x0 = [V0, float(ninf(V0))]
    up = lambda t, x: x[0] - 20.0
    up.direction = 1
    sol = solve_ivp(rhs(CALCIUM, 12.0), (0, 100), x0, method="DOP853", rtol=1e-11, atol=1e-12,
                    events=up, dense_output=True)
    print(f"calcium reduced step first crossing of 20 mV = {sol.t_events[0][0]:.10f}")
    print(f"calcium reduced step V(50) = {sol.sol(50.0)[0]:.12f}")

    # hybrid homoclinic-free 3-variable run: first reset time for w0=-4 step to I=85 from rest
    a, b, eps, w0, epsz = 0.1, -3.0, 1.0, -4.0, 0.1
    A, B, Cc = 1 + b * a - a * a, b * w0 - 2 * a * w0, -w0 * w0 - 5.0
    vr = sorted(np.roots([A, B, Cc]).real)[0]
    f = lambda t, x: [x[0] ** 2 + b * x[0] * x[1] - x[1] ** 2 + 85.0 - x[2], eps * (a * x[0] - x[1] + w0), -epsz * x[2]]
    hit = lambda t, x: x[0] - 100.0
    hit.terminal, hit.direction = True, 1
    sol = solve_ivp(f, (0, 50), [vr, a * vr + w0, 0.0], method="DOP853", rtol=1e-12, atol=1e-12, events=hit)
    print(f"tc high-ca rest v = {vr:.15f}")
    print(f"tc high-ca first reset after step = {sol.t_events[0][0]:.10f}")


if __name__ == "__main__":
    main()
