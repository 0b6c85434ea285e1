#include "hhca/phaseplane.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <unordered_map>

namespace hhca {

void Box::validate() const {
    if (!(x_max > x_min && y_max > y_min) || !std::isfinite(x_min) || !std::isfinite(x_max) ||
        !std::isfinite(y_min) || !std::isfinite(y_max))
        throw ValidationError("box is degenerate");
}

PlanarField reduced_field(const ModelParams& p) {
    p.validate();
    PlanarField f;
    f.f = [p](double V, double n) {
        PlanarState d = reduced_rhs({V, n}, p);
        return std::array<double, 2>{d.V, d.n};
    };
    f.jac = [p](double V, double n) { return reduced_jacobian({V, n}, p); };
    f.y_nullcline = [](double V) { return n_inf(V); };
    return f;
}

PlanarField hybrid_field(const HybridParams& p, HybridFamily family) {
    PlanarField f;
    f.x_name = "v";
    f.y_name = "w";
    switch (family) {
        case HybridFamily::fold:
            f.f = [p](double v, double w) {
                return std::array<double, 2>{v * v - w + p.I, p.eps * (p.a * v - w + p.w0)};
            };
            f.jac = [p](double v, double) { return Mat2{2 * v, -1.0, p.eps * p.a, -p.eps}; };
            break;
        case HybridFamily::transcritical_3:
            // z = 0 slice
            f.f = [p](double v, double w) {
                return std::array<double, 2>{v * v + p.b * v * w - w * w + p.I,
                                             p.eps * (p.a * v - w + p.w0)};
            };
            f.jac = [p](double v, double w) {
                return Mat2{2 * v + p.b * w, p.b * v - 2 * w, p.eps * p.a, -p.eps};
            };
            break;
        default:
            f.f = [p](double v, double w) {
                return std::array<double, 2>{v * v - w * w + p.I, p.eps * (p.a * v - w + p.w0)};
            };
            f.jac = [p](double v, double w) { return Mat2{2 * v, -2 * w, p.eps * p.a, -p.eps}; };
            break;
    }
    f.y_nullcline = [p](double v) { return p.a * v + p.w0; };
    return f;
}

Box default_box(HybridFamily) { return Box{-40.0, 40.0, -40.0, 40.0}; }

namespace {

Point2 refine_edge(const std::function<double(double, double)>& g, Point2 a, double ga, Point2 b,
                   double gb, double tol) {
    // ga < 0 <= gb (or the reverse); bisect along the edge
    if (ga >= 0) {
        std::swap(a, b);
        std::swap(ga, gb);
    }
    if (gb == 0.0) return b;
    double lo = 0.0, hi = 1.0;
    double s = ga / (ga - gb);
    Point2 p{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
    double gp = g(p.x, p.y);
    if (std::fabs(gp) <= tol) return p;
    if (gp < 0) lo = s; else hi = s;
    for (int it = 0; it < 100; ++it) {
        s = 0.5 * (lo + hi);
        p = {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
        gp = g(p.x, p.y);
        if (std::fabs(gp) <= tol || hi - lo < 1e-16) break;
        if (gp < 0) lo = s; else hi = s;
    }
    return p;
}

}  // namespace

std::vector<Polyline> contour_zero(const std::function<double(double, double)>& g, const Box& box,
                                   int resolution, double curve_tol) {
    box.validate();
    if (resolution < 16) throw ValidationError("contour resolution must be >= 16");
    const int N = resolution, M = N + 1;
    auto X = [&](int i) { return box.x_min + box.width() * i / N; };
    auto Y = [&](int j) { return box.y_min + box.height() * j / N; };
    std::vector<double> val(static_cast<std::size_t>(M) * M);
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) val[static_cast<std::size_t>(j) * M + i] = g(X(i), Y(j));
    auto V = [&](int i, int j) { return val[static_cast<std::size_t>(j) * M + i]; };

    std::vector<std::pair<int, int>> bad;
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
            if (!std::isfinite(V(i, j)) || !std::isfinite(V(i + 1, j)) ||
                !std::isfinite(V(i, j + 1)) || !std::isfinite(V(i + 1, j + 1)))
                bad.emplace_back(i, j);
    if (!bad.empty()) {
        std::ostringstream os;
        os << "field is non-finite on " << bad.size() << " grid cell(s):";
        for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 20); ++k)
            os << " (" << bad[k].first << "," << bad[k].second << ")";
        throw NonFiniteFieldError(os.str(), std::move(bad));
    }

    std::vector<Point2> pts;
    std::unordered_map<std::int64_t, int> edge_pt;
    std::vector<std::array<int, 2>> adj;
    // edge ids: horizontal (i,j)-(i+1,j) -> 2*(j*M+i); vertical (i,j)-(i,j+1) -> 2*(j*M+i)+1
    auto point_on = [&](int i, int j, bool vertical) {
        std::int64_t id = 2 * (static_cast<std::int64_t>(j) * M + i) + (vertical ? 1 : 0);
        auto it = edge_pt.find(id);
        if (it != edge_pt.end()) return it->second;
        int i2 = vertical ? i : i + 1, j2 = vertical ? j + 1 : j;
        Point2 p = refine_edge(g, {X(i), Y(j)}, V(i, j), {X(i2), Y(j2)}, V(i2, j2), curve_tol);
        int k = static_cast<int>(pts.size());
        pts.push_back(p);
        adj.push_back({-1, -1});
        edge_pt.emplace(id, k);
        return k;
    };
    auto link = [&](int a, int b) {
        if (a == b) return;
        auto add = [&](int u, int w) {
            if (adj[u][0] == w || adj[u][1] == w) return;
            if (adj[u][0] < 0) adj[u][0] = w;
            else if (adj[u][1] < 0) adj[u][1] = w;
        };
        add(a, b);
        add(b, a);
    };

    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) {
            bool b0 = V(i, j) >= 0, b1 = V(i + 1, j) >= 0, b2 = V(i + 1, j + 1) >= 0,
                 b3 = V(i, j + 1) >= 0;
            int cnt = (b0 != b1) + (b1 != b2) + (b3 != b2) + (b0 != b3);
            if (cnt == 0) continue;
            auto bottom = [&] { return point_on(i, j, false); };
            auto right = [&] { return point_on(i + 1, j, true); };
            auto top = [&] { return point_on(i, j + 1, false); };
            auto left = [&] { return point_on(i, j, true); };
            if (cnt == 2) {
                int e[2], k = 0;
                if (b0 != b1) e[k++] = bottom();
                if (b1 != b2) e[k++] = right();
                if (b3 != b2) e[k++] = top();
                if (b0 != b3) e[k++] = left();
                link(e[0], e[1]);
            } else {
                double c = g(0.5 * (X(i) + X(i + 1)), 0.5 * (Y(j) + Y(j + 1)));
                if ((c >= 0) != b0) {
                    link(bottom(), left());
                    link(right(), top());
                } else {
                    link(bottom(), right());
                    link(top(), left());
                }
            }
        }
    }

    std::vector<Polyline> lines;
    std::vector<char> used(pts.size(), 0);
    auto walk = [&](int start) {
        Polyline line;
        int prev = -1, cur = start;
        while (cur >= 0 && !used[cur]) {
            used[cur] = 1;
            line.push_back(pts[cur]);
            int nxt = adj[cur][0] != prev ? adj[cur][0] : adj[cur][1];
            if (nxt >= 0 && used[nxt] && nxt == start && line.size() > 2) line.push_back(pts[start]);
            prev = cur;
            cur = nxt;
        }
        if (line.size() >= 2) lines.push_back(std::move(line));
    };
    for (std::size_t k = 0; k < pts.size(); ++k)
        if (!used[k] && (adj[k][0] < 0 || adj[k][1] < 0)) walk(static_cast<int>(k));
    for (std::size_t k = 0; k < pts.size(); ++k)
        if (!used[k]) walk(static_cast<int>(k));
    return lines;
}

NullclineSet extract_nullclines(const PlanarField& field, const Box& box,
                                const NullclineOptions& opts) {
    box.validate();
    NullclineSet nc;
    nc.box = box;
    nc.resolution = opts.resolution;
    nc.x_nullcline = contour_zero([&](double x, double y) { return field.f(x, y)[0]; }, box,
                                  opts.resolution, opts.curve_tol);
    if (field.y_nullcline) {
        // sample densely enough that consecutive vertices are < half a cell apart (normalized)
        const double cell = 1.0 / opts.resolution;
        Polyline cur;
        auto flush = [&] {
            if (cur.size() >= 2) nc.y_nullcline.push_back(cur);
            cur.clear();
        };
        auto emit = [&](double x) {
            Point2 p{x, field.y_nullcline(x)};
            if (box.contains(p) && std::isfinite(p.y)) cur.push_back(p);
            else flush();
        };
        double x = box.x_min;
        emit(x);
        const double dx0 = box.width() * cell;
        while (x < box.x_max) {
            double dx = std::min(dx0, box.x_max - x);
            double y0 = field.y_nullcline(x);
            for (int k = 0; k < 40; ++k) {
                double dy = (field.y_nullcline(x + dx) - y0) / box.height();
                if (std::fabs(dy) <= 0.5 * cell) break;
                dx *= 0.5;
            }
            x = (box.x_max - x <= dx) ? box.x_max : x + dx;
            emit(x);
        }
        flush();
    } else {
        nc.y_nullcline = contour_zero([&](double x, double y) { return field.f(x, y)[1]; }, box,
                                      opts.resolution, opts.curve_tol);
    }
    return nc;
}

std::string to_string(FixedPointKind k) {
    switch (k) {
        case FixedPointKind::stable_node: return "stable-node";
        case FixedPointKind::stable_focus: return "stable-focus";
        case FixedPointKind::saddle: return "saddle";
        case FixedPointKind::unstable_node: return "unstable-node";
        case FixedPointKind::unstable_focus: return "unstable-focus";
        case FixedPointKind::nonhyperbolic: return "nonhyperbolic";
    }
    return "nonhyperbolic";
}

std::array<std::complex<double>, 2> eigenvalues(const Mat2& J) {
    double tr = J[0] + J[3], det = J[0] * J[3] - J[1] * J[2];
    double h = 0.5 * tr, disc = h * h - det;
    if (disc >= 0) {
        double s = std::sqrt(disc);
        // avoid cancellation for the small root
        double big = h >= 0 ? h + s : h - s;
        double small = big != 0.0 ? det / big : 0.0;
        double l1 = std::min(big, small), l2 = std::max(big, small);
        return {std::complex<double>(l1, 0.0), std::complex<double>(l2, 0.0)};
    }
    double s = std::sqrt(-disc);
    return {std::complex<double>(h, -s), std::complex<double>(h, s)};
}

FixedPointKind classify(const Mat2& J) {
    double tr = J[0] + J[3], det = J[0] * J[3] - J[1] * J[2];
    if (det < 0) return FixedPointKind::saddle;
    auto ev = eigenvalues(J);
    for (const auto& l : ev)
        if (std::fabs(l.real()) < 1e-6 * (1.0 + std::abs(l))) return FixedPointKind::nonhyperbolic;
    bool focus = ev[0].imag() != 0.0;
    if (tr < 0) return focus ? FixedPointKind::stable_focus : FixedPointKind::stable_node;
    return focus ? FixedPointKind::unstable_focus : FixedPointKind::unstable_node;
}

Mat2 jacobian(const PlanarField& field, const Point2& x, double fd_step) {
    double hx = fd_step > 0 ? fd_step : 1e-5 * (1.0 + std::fabs(x.x));
    double hy = fd_step > 0 ? fd_step : 1e-5 * (1.0 + std::fabs(x.y));
    auto fxp = field.f(x.x + hx, x.y), fxm = field.f(x.x - hx, x.y);
    auto fyp = field.f(x.x, x.y + hy), fym = field.f(x.x, x.y - hy);
    return {(fxp[0] - fxm[0]) / (2 * hx), (fyp[0] - fym[0]) / (2 * hy),
            (fxp[1] - fxm[1]) / (2 * hx), (fyp[1] - fym[1]) / (2 * hy)};
}

namespace {

double resid(const std::array<double, 2>& f) { return std::max(std::fabs(f[0]), std::fabs(f[1])); }

Mat2 jac_of(const PlanarField& field, const Point2& x) {
    return field.jac ? field.jac(x.x, x.y) : jacobian(field, x);
}

}  // namespace

std::optional<Point2> newton_solve(const PlanarField& field, Point2 x, const NewtonOptions& opts) {
    auto F = field(x);
    double r = resid(F);
    for (int it = 0; it < opts.max_iter; ++it) {
        if (!std::isfinite(r)) return std::nullopt;
        if (r < opts.tol) return x;
        Mat2 J = jac_of(field, x);
        double det = J[0] * J[3] - J[1] * J[2];
        if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
        double dx = -(J[3] * F[0] - J[1] * F[1]) / det;
        double dy = -(-J[2] * F[0] + J[0] * F[1]) / det;
        double lam = 1.0;
        Point2 xn{x.x + dx, x.y + dy};
        auto Fn = field(xn);
        double rn = resid(Fn);
        for (int k = 0; k < opts.max_halvings && !(rn < r); ++k) {
            lam *= 0.5;
            xn = {x.x + lam * dx, x.y + lam * dy};
            Fn = field(xn);
            rn = resid(Fn);
        }
        x = xn;
        F = Fn;
        r = rn;
    }
    if (r < opts.tol) return x;
    return std::nullopt;
}

FixedPoint make_fixed_point(const PlanarField& field, const Point2& x) {
    FixedPoint fp;
    fp.location = x;
    fp.jacobian = jac_of(field, x);
    fp.eigenvalues = eigenvalues(fp.jacobian);
    fp.kind = classify(fp.jacobian);
    return fp;
}

FixedPointSearch find_fixed_points(const PlanarField& field, const NullclineSet& nc,
                                   const NewtonOptions& opts) {
    const Box& box = nc.box;
    const double thr = 1.5 * std::sqrt(2.0) / nc.resolution;
    // bucket the y-nullcline vertices
    std::unordered_map<std::int64_t, std::vector<Point2>> grid;
    auto key = [&](const Point2& q) {
        auto ix = static_cast<std::int64_t>(std::floor(q.x / thr));
        auto iy = static_cast<std::int64_t>(std::floor(q.y / thr));
        return ix * 1000003LL + iy;
    };
    for (const auto& line : nc.y_nullcline)
        for (const auto& p : line) {
            Point2 q = box.normalize(p);
            grid[key(q)].push_back(q);
        }
    std::vector<Point2> seeds;  // normalized
    for (const auto& line : nc.x_nullcline) {
        for (const auto& p : line) {
            Point2 q = box.normalize(p);
            auto ix = static_cast<std::int64_t>(std::floor(q.x / thr));
            auto iy = static_cast<std::int64_t>(std::floor(q.y / thr));
            for (std::int64_t a = -1; a <= 1; ++a)
                for (std::int64_t b = -1; b <= 1; ++b) {
                    auto it = grid.find((ix + a) * 1000003LL + (iy + b));
                    if (it == grid.end()) continue;
                    for (const auto& r : it->second) {
                        if (std::hypot(q.x - r.x, q.y - r.y) >= thr) continue;
                        Point2 m{0.5 * (q.x + r.x), 0.5 * (q.y + r.y)};
                        bool dup = false;
                        for (const auto& s : seeds)
                            if (std::hypot(s.x - m.x, s.y - m.y) < 0.5 * thr) { dup = true; break; }
                        if (!dup) seeds.push_back(m);
                    }
                }
        }
    }
    FixedPointSearch out;
    const double slack = 1e-9;
    for (const auto& s : seeds) {
        Point2 x0{box.x_min + s.x * box.width(), box.y_min + s.y * box.height()};
        auto root = newton_solve(field, x0, opts);
        if (!root) continue;
        Point2 q = box.normalize(*root);
        if (q.x < -slack || q.x > 1 + slack || q.y < -slack || q.y > 1 + slack) continue;
        bool dup = false;
        for (const auto& fp : out.points)
            if (std::hypot(fp.location.x - root->x, fp.location.y - root->y) < 1e-6) { dup = true; break; }
        if (!dup) out.points.push_back(make_fixed_point(field, *root));
    }
    if (!seeds.empty() && out.points.empty())
        out.warnings.push_back("nullclines cross but no root converged (grid too coarse?)");
    std::sort(out.points.begin(), out.points.end(), [](const FixedPoint& a, const FixedPoint& b) {
        return a.location.x < b.location.x;
    });
    return out;
}

std::string to_string(ManifoldBranch b) {
    switch (b) {
        case ManifoldBranch::stable_plus: return "stable-plus";
        case ManifoldBranch::stable_minus: return "stable-minus";
        case ManifoldBranch::unstable_plus: return "unstable-plus";
        case ManifoldBranch::unstable_minus: return "unstable-minus";
    }
    return "unstable-plus";
}

bool is_stable(ManifoldBranch b) {
    return b == ManifoldBranch::stable_plus || b == ManifoldBranch::stable_minus;
}

std::string to_string(ManifoldStop s) {
    switch (s) {
        case ManifoldStop::left_box: return "left-box";
        case ManifoldStop::arclength: return "arclength";
        case ManifoldStop::fixed_point: return "fixed-point";
        case ManifoldStop::time_limit: return "time-limit";
        case ManifoldStop::stalled: return "stalled";
    }
    return "time-limit";
}

Point2 saddle_direction(const FixedPoint& saddle, bool stable, const Box& box) {
    if (saddle.kind != FixedPointKind::saddle)
        throw ValidationError("saddle_direction: fixed point is not a saddle");
    const Mat2& J = saddle.jacobian;
    double W = box.width(), H = box.height();
    double a = J[0], b = J[1] * H / W, c = J[2] * W / H, d = J[3];
    double lam = stable ? saddle.eigenvalues[0].real() : saddle.eigenvalues[1].real();
    Point2 v1{b, lam - a}, v2{lam - d, c};
    Point2 v = std::hypot(v1.x, v1.y) >= std::hypot(v2.x, v2.y) ? v1 : v2;
    double nv = std::hypot(v.x, v.y);
    v = {v.x / nv, v.y / nv};
    double dom = std::fabs(v.x) >= std::fabs(v.y) ? v.x : v.y;
    if (dom < 0) v = {-v.x, -v.y};
    return v;
}

Manifold shoot_manifold(const PlanarField& field, const FixedPoint& saddle, ManifoldBranch branch,
                        const ManifoldOptions& opts) {
    if (saddle.kind != FixedPointKind::saddle)
        throw ValidationError("shoot_manifold: fixed point is not a saddle");
    const Box& box = opts.box;
    box.validate();
    const bool stable = is_stable(branch);
    const double sgn =
        (branch == ManifoldBranch::stable_plus || branch == ManifoldBranch::unstable_plus) ? 1.0
                                                                                           : -1.0;
    Point2 dir = saddle_direction(saddle, stable, box);
    const double W = box.width(), H = box.height();
    Point2 seed{saddle.location.x + sgn * opts.delta * dir.x * W,
                saddle.location.y + sgn * opts.delta * dir.y * H};

    Manifold m;
    m.saddle = saddle;
    m.branch = branch;
    m.polyline = {saddle.location, seed};
    m.arclength = opts.delta;

    const double tsign = stable ? -1.0 : 1.0;
    VectorField vf;
    vf.dim = 2;
    vf.eval = [&field, tsign](double, const double* x, double, double* dx) {
        auto f = field.f(x[0], x[1]);
        dx[0] = tsign * f[0];
        dx[1] = tsign * f[1];
    };
    OdeStepper st(vf, opts.integrator);
    double x0[2] = {seed.x, seed.y};
    st.reset(0.0, x0, 0.0);
    Point2 last = box.normalize(seed);
    while (true) {
        if (!st.step(opts.t_max)) {
            m.stop = ManifoldStop::time_limit;
            break;
        }
        Point2 p{st.x()[0], st.x()[1]};
        if (!box.contains(p)) {
            // clip to the boundary
            double lo = st.t_prev(), hi = st.t();
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                Point2 q{st.dense_component(mid, 0), st.dense_component(mid, 1)};
                if (box.contains(q)) lo = mid; else hi = mid;
            }
            Point2 q{st.dense_component(lo, 0), st.dense_component(lo, 1)};
            Point2 qn = box.normalize(q);
            m.arclength += std::hypot(qn.x - last.x, qn.y - last.y);
            m.polyline.push_back(q);
            m.stop = ManifoldStop::left_box;
            break;
        }
        Point2 pn = box.normalize(p);
        m.arclength += std::hypot(pn.x - last.x, pn.y - last.y);
        last = pn;
        m.polyline.push_back(p);
        if (m.arclength > opts.arclength_budget) {
            m.stop = ManifoldStop::arclength;
            break;
        }
        bool hit = false;
        for (const auto& fp : opts.fixed_points) {
            Point2 fn = box.normalize(fp);
            if (std::hypot(fn.x - pn.x, fn.y - pn.y) < opts.fixed_point_radius) hit = true;
        }
        if (hit) {
            m.stop = ManifoldStop::fixed_point;
            break;
        }
        double speed = std::hypot(st.dx()[0] / W, st.dx()[1] / H);
        if (speed < 1e-14) {
            m.stop = ManifoldStop::stalled;
            break;
        }
    }
    return m;
}

}  // namespace hhca
