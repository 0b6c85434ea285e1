#include <doctest.h>

#include <cmath>
#include <random>

#include "hhca/phaseplane.hpp"

using namespace hhca;
using doctest::Approx;

namespace {

// distance from p to the hyperbola v^2 - w^2 + I = 0, by dense sampling of both branches
double dist_to_hyperbola(const Point2& p, double I, const Box& box) {
    double best = 1e300;
    const int N = 20000;
    for (int i = 0; i <= N; ++i) {
        double w = box.y_min + box.height() * i / N;
        double r = w * w - I;
        if (r < 0) continue;
        for (double s : {-1.0, 1.0}) {
            double v = s * std::sqrt(r);
            best = std::min(best, std::hypot(v - p.x, w - p.y));
        }
    }
    return best;
}

}  // namespace

TEST_CASE("marching squares reproduces the analytic hyperbola") {
    const double I = 1.0;
    Box box{-3, 3, -3, 3};
    const int res = 120;
    auto lines = contour_zero([&](double v, double w) { return v * v - w * w + I; }, box, res);
    REQUIRE(lines.size() == 2);
    const double diag = std::hypot(box.width() / res, box.height() / res);
    double worst = 0;
    std::size_t pts = 0;
    for (const auto& pl : lines)
        for (const auto& p : pl) {
            worst = std::max(worst, dist_to_hyperbola(p, I, box));
            ++pts;
        }
    CHECK(pts > 200);
    CHECK(worst < 2 * diag);
    // the other direction: every point of the true curve has an extracted point nearby
    double back = 0;
    for (int i = 0; i <= 60; ++i) {
        double w = -3 + 0.1 * i;
        double v = std::sqrt(w * w - I + 0.0 * w);
        if (!(w * w - I >= 0) || v > 3) continue;
        for (double s : {-1.0, 1.0}) {
            double best = 1e300;
            for (const auto& pl : lines)
                for (const auto& p : pl) best = std::min(best, std::hypot(p.x - s * v, p.y - w));
            back = std::max(back, best);
        }
    }
    CHECK(back < 2 * diag);
}

TEST_CASE("linear nullclines through a grid vertex") {
    // zero set lands exactly on grid vertices along the diagonal
    Box box{-1, 1, -1, 1};
    auto lines = contour_zero([](double x, double y) { return x - y; }, box, 20);
    REQUIRE(lines.size() == 1);
    for (const auto& p : lines[0]) CHECK(std::fabs(p.x - p.y) < 1e-8);
}

TEST_CASE("classification from the jacobian") {
    CHECK(classify({-1, 0, 0, -2}) == FixedPointKind::stable_node);
    CHECK(classify({1, 0, 0, 2}) == FixedPointKind::unstable_node);
    CHECK(classify({-0.1, 1, -1, -0.1}) == FixedPointKind::stable_focus);
    CHECK(classify({0.1, 1, -1, 0.1}) == FixedPointKind::unstable_focus);
    CHECK(classify({1, 0, 0, -1}) == FixedPointKind::saddle);
    CHECK(classify({0, 1, -1, 0}) == FixedPointKind::nonhyperbolic);
    auto ev = eigenvalues({0, 1, -1, 0});
    CHECK(std::fabs(ev[0].imag()) == Approx(1.0));
}

TEST_CASE("finite-difference jacobian matches the analytic one on random states") {
    PlanarField f = reduced_field(hh_calcium());
    REQUIRE(f.jac);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> V(-60, 120), n(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Point2 x{V(rng), n(rng)};
        Mat2 a = f.jac(x.x, x.y), d = jacobian(f, x);
        double scale = 0;
        for (double v : a) scale = std::max(scale, std::fabs(v));
        for (int k = 0; k < 4; ++k) {
            CAPTURE(x.x);
            CAPTURE(x.y);
            CHECK(std::fabs(a[k] - d[k]) <= 1e-5 * std::max(std::fabs(a[k]), 1e-3 * scale));
        }
    }
}

TEST_CASE("fixed-point census of the reduced models at zero input") {
    Box box{-60, 120, 0, 1};
    {
        PlanarField f = reduced_field(hh_calcium());
        auto fp = find_fixed_points(f, extract_nullclines(f, box));
        REQUIRE(fp.points.size() == 3);
        CHECK(fp.points[0].location.x == Approx(-46.065257190210968).epsilon(1e-8));
        CHECK(fp.points[1].location.x == Approx(6.4907079455798695).epsilon(1e-8));
        CHECK(fp.points[2].location.x == Approx(25.69160166179321).epsilon(1e-8));
        CHECK(fp.points[0].kind == FixedPointKind::stable_node);
        CHECK(fp.points[1].kind == FixedPointKind::saddle);
        CHECK(fp.points[2].kind == FixedPointKind::unstable_node);
        for (const auto& p : fp.points) CHECK(p.location.y == Approx(n_inf(p.location.x)).epsilon(1e-9));
    }
    {
        PlanarField f = reduced_field(hh_classic());
        auto fp = find_fixed_points(f, extract_nullclines(f, box));
        REQUIRE(fp.points.size() == 1);
        CHECK(fp.points[0].location.x == Approx(-0.056877046285430114).epsilon(1e-6).scale(1));
        CHECK(fp.points[0].kind == FixedPointKind::stable_focus);
    }
}

TEST_CASE("hybrid equilibria found by the census agree with the closed form") {
    HybridParams p;
    p.a = 0.1;
    p.w0 = -4;
    p.I = 1.0;
    PlanarField f = hybrid_field(p, HybridFamily::transcritical_2);
    Box box = default_box(HybridFamily::transcritical_2);
    auto fp = find_fixed_points(f, extract_nullclines(f, box));
    REQUIRE(fp.points.size() == 2);
    CHECK(fp.points[0].location.x == Approx(-4.3174486116788922).epsilon(1e-9));
    CHECK(fp.points[1].location.x == Approx(3.5093678035980846).epsilon(1e-9));
    CHECK(fp.points[1].kind == FixedPointKind::saddle);
}

TEST_CASE("saddle manifolds of a linear saddle follow the eigenvectors") {
    // x' = x, y' = -y: unstable manifold is the x axis, stable the y axis
    PlanarField f;
    f.f = [](double x, double y) { return std::array<double, 2>{x, -y}; };
    f.jac = [](double, double) { return Mat2{1, 0, 0, -1}; };
    FixedPoint s = make_fixed_point(f, {0, 0});
    REQUIRE(s.kind == FixedPointKind::saddle);
    ManifoldOptions o;
    o.box = {-1, 1, -1, 1};
    o.fixed_points = {{0, 0}};
    Manifold u = shoot_manifold(f, s, ManifoldBranch::unstable_plus, o);
    CHECK(u.stop == ManifoldStop::left_box);
    for (const auto& p : u.polyline) CHECK(std::fabs(p.y) < 1e-6);
    CHECK(u.polyline.back().x > 0.99);
    Manifold st = shoot_manifold(f, s, ManifoldBranch::stable_minus, o);
    for (const auto& p : st.polyline) CHECK(std::fabs(p.x) < 1e-6);
    CHECK(st.polyline.back().y < -0.99);
}

TEST_CASE("non-finite field values are reported with their cells") {
    PlanarField f;
    f.f = [](double x, double y) {
        return std::array<double, 2>{x > 0.5 ? NAN : x - y, x + y};
    };
    CHECK_THROWS_AS(extract_nullclines(f, {-1, 1, -1, 1}, {20, 1e-8}), NonFiniteFieldError);
}

TEST_CASE("box validation") {
    CHECK_THROWS_AS((Box{1, 0, 0, 1}.validate()), std::invalid_argument);
    CHECK_NOTHROW((Box{0, 1, 0, 1}.validate()));
}
