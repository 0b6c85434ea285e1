#include <doctest.h>

#include <cmath>
#include <random>

#include "hhca/models.hpp"
#include "hhca/system.hpp"

using namespace hhca;
using doctest::Approx;

// reference values: tests/oracles/oracles.txt (mpmath, 40 digits)

TEST_CASE("gating rates match the reference at regular and singular voltages") {
    struct Row { double V, an, bn, am, bm, ah, bh; };
    const Row rows[] = {
        {-20, 0.015718708947376786, 0.16050317708596769, 0.050552067161184976, 12.15092711006993,
         0.19027972799213317, 0.0066928509242848556},
        {0, 0.058197670686932642, 0.125, 0.22356372458463003, 4.0, 0.07, 0.047425873177566781},
        {10, 0.1, 0.11031211282307443, 0.43082537518330237, 2.2950136829497312, 0.04245714617988434,
         0.11920292202211756},
        {25, 0.19308253751833024, 0.091451953618330224, 1.0, 0.9974088351091848, 0.020055335780213307,
         0.37754066879814544},
        {60, 0.50339182745315212, 0.059045819092626838, 3.6089818074022993, 0.14269597338900959,
         0.003485094785750476, 0.95257412682243322},
    };
    for (const auto& r : rows) {
        CAPTURE(r.V);
        Rates x = hh_rates(r.V);
        CHECK(x.alpha_n == Approx(r.an).epsilon(1e-13));
        CHECK(x.beta_n == Approx(r.bn).epsilon(1e-13));
        CHECK(x.alpha_m == Approx(r.am).epsilon(1e-13));
        CHECK(x.beta_m == Approx(r.bm).epsilon(1e-13));
        CHECK(x.alpha_h == Approx(r.ah).epsilon(1e-13));
        CHECK(x.beta_h == Approx(r.bh).epsilon(1e-13));
    }
    CHECK(n_inf(10) == Approx(0.47548378767952963).epsilon(1e-13));
    CHECK(m_inf(25) == Approx(0.5006486315783903).epsilon(1e-13));
}

TEST_CASE("rates are continuous across the removable singularity") {
    for (double V : {10.0, 25.0})
        for (double d : {1e-5, 5e-5, 9.9e-5, 1.01e-4, 2e-4}) {
            Rates a = hh_rates(V - d), b = hh_rates(V + d);
            CHECK(std::fabs(a.alpha_n - b.alpha_n) < 1e-5);
            CHECK(std::fabs(a.alpha_m - b.alpha_m) < 1e-4);
        }
}

TEST_CASE("rate derivatives agree with central differences") {
    for (double V : {-30.0, 9.99995, 10.0, 24.9, 40.0}) {
        const double h = 1e-5;
        Rates d = hh_rate_derivatives(V), p = hh_rates(V + h), m = hh_rates(V - h);
        CHECK(d.alpha_n == Approx((p.alpha_n - m.alpha_n) / (2 * h)).epsilon(1e-6));
        CHECK(d.alpha_m == Approx((p.alpha_m - m.alpha_m) / (2 * h)).epsilon(1e-6));
        CHECK(d.beta_h == Approx((p.beta_h - m.beta_h) / (2 * h)).epsilon(1e-6));
        CHECK(dn_inf(V) == Approx((n_inf(V + h) - n_inf(V - h)) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("reduced right-hand side and analytic jacobian") {
    PlanarState s{5.0, 0.4};
    PlanarState c = reduced_rhs(s, hh_classic());
    CHECK(c.V == Approx(-8.8879892186478192).epsilon(1e-12));
    CHECK(c.n == Approx(-0.00072583066456984078).epsilon(1e-12));
    PlanarState k = reduced_rhs(s, hh_calcium());
    CHECK(k.V == Approx(-0.83198921864781754).epsilon(1e-12));

    auto J = reduced_jacobian(s, hh_calcium());
    CHECK(J[0] == Approx(0.24181454994020145).epsilon(1e-10));
    CHECK(J[1] == Approx(18.783262534472459).epsilon(1e-10));
    CHECK(J[2] == Approx(0.003091262936135924).epsilon(1e-10));
    CHECK(J[3] == Approx(-0.19450133697852439).epsilon(1e-10));
    auto Jc = reduced_jacobian(s, hh_classic());
    CHECK(Jc[1] == Approx(-169.13673746552755).epsilon(1e-10));
}

TEST_CASE("protocol current is additive to I_app") {
    ModelParams p = hh_calcium();
    p.I_app = 3.0;
    ModelParams q = hh_calcium();
    q.I_app = 5.0;
    ModelSpec m;
    m.kind = ModelKind::reduced;
    m.hh = p;
    VectorField f = make_field(m);
    double x[2] = {-20.0, 0.3}, dx[2];
    f.eval(0.0, x, 2.0, dx);
    CHECK(dx[0] == Approx(reduced_rhs({-20.0, 0.3}, q).V));
}

TEST_CASE("equilibrium voltages") {
    auto c = equilibrium_voltages(hh_classic(), true);
    REQUIRE(c.size() == 1);
    CHECK(c[0] == Approx(-0.056877046285430114).epsilon(1e-9));
    auto k = equilibrium_voltages(hh_calcium(), true);
    REQUIRE(k.size() == 3);
    CHECK(k[0] == Approx(-46.065257190210968).epsilon(1e-9));
    CHECK(k[1] == Approx(6.4907079455798695).epsilon(1e-9));
    CHECK(k[2] == Approx(25.69160166179321).epsilon(1e-9));
}

TEST_CASE("ionic current profile") {
    std::vector<double> grid{0.0, 0.5, 1.0};
    auto prof = ionic_current_profile(0.0, grid, hh_calcium());
    CHECK(prof[0] == Approx(11.919274704800313).epsilon(1e-12));
    CHECK(prof[1] == Approx(-10.531119775694266).epsilon(1e-12));
    CHECK(prof[2] == Approx(41.268485743811136).epsilon(1e-12));
    CHECK_THROWS_AS(ionic_current_profile(0.0, {}, hh_calcium()), ValidationError);
    CHECK_THROWS_AS(ionic_current_profile(0.0, {1.5}, hh_calcium()), ValidationError);
}

TEST_CASE("parameter validation") {
    ModelParams p;
    p.C = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = ModelParams{};
    p.g_K = -1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = ModelParams{};
    p.ca_exponent = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    HybridParams h;
    h.eps = 0;
    CHECK_THROWS_AS(h.validate(), ValidationError);
}

TEST_CASE("hybrid equilibria and reset") {
    HybridParams p;
    p.a = 0.1;
    p.w0 = 3.2;
    auto e = hybrid_equilibria(p, HybridFamily::transcritical_2, 1.0);
    REQUIRE(e.size() == 2);
    CHECK(e[0].v == Approx(-2.7488699647970809).epsilon(1e-12));
    CHECK(e[1].v == Approx(3.3953346112617275).epsilon(1e-12));
    CHECK(e[0].stable);
    CHECK_FALSE(e[1].stable);
    p.w0 = -4;
    e = hybrid_equilibria(p, HybridFamily::transcritical_2, 1.0);
    REQUIRE(e.size() == 2);
    CHECK(e[0].v == Approx(-4.3174486116788922).epsilon(1e-12));
    CHECK(e[1].v == Approx(3.5093678035980846).epsilon(1e-12));

    HybridParams tc = tc_high_ca();
    auto r = hybrid_reset({100.0, 2.0, 1.0}, tc, HybridVariant::three_var);
    CHECK(r.v == tc.c_reset);
    CHECK(r.w == tc.d_reset);
    CHECK(r.z == Approx(1.0 + tc.d_z));
    CHECK_THROWS_AS(hybrid_reset({99.0, 0.0, 0.0}, tc, HybridVariant::three_var), ContractError);
}

TEST_CASE("gating variables stay in [0,1] under the flow") {
    // forward invariance: on n = 0 the flow points up, on n = 1 it points down
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> V(-100, 160);
    for (int i = 0; i < 200; ++i) {
        double v = V(rng);
        CHECK(reduced_rhs({v, 0.0}, hh_calcium()).n >= 0.0);
        CHECK(reduced_rhs({v, 1.0}, hh_calcium()).n <= 0.0);
        FullState lo = full_rhs({v, 0.0, 0.0, 0.0}, hh_calcium());
        FullState hi = full_rhs({v, 1.0, 1.0, 1.0}, hh_calcium());
        CHECK((lo.n >= 0 && lo.m >= 0 && lo.h >= 0));
        CHECK((hi.n <= 0 && hi.m <= 0 && hi.h <= 0));
    }
}

TEST_CASE("presets") {
    CHECK(preset("hh-classic").hh.g_Ca == 0.0);
    CHECK(preset("hh-calcium").hh.I_pump == -17.0);
    CHECK(preset("tc-low-ca").hybrid.w0 == 3.2);
    CHECK(preset("tc-high-ca").hybrid.w0 == -4.0);
    CHECK_THROWS_AS(preset("nope"), ValidationError);
}
