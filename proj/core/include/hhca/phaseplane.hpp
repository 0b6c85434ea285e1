#pragma once

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hhca/integrate.hpp"
#include "hhca/models.hpp"

namespace hhca {

struct Point2 {
    double x = 0.0, y = 0.0;
};

struct Box {
    double x_min = -60.0, x_max = 120.0, y_min = 0.0, y_max = 1.0;

    bool contains(const Point2& p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }
    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    Point2 normalize(const Point2& p) const {
        return {(p.x - x_min) / width(), (p.y - y_min) / height()};
    }
    void validate() const;
};

using Mat2 = std::array<double, 4>;  // row-major

struct PlanarField {
    std::function<std::array<double, 2>(double, double)> f;
    std::function<Mat2(double, double)> jac;      // optional
    std::function<double(double)> y_nullcline;    // optional: y = g(x) solves f_y = 0
    std::string x_name = "V", y_name = "n";

    std::array<double, 2> operator()(const Point2& p) const { return f(p.x, p.y); }
};

PlanarField reduced_field(const ModelParams& p);
PlanarField hybrid_field(const HybridParams& p, HybridFamily family);
Box default_box(HybridFamily family);

using Polyline = std::vector<Point2>;

struct NullclineSet {
    std::vector<Polyline> x_nullcline;  // zero set of the first component (V)
    std::vector<Polyline> y_nullcline;  // zero set of the second component (n)
    Box box;
    int resolution = 0;
};

struct NullclineOptions {
    int resolution = 600;
    double curve_tol = 1e-8;
};

struct NonFiniteFieldError : std::runtime_error {
    NonFiniteFieldError(const std::string& what, std::vector<std::pair<int, int>> cells)
        : std::runtime_error(what), cells(std::move(cells)) {}
    std::vector<std::pair<int, int>> cells;
};

// marching squares on the zero set of one scalar function
std::vector<Polyline> contour_zero(const std::function<double(double, double)>& g, const Box& box,
                                   int resolution, double curve_tol = 1e-8);

NullclineSet extract_nullclines(const PlanarField& field, const Box& box,
                                const NullclineOptions& opts = {});

enum class FixedPointKind { stable_node, stable_focus, saddle, unstable_node, unstable_focus,
                            nonhyperbolic };

std::string to_string(FixedPointKind k);

struct FixedPoint {
    Point2 location;
    Mat2 jacobian{};
    std::array<std::complex<double>, 2> eigenvalues;
    FixedPointKind kind = FixedPointKind::nonhyperbolic;
};

FixedPointKind classify(const Mat2& J);
std::array<std::complex<double>, 2> eigenvalues(const Mat2& J);

// central differences, h = 1e-5 (1 + |x_i|) unless fd_step > 0
Mat2 jacobian(const PlanarField& field, const Point2& x, double fd_step = 0.0);

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
    int max_halvings = 8;
};

std::optional<Point2> newton_solve(const PlanarField& field, Point2 x,
                                   const NewtonOptions& opts = {});

FixedPoint make_fixed_point(const PlanarField& field, const Point2& x);

struct FixedPointSearch {
    std::vector<FixedPoint> points;  // sorted by x
    std::vector<std::string> warnings;
};

FixedPointSearch find_fixed_points(const PlanarField& field, const NullclineSet& nc,
                                   const NewtonOptions& opts = {});

enum class ManifoldBranch { stable_plus, stable_minus, unstable_plus, unstable_minus };

std::string to_string(ManifoldBranch b);
bool is_stable(ManifoldBranch b);

enum class ManifoldStop { left_box, arclength, fixed_point, time_limit, stalled };

std::string to_string(ManifoldStop s);

struct ManifoldOptions {
    Box box;
    double delta = 1e-4 * 1.4142135623730951;  // in box-normalized units
    double arclength_budget = 50.0;              // box-normalized
    double t_max = 1e4;
    double fixed_point_radius = 1e-6;            // box-normalized
    std::vector<Point2> fixed_points;            // termination targets
    IntegratorOptions integrator;
};

struct Manifold {
    FixedPoint saddle;
    ManifoldBranch branch = ManifoldBranch::unstable_plus;
    Polyline polyline;
    double arclength = 0.0;  // box-normalized
    ManifoldStop stop = ManifoldStop::time_limit;
};

// Eigenvector of the saddle for the stable/unstable eigenvalue, unit length in
// box-normalized coordinates, oriented so its larger component is positive.
Point2 saddle_direction(const FixedPoint& saddle, bool stable, const Box& box);

Manifold shoot_manifold(const PlanarField& field, const FixedPoint& saddle, ManifoldBranch branch,
                        const ManifoldOptions& opts);

}  // namespace hhca
