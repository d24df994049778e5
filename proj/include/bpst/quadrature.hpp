#pragma once

#include "bpst/errors.hpp"
#include "bpst/geometry.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace bpst {

/// Triangle rule in barycentric form; weights are fractions of the triangle
/// area and sum to one.
struct QuadRule {
    std::string name;
    int degree = 0; // polynomial exactness
    std::vector<Barycentric> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// The 9-node degree-5 rule used for every likelihood-side integral.
const QuadRule& rule_9();

/// 12-node degree-6 symmetric rule.
const QuadRule& rule_12();

/// Conical product (collapsed Gauss) rule with n Gauss-Jacobi by n
/// Gauss-Legendre nodes; exact for degree 2n - 1.
QuadRule conical_product_rule(int n);

/// Smallest rule in {rule_9, rule_12, conical} exact for `degree`.
const QuadRule& rule_for_degree(int degree);

/// Gauss rule on [0, 1] for the weight (1 - u)^alpha, returned as (nodes, weights).
std::pair<std::vector<double>, std::vector<double>> gauss_jacobi01(int n, double alpha);

template <class F>
double integrate_triangle(const F& f, const TriangleGeometry& tri, const QuadRule& rule)
{
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double v = f(tri.point_at(rule.nodes[q]));
        if (!std::isfinite(v)) throw NonFiniteIntegrand("integrand is not finite at a quadrature node");
        s += rule.weights[q] * v;
    }
    return tri.area() * s;
}

template <class F>
double integrate_domain(const F& f, const Triangulation& tr, const QuadRule& rule)
{
    double s = 0.0;
    for (std::size_t t = 0; t < tr.size(); ++t) s += integrate_triangle(f, tr.geometry(t), rule);
    return s;
}

} // namespace bpst
