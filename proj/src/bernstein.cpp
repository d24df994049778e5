#include "bpst/bernstein.hpp"

#include "bpst/errors.hpp"

#include <array>
#include <string>

namespace bpst {

namespace {

struct DegreeTables {
    std::array<std::vector<MultiIndex>, kMaxDegree + 1> indices;
    std::array<std::vector<double>, kMaxDegree + 1> multinomial;

    DegreeTables()
    {
        std::array<double, kMaxDegree + 1> fact{};
        fact[0] = 1.0;
        for (int n = 1; n <= kMaxDegree; ++n) fact[n] = fact[n - 1] * n;
        for (int m = 0; m <= kMaxDegree; ++m) {
            for (int i = m; i >= 0; --i)
                for (int j = m - i; j >= 0; --j) {
                    indices[m].push_back({i, j, m - i - j});
                    multinomial[m].push_back(fact[m] / (fact[i] * fact[j] * fact[m - i - j]));
                }
        }
    }
};

const DegreeTables& tables()
{
    static const DegreeTables t;
    return t;
}

void check_degree(int degree)
{
    if (degree < 0 || degree > kMaxDegree)
        throw InvalidArgument("Bernstein degree " + std::to_string(degree) + " outside [0, " +
                              std::to_string(kMaxDegree) + "]");
}

// Given derivative values of the degree-d basis, apply one more directional
// derivative along u (a barycentric direction) and return degree d+1 values:
// D_u B^{d+1}_a = (d+1) sum_c u_c B^d_{a - e_c}.
std::vector<double> lift(int d, const std::vector<double>& lower, const std::array<double, 3>& u)
{
    const int up = d + 1;
    const auto& idx = tables().indices[up];
    std::vector<double> out(idx.size(), 0.0);
    for (std::size_t a = 0; a < idx.size(); ++a) {
        const auto [i, j, k] = idx[a];
        double s = 0.0;
        if (i > 0) s += u[0] * lower[multi_index_position(d, i - 1, j)];
        if (j > 0) s += u[1] * lower[multi_index_position(d, i, j - 1)];
        if (k > 0) s += u[2] * lower[multi_index_position(d, i, j)];
        out[a] = up * s;
    }
    return out;
}

} // namespace

const std::vector<MultiIndex>& multi_indices(int degree)
{
    check_degree(degree);
    return tables().indices[degree];
}

std::vector<double> local_eval(int degree, const Barycentric& b)
{
    check_degree(degree);
    std::array<std::array<double, kMaxDegree + 1>, 3> pw{};
    for (int c = 0; c < 3; ++c) {
        pw[c][0] = 1.0;
        for (int e = 1; e <= degree; ++e) pw[c][e] = pw[c][e - 1] * b[c];
    }
    const auto& idx = tables().indices[degree];
    const auto& coef = tables().multinomial[degree];
    std::vector<double> out(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) out[a] = coef[a] * pw[0][idx[a].i] * pw[1][idx[a].j] * pw[2][idx[a].k];
    return out;
}

std::vector<double> local_derivative(int degree, const TriangleGeometry& tri, int ax, int ay, const Barycentric& b)
{
    check_degree(degree);
    if (ax < 0 || ay < 0) throw InvalidArgument("negative derivative order");
    const int order = ax + ay;
    if (order > degree) return std::vector<double>(tables().indices[degree].size(), 0.0);
    const auto gx = tri.grad_x();
    const auto gy = tri.grad_y();
    std::vector<double> v = local_eval(degree - order, b);
    int d = degree - order;
    for (int s = 0; s < ax; ++s, ++d) v = lift(d, v, gx);
    for (int s = 0; s < ay; ++s, ++d) v = lift(d, v, gy);
    return v;
}

EvalMatrix assemble_B(const Triangulation& tr, const SplineSpec& spec, std::span<const Point2> points)
{
    const int dim = spec.per_triangle_dim();
    EvalMatrix out;
    out.row_triangle.resize(points.size());
    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto t = tr.locate(points[i]);
        if (!t) outside.push_back(i);
        else out.row_triangle[i] = *t;
    }
    if (!outside.empty()) throw PointOutsideDomain(std::move(outside));

    out.matrix.resize(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(spec.total_dim(tr.size())));
    out.matrix.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(points.size()), dim));
    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::size_t t = out.row_triangle[i];
        const auto vals = local_eval(spec.degree, barycentric(tr.geometry(t), points[i]));
        for (int a = 0; a < dim; ++a)
            out.matrix.insert(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t * dim + a)) = vals[a];
    }
    out.matrix.makeCompressed();
    return out;
}

} // namespace bpst
