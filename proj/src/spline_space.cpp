#include "bpst/spline_space.hpp"

#include "bpst/errors.hpp"
#include "bpst/quadrature.hpp"

#include <Eigen/SVD>

#include <ostream>

namespace bpst {

namespace {

int slot_of(const Triangle& t, std::size_t vertex)
{
    for (int s = 0; s < 3; ++s)
        if (t.v[s] == vertex) return s;
    return -1;
}

std::size_t opposite_vertex(const Triangle& t, std::size_t a, std::size_t b)
{
    for (auto v : t.v)
        if (v != a && v != b) return v;
    return t.v[0];
}

} // namespace

SparseMatrix build_H(const Triangulation& tr, const SplineSpec& spec)
{
    const int m = spec.degree;
    const int r = spec.smoothness;
    if (r < 0 || r > m)
        throw UnsupportedSmoothness("smoothness r=" + std::to_string(r) + " not in [0, m=" + std::to_string(m) + "]");
    const int dim = spec.per_triangle_dim();
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::Index row = 0;

    for (const EdgeInfo& e : tr.edges()) {
        if (!e.interior()) continue;
        const Triangle& t1 = tr.triangles()[e.triangles[0]];
        const Triangle& t2 = tr.triangles()[e.triangles[1]];
        const std::size_t A = opposite_vertex(t1, e.a, e.b);
        const std::size_t D = opposite_vertex(t2, e.a, e.b);
        const int sA = slot_of(t1, A), sP1 = slot_of(t1, e.a), sQ1 = slot_of(t1, e.b);
        const int sD = slot_of(t2, D), sP2 = slot_of(t2, e.a), sQ2 = slot_of(t2, e.b);
        const Barycentric lam = barycentric(tr.geometry(e.triangles[0]), tr.vertices()[D]);
        const Barycentric lam_apq{lam[sA], lam[sP1], lam[sQ1]};
        const auto col1 = static_cast<Eigen::Index>(e.triangles[0] * dim);
        const auto col2 = static_cast<Eigen::Index>(e.triangles[1] * dim);

        for (int rho = 0; rho <= r; ++rho) {
            const auto beta = multi_indices(rho);
            const auto bvals = local_eval(rho, lam_apq);
            for (int p = m - rho; p >= 0; --p) {
                const int q = m - rho - p;
                std::array<int, 3> e2{};
                e2[sD] = rho;
                e2[sP2] = p;
                e2[sQ2] = q;
                trip.emplace_back(row, col2 + multi_index_position(m, e2[0], e2[1]), 1.0);
                for (std::size_t b = 0; b < beta.size(); ++b) {
                    std::array<int, 3> e1{};
                    e1[sA] = beta[b].i;
                    e1[sP1] = p + beta[b].j;
                    e1[sQ1] = q + beta[b].k;
                    if (bvals[b] != 0.0)
                        trip.emplace_back(row, col1 + multi_index_position(m, e1[0], e1[1]), -bvals[b]);
                }
                ++row;
            }
        }
    }
    SparseMatrix H(row, static_cast<Eigen::Index>(spec.total_dim(tr.size())));
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

NullSpace nullspace(const SparseMatrix& H)
{
    const Eigen::Index cols = H.cols();
    NullSpace out;
    if (H.rows() == 0 || H.nonZeros() == 0) {
        out.Q2 = Eigen::MatrixXd::Identity(cols, cols);
        return out;
    }
    const Eigen::MatrixXd Ht = Eigen::MatrixXd(H).transpose();
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Ht);
    const Eigen::VectorXd d = qr.matrixR().diagonal().cwiseAbs();
    const double tol = 1e-9 * d(0);
    Eigen::Index rank = 0;
    while (rank < d.size() && d(rank) > tol) ++rank;
    out.rank = rank;
    const Eigen::MatrixXd Q = qr.householderQ();
    out.Q2 = Q.rightCols(cols - rank);
    return out;
}

ConstraintSystem build_constraints(const Triangulation& tr, const SplineSpec& spec)
{
    ConstraintSystem cs;
    cs.H = build_H(tr, spec);
    auto ns = nullspace(cs.H);
    cs.rank = ns.rank;
    cs.Q2 = std::move(ns.Q2);
    return cs;
}

Eigen::MatrixXd penalty_block(const TriangleGeometry& tri, int degree)
{
    const int dim = (degree + 1) * (degree + 2) / 2;
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(dim, dim);
    if (degree < 2) return block;
    const QuadRule& rule = rule_for_degree(2 * (degree - 2));
    const double area = tri.area();
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& b = rule.nodes[q];
        const auto dxx = local_derivative(degree, tri, 2, 0, b);
        const auto dxy = local_derivative(degree, tri, 1, 1, b);
        const auto dyy = local_derivative(degree, tri, 0, 2, b);
        const Eigen::Map<const Eigen::VectorXd> vxx(dxx.data(), dim), vxy(dxy.data(), dim), vyy(dyy.data(), dim);
        block.noalias() += (area * rule.weights[q]) * (vxx * vxx.transpose() + 2.0 * vxy * vxy.transpose() +
                                                       vyy * vyy.transpose());
    }
    return 0.5 * (block + block.transpose());
}

SparseMatrix build_K(const Triangulation& tr, const SplineSpec& spec)
{
    const int dim = spec.per_triangle_dim();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(tr.size() * static_cast<std::size_t>(dim * dim));
    for (std::size_t t = 0; t < tr.size(); ++t) {
        const Eigen::MatrixXd blk = penalty_block(tr.geometry(t), spec.degree);
        const auto off = static_cast<Eigen::Index>(t * dim);
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b)
                if (blk(a, b) != 0.0) trip.emplace_back(off + a, off + b, blk(a, b));
    }
    const auto n = static_cast<Eigen::Index>(spec.total_dim(tr.size()));
    SparseMatrix K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

Eigen::VectorXd interpolate_coefficients(const Triangulation& tr, const SplineSpec& spec,
                                         const std::function<double(const Point2&)>& f)
{
    const int m = spec.degree;
    const int dim = spec.per_triangle_dim();
    const auto& idx = multi_indices(m);
    std::vector<Barycentric> dpts;
    for (const auto& a : idx) {
        if (m == 0) dpts.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
        else dpts.push_back({double(a.i) / m, double(a.j) / m, double(a.k) / m});
    }
    Eigen::MatrixXd M(dim, dim);
    for (int a = 0; a < dim; ++a) {
        const auto row = local_eval(m, dpts[a]);
        for (int b = 0; b < dim; ++b) M(a, b) = row[b];
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    Eigen::VectorXd gamma(static_cast<Eigen::Index>(spec.total_dim(tr.size())));
    Eigen::VectorXd rhs(dim);
    for (std::size_t t = 0; t < tr.size(); ++t) {
        const auto g = tr.geometry(t);
        for (int a = 0; a < dim; ++a) rhs(a) = f(g.point_at(dpts[a]));
        gamma.segment(static_cast<Eigen::Index>(t * dim), dim) = lu.solve(rhs);
    }
    return gamma;
}

double spline_value(const Triangulation& tr, const SplineSpec& spec, const Eigen::VectorXd& gamma, std::size_t t,
                    const Point2& p)
{
    const int dim = spec.per_triangle_dim();
    const auto vals = local_eval(spec.degree, barycentric(tr.geometry(t), p));
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += vals[a] * gamma(static_cast<Eigen::Index>(t * dim + a));
    return s;
}

double spline_derivative(const Triangulation& tr, const SplineSpec& spec, const Eigen::VectorXd& gamma,
                         std::size_t t, int ax, int ay, const Point2& p)
{
    const int dim = spec.per_triangle_dim();
    const auto g = tr.geometry(t);
    const auto vals = local_derivative(spec.degree, g, ax, ay, barycentric(g, p));
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += vals[a] * gamma(static_cast<Eigen::Index>(t * dim + a));
    return s;
}

void dump_coordinate(std::ostream& out, const SparseMatrix& m)
{
    out.precision(17);
    out << "% " << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) out << it.row() << " " << it.col() << " " << it.value() << "\n";
}

void dump_coordinate(std::ostream& out, const Eigen::MatrixXd& m)
{
    out.precision(17);
    out << "% " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != 0.0) out << i << " " << j << " " << m(i, j) << "\n";
}

} // namespace bpst
