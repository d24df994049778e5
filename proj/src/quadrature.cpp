#include "bpst/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>

namespace bpst {

namespace {

QuadRule make_rule_9()
{
    // Conical product of the 3-point Gauss-Jacobi rule (weight 1 - u) and the
    // 3-point Gauss-Legendre rule on [0, 1] (Stroud's collapsed Gauss rule).
    // Constants evaluated in 30-digit arithmetic; rows are (b1, b2, b3, weight).
    static constexpr double table[9][4] = {
        {0.808694385677669784588, 0.0885879595127039473955, 0.102717654809626268016, 0.111628840966088683762},
        {0.455706020243648026302, 0.0885879595127039473955, 0.455706020243648026302, 0.178606145545741894020},
        {0.102717654809626268016, 0.0885879595127039473955, 0.808694385677669784588, 0.111628840966088683762},
        {0.523979067720100785006, 0.409466864440734710865, 0.0665540678391645041287, 0.127356170199770137052},
        {0.295266567779632644568, 0.409466864440734710865, 0.295266567779632644568, 0.203769872319632219283},
        {0.0665540678391645041287, 0.409466864440734710865, 0.523979067720100785006, 0.127356170199770137052},
        {0.188409405952072325007, 0.787659461760847056025, 0.0239311322870806189674, 0.0387927666119189569633},
        {0.106170269119576471987, 0.787659461760847056025, 0.106170269119576471987, 0.0620684265790703311412},
        {0.0239311322870806189674, 0.787659461760847056025, 0.188409405952072325007, 0.0387927666119189569633},
    };
    QuadRule r;
    r.name = "conical-gauss-9";
    r.degree = 5;
    for (const auto& row : table) {
        r.nodes.push_back({row[0], row[1], row[2]});
        r.weights.push_back(row[3]);
    }
    return r;
}

QuadRule make_rule_12()
{
    // Dunavant's 12-point degree-6 rule, as tabulated in MFEM's intrules.cpp
    // (weights there refer to the area-1/2 reference triangle, hence the 2x).
    QuadRule r;
    r.name = "dunavant-12";
    r.degree = 6;
    auto orbit3 = [&](double a, double w) {
        const double b = 1.0 - 2.0 * a;
        for (const Barycentric& n : {Barycentric{a, a, b}, Barycentric{a, b, a}, Barycentric{b, a, a}}) {
            r.nodes.push_back(n);
            r.weights.push_back(2.0 * w);
        }
    };
    auto orbit6 = [&](double a, double b, double w) {
        const double c = 1.0 - a - b;
        for (const Barycentric& n : {Barycentric{a, b, c}, Barycentric{b, a, c}, Barycentric{a, c, b},
                                     Barycentric{c, a, b}, Barycentric{b, c, a}, Barycentric{c, b, a}}) {
            r.nodes.push_back(n);
            r.weights.push_back(2.0 * w);
        }
    };
    orbit3(0.063089014491502228340, 0.025422453185103408460);
    orbit3(0.24928674517091042129, 0.058393137863189683013);
    orbit6(0.053145049844816947353, 0.31035245103378440542, 0.041425537809186787597);
    return r;
}

} // namespace

std::pair<std::vector<double>, std::vector<double>> gauss_jacobi01(int n, double alpha)
{
    // Golub-Welsch on [-1, 1] for (1 - t)^alpha, then mapped to [0, 1].
    const double beta = 0.0;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + alpha + beta;
        J(k, k) = (s == 0.0) ? (beta - alpha) / (alpha + beta + 2.0)
                             : (beta * beta - alpha * alpha) / (s * (s + 2.0));
        if (k + 1 < n) {
            const double m = k + 1.0;
            const double sm = 2.0 * m + alpha + beta;
            const double v = 4.0 * m * (m + alpha) * (m + beta) * (m + alpha + beta) /
                             (sm * sm * (sm + 1.0) * (sm - 1.0));
            J(k, k + 1) = J(k + 1, k) = std::sqrt(v);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    const double mu0 = std::pow(2.0, alpha + beta + 1.0) * std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) /
                       std::tgamma(alpha + beta + 2.0);
    std::vector<double> nodes(n), weights(n);
    const double scale = std::pow(2.0, alpha + 1.0);
    for (int k = 0; k < n; ++k) {
        nodes[k] = 0.5 * (1.0 + eig.eigenvalues()(k));
        const double v0 = eig.eigenvectors()(0, k);
        weights[k] = mu0 * v0 * v0 / scale;
    }
    return {nodes, weights};
}

QuadRule conical_product_rule(int n)
{
    if (n < 1) throw InvalidArgument("conical rule needs at least one point per axis");
    const auto [u, wu] = gauss_jacobi01(n, 1.0);
    const auto [v, wv] = gauss_jacobi01(n, 0.0);
    QuadRule r;
    r.name = "conical-gauss-" + std::to_string(n * n);
    r.degree = 2 * n - 1;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = u[i];
            const double y = (1.0 - u[i]) * v[j];
            r.nodes.push_back({1.0 - x - y, x, y});
            r.weights.push_back(2.0 * wu[i] * wv[j]);
        }
    return r;
}

const QuadRule& rule_9()
{
    static const QuadRule r = make_rule_9();
    return r;
}

const QuadRule& rule_12()
{
    static const QuadRule r = make_rule_12();
    return r;
}

const QuadRule& rule_for_degree(int degree)
{
    if (degree <= 5) return rule_9();
    if (degree == 6) return rule_12();
    static std::mutex mu;
    static std::map<int, QuadRule> cache;
    const int n = (degree + 2) / 2;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, conical_product_rule(n)).first;
    return it->second;
}

} // namespace bpst
