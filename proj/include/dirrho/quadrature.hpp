#ifndef DIRRHO_QUADRATURE_HPP
#define DIRRHO_QUADRATURE_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace dirrho {

/// Gauss-Legendre rule transplanted to [0,1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes and weights by Newton iteration on the Legendre polynomial,
/// accurate to machine precision.
GaussLegendreRule gauss_legendre(int n);

/// Compensated (Kahan) accumulator.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

/// Tensor-product Gauss-Legendre integral of f over [0,1]^dim with
/// nodes_per_dim points per axis. f is called with a dim-long point.
template <typename F>
double integrate_unit_cube(F&& f, int dim, int nodes_per_dim) {
    if (dim < 1) throw std::invalid_argument("integrate_unit_cube: dim must be >= 1");
    const GaussLegendreRule rule = gauss_legendre(nodes_per_dim);
    const int m = nodes_per_dim;

    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    std::vector<double> point(static_cast<std::size_t>(dim));
    KahanSum acc;
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < dim; ++i) {
            point[static_cast<std::size_t>(i)] = rule.nodes[static_cast<std::size_t>(idx[i])];
            w *= rule.weights[static_cast<std::size_t>(idx[i])];
        }
        acc.add(w * f(std::span<const double>(point.data(), point.size())));

        int axis = dim - 1;
        while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == m) {
            idx[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return acc.value();
}

} // namespace dirrho

#endif
