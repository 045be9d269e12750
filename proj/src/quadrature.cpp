#include "dirrho/quadrature.hpp"

#include <cmath>

namespace dirrho {

GaussLegendreRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    GaussLegendreRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));

    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton iteration from the Chebyshev-like initial guess
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double z_prev, deriv;
        do {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1);
            }
            deriv = n * (z * p0 - p1) / (z * z - 1.0);
            z_prev = z;
            z = z_prev - p0 / deriv;
        } while (std::abs(z - z_prev) > 1e-15);

        // transplant from [-1,1] to [0,1]
        rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + z);
        const double w = 1.0 / ((1.0 - z * z) * deriv * deriv);
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return rule;
}

} // namespace dirrho
