#ifndef DIRRHO_EXACT_COEFFICIENTS_HPP
#define DIRRHO_EXACT_COEFFICIENTS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "dirrho/copulas.hpp"
#include "dirrho/core_types.hpp"
#include "dirrho/rng.hpp"

namespace dirrho {

/// How population-level integrals are evaluated.
///
/// Quadrature is tensor Gauss-Legendre; nodes_per_dim = 0 picks the default
/// (32 per axis up to dimension 4, 16 at dimension 5). Integrands of
/// dimension > 5 always run through Monte Carlo, for which the result is the
/// sample mean over copula draws, deterministic given the seed. A nonzero
/// target_std_error makes Monte Carlo results above that accuracy fail
/// loudly (NumericalError) instead of returning silently degraded values.
struct IntegratorConfig {
    enum class Mode { gauss_legendre_tensor, monte_carlo };

    Mode method = Mode::gauss_legendre_tensor;
    int nodes_per_dim = 0;
    long long sample_count = 1'000'000;
    std::uint64_t seed = kDefaultSeed;
    double target_std_error = 0.0;

    static IntegratorConfig quadrature(int nodes = 0);
    static IntegratorConfig monte_carlo(long long samples, std::uint64_t seed,
                                        double target_std_error = 0.0);

    /// Effective node count for a given dimension.
    int nodes_for(int dim) const;

    /// Enforces nodes_per_dim >= 8 and sample_count >= 10^4.
    void validate() const;
};

/// A directional coefficient with its direction and family provenance.
struct DirectionalRho {
    Direction alpha;
    CoefficientEstimate estimate;
    std::string family;
    std::optional<double> parameter;
};

/// Reusable store of margin integrals of one fixed model, keyed by index
/// subset and node count. Lets callers that sweep many directions of the same
/// model (all 2^d of them, say) pay for each margin integral once.
class MarginIntegralCache {
public:
    std::optional<double> lookup(std::uint32_t mask, int nodes) const;
    void store(std::uint32_t mask, int nodes, double value);

private:
    std::map<std::pair<std::uint32_t, int>, double> integrals_;
};

/// rho^- : the all-negative directional coefficient,
/// c_d * (integral of C over the cube - 2^-d).
CoefficientEstimate rho_minus(const CopulaModel& model, const IntegratorConfig& cfg = {});

/// rho^+ : the all-positive directional coefficient,
/// c_d * (E[prod U_i] - 2^-d).
CoefficientEstimate rho_plus(const CopulaModel& model, const IntegratorConfig& cfg = {});

/// Directional coefficient straight from its definition:
/// c_d * (E[prod_{i in I}(1-U_i) * prod_{i in J} U_i] - 2^-d) with
/// I = {alpha_i = -1}. Monte Carlo evaluates the expectation over copula
/// samples; quadrature expands it by inclusion-exclusion over margin
/// integrals.
CoefficientEstimate rho_directional_definition(const CopulaModel& model, const Direction& alpha,
                                               const IntegratorConfig& cfg = {});

/// Directional coefficient as the linear combination of lower-dimensional
/// rho^- values over the margins X_{I union S}, S subset of J. Terms of
/// size <= 1 carry zero weight and are skipped. A cache may be supplied when
/// evaluating many directions of one model.
CoefficientEstimate rho_directional_decomposition(const CopulaModel& model, const Direction& alpha,
                                                  const IntegratorConfig& cfg = {},
                                                  MarginIntegralCache* cache = nullptr);

/// Exact value of rho^alpha for the comonotone copula: 1 when alpha is
/// constant, otherwise c_d * (k!(d-k)!/(d+1)! - 2^-d) with k the number of
/// -1 entries.
Rational closed_form_mn(const Direction& alpha);

/// Exact value of rho^alpha for the FGM family:
/// (-1)^|J| * 2^d (d+1) lambda / ((2^d - (d+1)) * 6^d). Throws for |lambda|>1.
double closed_form_fgm(const Direction& alpha, double lambda);

/// Diagnostic: the sum of all 2^d directional coefficients, which is zero for
/// every copula. Directions share one margin-integral cache (quadrature) or
/// one sample stream (Monte Carlo), so the cancellation is exact up to
/// floating-point roundoff. Guarded to d <= 20.
double sum_over_directions(const CopulaModel& model, const IntegratorConfig& cfg = {});

} // namespace dirrho

#endif
