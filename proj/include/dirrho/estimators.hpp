#ifndef DIRRHO_ESTIMATORS_HPP
#define DIRRHO_ESTIMATORS_HPP

#include <span>
#include <vector>

#include "dirrho/core_types.hpp"

namespace dirrho {

/// A rank-based directional estimate together with the sample geometry it
/// came from. value is exactly 1 whenever all directional-rank columns
/// coincide row-wise.
struct EstimatorResult {
    Direction alpha;
    double value = 0.0;
    std::size_t n = 0;
    std::size_t d = 0;
    long long tie_count = 0;
};

/// The directional rank estimator
///   rho_hat = [ (1/n) sum_j prod_i R_ij^{alpha_i} - ((n+1)/2)^d ]
///             / [ (1/n) sum_j j^d - ((n+1)/2)^d ],
/// with directional ranks R^{+1} = R and R^{-1} = n+1-R. Numerator and
/// denominator are carried as exact integers (scaled by 2^d) whenever they
/// fit in 128 bits, so perfectly dependent data yields exactly +-1.
EstimatorResult rho_hat_directional(const RankMatrix& ranks, const Direction& alpha);

/// Subset lower-orthant estimator
///   rho_hat_K^- = c_|K| * ( (1/n) sum_j prod_{i in K} (1-u_ij) - 2^-|K| ).
/// K holds 0-based column indices and must have at least two of them: the
/// decomposition weight of smaller subsets is identically zero, and callers
/// are expected to skip them.
double rho_hat_minus_subset(const PseudoObservations& pseudo, const std::vector<int>& K);

/// The same estimator assembled as a linear combination of subset rho_hat^-
/// values over I union S, S subset of J -- an algebraic identity with
/// rho_hat_directional, equal to it up to floating-point roundoff.
EstimatorResult rho_hat_decomposed(const RankMatrix& ranks, const Direction& alpha);

/// Mean of the three pairwise Spearman estimators, defined for d = 3 only.
double rho_hat_star3(const RankMatrix& ranks);

/// The directional empirical process is indexed by a coordinate subset beta
/// and the direction restricted to it.
struct EmpiricalProcessSpec {
    std::vector<int> beta;        ///< 0-based column indices, nonempty
    std::vector<int> alpha_signs; ///< one sign per beta entry
};

/// C_{beta,alpha,n}(u) = (1/(n+1)) sum_j prod_{i in beta}
///   1{ alpha_i R_ij/(n+1) <= alpha_i u_i },
/// a step function with values in [0, n/(n+1)].
double empirical_process(const RankMatrix& ranks, const EmpiricalProcessSpec& spec,
                         std::span<const double> u);

/// Recovers rho_hat_directional by numerically integrating the empirical
/// process over the cube (midpoint rule on the (n+1)^d cells where the step
/// function is constant) and applying the affine map with prefactor
/// (n+1)^(d+1)/n. The process is integrated in the reflected direction
/// -alpha: its indicator convention mirrors the directional-rank convention.
/// Guarded to d <= 4.
double estimator_via_process_integral(const RankMatrix& ranks, const Direction& alpha);

namespace detail {
/// Mean of all pairwise Spearman estimators, any d >= 2 (diagnostic).
double mean_pairwise_rho_hat(const RankMatrix& ranks);
} // namespace detail

} // namespace dirrho

#endif
