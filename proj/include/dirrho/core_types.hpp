#ifndef DIRRHO_CORE_TYPES_HPP
#define DIRRHO_CORE_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dirrho/rational.hpp"

namespace dirrho {

// ---------------------------------------------------------------------------
// Direction
// ---------------------------------------------------------------------------

/// A direction is a sign vector alpha in {-1,+1}^d, d >= 2. It selects, per
/// coordinate, whether the coefficient tracks large (+1) or small (-1) values.
class Direction {
public:
    explicit Direction(std::vector<int> signs);

    static Direction all_plus(int d);
    static Direction all_minus(int d);

    /// Accepts the compact form "-++-" and the tuple form "(-1,1,1,-1)"
    /// (parentheses and whitespace optional).
    static Direction parse(std::string_view text);

    /// All 2^d directions, ordered with the leftmost coordinate most
    /// significant and +1 before -1: (1,1), (1,-1), (-1,1), (-1,-1).
    static std::vector<Direction> enumerate(int d);

    int dim() const { return static_cast<int>(signs_.size()); }
    int sign(int i) const { return signs_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& signs() const { return signs_; }

    /// Number of -1 entries.
    int negative_count() const;

    Direction reflected() const;

    std::string to_string() const; ///< tuple form "(-1,1,1)"
    std::string compact() const;   ///< compact form "-++"

    bool operator==(const Direction& o) const { return signs_ == o.signs_; }

private:
    std::vector<int> signs_;
};

/// The index partition induced by a direction: I = {i : alpha_i = -1},
/// J = {i : alpha_i = +1}. Indices are 0-based and ordered.
struct SignPartition {
    std::vector<int> negatives; ///< I
    std::vector<int> positives; ///< J
    int dim = 0;
};

SignPartition partition_from_direction(const Direction& alpha);

// ---------------------------------------------------------------------------
// Data, ranks, pseudo-observations
// ---------------------------------------------------------------------------

/// Dense row-major matrix of observations: rows = sample points, columns =
/// variables.
class DataMatrix {
public:
    DataMatrix(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * cols_, cols_};
    }
    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

private:
    std::size_t rows_, cols_;
    std::vector<double> values_;
};

enum class TiePolicy {
    stable, ///< ties broken by row index (deterministic)
    random, ///< ties broken by a seeded shuffle within each tie group
};

/// Column-wise ranks of a data matrix. Each column is a permutation of
/// 1..n; ties_per_column records how many ties had to be broken.
struct RankMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<int> ranks; ///< row-major
    std::vector<long long> ties_per_column;

    int operator()(std::size_t r, std::size_t c) const { return ranks[r * cols + c]; }
    long long total_ties() const;

    /// Keeps the selected columns (0-based), in the given order.
    RankMatrix select_columns(const std::vector<int>& columns) const;
};

/// Column-wise ranking, 1..n per column. Non-finite entries are rejected with
/// their row/column location (1-based in the message). The random tie policy
/// uses the given seed; the stable policy ignores it.
RankMatrix compute_ranks(const DataMatrix& data, TiePolicy policy = TiePolicy::stable,
                         std::uint64_t seed = 0);

/// Directional ranks: entry R_ij when alpha_i = +1 and n+1-R_ij when
/// alpha_i = -1, so the two choices at a fixed entry always sum to n+1.
struct IntMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<int> values;
    int operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

IntMatrix directional_ranks(const RankMatrix& ranks, const Direction& alpha);

/// Pseudo-observations u_ij = R_ij / (n+1), all strictly inside (0,1).
struct PseudoObservations {
    std::size_t rows = 0, cols = 0;
    std::vector<double> u;
    double operator()(std::size_t r, std::size_t c) const { return u[r * cols + c]; }
};

PseudoObservations pseudo_observations(const RankMatrix& ranks);

// ---------------------------------------------------------------------------
// Coefficient estimates
// ---------------------------------------------------------------------------

enum class Method { closed_form, decomposition, quadrature, monte_carlo, rank_estimator };

std::string_view method_name(Method m);

/// A rho value with provenance. std_error is present exactly for Monte Carlo
/// results (and rank estimators aggregated over replications).
struct CoefficientEstimate {
    double value = 0.0;
    Method method = Method::closed_form;
    std::optional<double> std_error;
    std::optional<long long> sample_count;
};

// ---------------------------------------------------------------------------
// Normalization constant
// ---------------------------------------------------------------------------

/// c_d = 2^d (d+1) / (2^d - (d+1)), exact. Throws std::domain_error for d < 2.
/// Satisfies c_d * (1/(d+1) - 2^-d) = 1 for every d >= 2.
Rational normalization_constant(int d);

} // namespace dirrho

#endif
