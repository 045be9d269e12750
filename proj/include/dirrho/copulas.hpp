#ifndef DIRRHO_COPULAS_HPP
#define DIRRHO_COPULAS_HPP

#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dirrho/core_types.hpp"

namespace dirrho {

/// Abstract parametric copula model: an exchangeable-or-not multivariate
/// distribution function on the unit cube with uniform margins.
///
/// Models are immutable once constructed and safe to share across threads.
/// Samplers draw from a caller-owned engine; parallel sampling must use
/// independent engines derived per stream (see rng.hpp), never one shared
/// mutable generator.
class CopulaModel {
public:
    virtual ~CopulaModel() = default;

    virtual int dim() const = 0;
    virtual std::string family() const = 0;

    /// Spec string in the CLI grammar, e.g. "clayton:theta=1:d=3".
    virtual std::string spec_string() const = 0;

    /// CDF at a point of the closed unit cube. Throws std::domain_error for
    /// coordinates outside [0,1].
    double cdf(std::span<const double> u) const;

    /// The |K|-dimensional margin obtained by setting all coordinates outside
    /// K (0-based indices) to 1. Throws std::invalid_argument for empty or
    /// out-of-range K.
    virtual std::unique_ptr<CopulaModel> margin(const std::vector<int>& K) const = 0;

    /// Draws one observation into out (size dim()), all coordinates in (0,1).
    virtual void sample_row(std::mt19937_64& rng, std::span<double> out) const = 0;

    virtual std::unique_ptr<CopulaModel> clone() const = 0;

protected:
    /// Family formula, called with a validated point.
    virtual double cdf_unchecked(std::span<const double> u) const = 0;
};

/// n i.i.d. rows from the model, deterministic given the engine state.
DataMatrix sample(const CopulaModel& model, std::size_t count, std::mt19937_64& rng);

/// Entry-wise x -> 1-x. Sampling from C and reflecting is distributionally
/// sampling from the survival copula. Entries must lie strictly in (0,1).
DataMatrix survival_reflect(const DataMatrix& data);

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// Independence copula, C(u) = prod u_i.
class ProductCopula final : public CopulaModel {
public:
    explicit ProductCopula(int d);
    int dim() const override { return d_; }
    std::string family() const override { return "product"; }
    std::string spec_string() const override;
    std::unique_ptr<CopulaModel> margin(const std::vector<int>& K) const override;
    void sample_row(std::mt19937_64& rng, std::span<double> out) const override;
    std::unique_ptr<CopulaModel> clone() const override;

protected:
    double cdf_unchecked(std::span<const double> u) const override;

private:
    int d_;
};

/// Upper Frechet-Hoeffding bound M(u) = min(u): all coordinates of a sample
/// row are equal.
class ComonotoneCopula final : public CopulaModel {
public:
    explicit ComonotoneCopula(int d);
    int dim() const override { return d_; }
    std::string family() const override { return "comonotone"; }
    std::string spec_string() const override;
    std::unique_ptr<CopulaModel> margin(const std::vector<int>& K) const override;
    void sample_row(std::mt19937_64& rng, std::span<double> out) const override;
    std::unique_ptr<CopulaModel> clone() const override;

protected:
    double cdf_unchecked(std::span<const double> u) const override;

private:
    int d_;
};

/// Farlie-Gumbel-Morgenstern family,
/// C(u) = prod u_i * (1 + lambda * prod (1-u_i)), lambda in [-1,1].
/// Every proper margin is the product copula. Sampling is by rejection: the
/// density is bounded by 1+|lambda| <= 2, so acceptance is at least 1/2.
class FgmCopula final : public CopulaModel {
public:
    FgmCopula(int d, double lambda);
    int dim() const override { return d_; }
    double lambda() const { return lambda_; }
    std::string family() const override { return "fgm"; }
    std::string spec_string() const override;
    std::unique_ptr<CopulaModel> margin(const std::vector<int>& K) const override;
    void sample_row(std::mt19937_64& rng, std::span<double> out) const override;
    std::unique_ptr<CopulaModel> clone() const override;

protected:
    double cdf_unchecked(std::span<const double> u) const override;

private:
    int d_;
    double lambda_;
};

/// Clayton family, C(u) = (sum u_i^-theta - d + 1)^(-1/theta), theta > 0.
/// Margins are Clayton with the same theta. Sampling uses the
/// Marshall-Olkin frailty construction: W ~ Gamma(1/theta), E_i ~ Exp(1),
/// U_i = (1 + E_i/W)^(-1/theta). theta below 1e-8 degenerates to the
/// product copula to avoid cancellation in u^-theta.
class ClaytonCopula final : public CopulaModel {
public:
    ClaytonCopula(int d, double theta);
    int dim() const override { return d_; }
    double theta() const { return theta_; }
    std::string family() const override { return "clayton"; }
    std::string spec_string() const override;
    std::unique_ptr<CopulaModel> margin(const std::vector<int>& K) const override;
    void sample_row(std::mt19937_64& rng, std::span<double> out) const override;
    std::unique_ptr<CopulaModel> clone() const override;

protected:
    double cdf_unchecked(std::span<const double> u) const override;

private:
    bool product_limit() const { return theta_ <= 1e-8; }

    int d_;
    double theta_;
};

/// Parses a family spec of the form "clayton:theta=1.0:d=3",
/// "fgm:lambda=0.6:d=3", "product:d=4", "comonotone:d=4".
/// Throws UsageError for malformed specs or inadmissible parameters.
std::unique_ptr<CopulaModel> parse_family_spec(std::string_view spec);

} // namespace dirrho

#endif
