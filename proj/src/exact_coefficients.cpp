#include "dirrho/exact_coefficients.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dirrho/errors.hpp"
#include "dirrho/quadrature.hpp"
#include "parallel.hpp"

namespace dirrho {

// ---------------------------------------------------------------------------
// IntegratorConfig
// ---------------------------------------------------------------------------

IntegratorConfig IntegratorConfig::quadrature(int nodes) {
    IntegratorConfig cfg;
    cfg.method = Mode::gauss_legendre_tensor;
    cfg.nodes_per_dim = nodes;
    return cfg;
}

IntegratorConfig IntegratorConfig::monte_carlo(long long samples, std::uint64_t seed,
                                               double target_std_error) {
    IntegratorConfig cfg;
    cfg.method = Mode::monte_carlo;
    cfg.sample_count = samples;
    cfg.seed = seed;
    cfg.target_std_error = target_std_error;
    return cfg;
}

int IntegratorConfig::nodes_for(int dim) const {
    if (nodes_per_dim > 0) return nodes_per_dim;
    return dim <= 4 ? 32 : 16;
}

void IntegratorConfig::validate() const {
    if (method == Mode::gauss_legendre_tensor && nodes_per_dim != 0 && nodes_per_dim < 8)
        throw std::invalid_argument("quadrature needs at least 8 nodes per dimension");
    if (method == Mode::monte_carlo && sample_count < 10'000)
        throw std::invalid_argument("Monte Carlo needs at least 10^4 samples");
}

std::optional<double> MarginIntegralCache::lookup(std::uint32_t mask, int nodes) const {
    auto it = integrals_.find({mask, nodes});
    if (it == integrals_.end()) return std::nullopt;
    return it->second;
}

void MarginIntegralCache::store(std::uint32_t mask, int nodes, double value) {
    integrals_[{mask, nodes}] = value;
}

// ---------------------------------------------------------------------------
// Shared machinery
// ---------------------------------------------------------------------------

namespace {

constexpr long long kMcChunk = 1 << 15;

struct McMoment {
    double mean = 0.0;
    double std_error = 0.0;
};

// Mean of T = prod_{i in I}(1-U_i) * prod_{i in J} U_i over copula samples.
// Chunked, with one engine per (seed, chunk) stream and a fixed-order merge,
// so the result does not depend on the thread count.
McMoment directional_moment_mc(const CopulaModel& model, const SignPartition& part,
                               long long count, std::uint64_t seed) {
    const std::size_t chunks = static_cast<std::size_t>((count + kMcChunk - 1) / kMcChunk);
    std::vector<double> sums(chunks), sq_sums(chunks);

    detail::parallel_for(chunks, [&](std::size_t c) {
        const long long begin = static_cast<long long>(c) * kMcChunk;
        const long long len = std::min<long long>(kMcChunk, count - begin);
        auto rng = make_engine(derive_seed(seed, 0x6d63 /* "mc" */, c));
        std::vector<double> row(static_cast<std::size_t>(model.dim()));
        KahanSum s, s2;
        for (long long k = 0; k < len; ++k) {
            model.sample_row(rng, row);
            double t = 1.0;
            for (int i : part.negatives) t *= 1.0 - row[static_cast<std::size_t>(i)];
            for (int i : part.positives) t *= row[static_cast<std::size_t>(i)];
            s.add(t);
            s2.add(t * t);
        }
        sums[c] = s.value();
        sq_sums[c] = s2.value();
    });

    KahanSum total, total_sq;
    for (std::size_t c = 0; c < chunks; ++c) {
        total.add(sums[c]);
        total_sq.add(sq_sums[c]);
    }
    const double n = static_cast<double>(count);
    McMoment m;
    m.mean = total.value() / n;
    const double var = std::max(0.0, (total_sq.value() - n * m.mean * m.mean) / (n - 1.0));
    m.std_error = std::sqrt(var / n);
    return m;
}

void check_target(double scaled_se, const IntegratorConfig& cfg, const char* what) {
    if (cfg.target_std_error > 0.0 && scaled_se > cfg.target_std_error)
        throw NumericalError(std::string(what) + ": Monte Carlo standard error " +
                             std::to_string(scaled_se) + " exceeds target " +
                             std::to_string(cfg.target_std_error) +
                             " (increase the sample count)");
}

std::uint32_t subset_mask(const std::vector<int>& K) {
    std::uint32_t mask = 0;
    for (int i : K) mask |= 1u << i;
    return mask;
}

// integral of the |K|-margin's CDF over its cube, cached when possible
double margin_cdf_integral(const CopulaModel& model, const std::vector<int>& K, int nodes,
                           MarginIntegralCache* cache) {
    if (K.empty()) return 1.0;
    if (K.size() == 1) return 0.5;
    const std::uint32_t mask = subset_mask(K);
    if (cache)
        if (auto hit = cache->lookup(mask, nodes)) return *hit;

    auto sub = model.margin(K);
    const double value = integrate_unit_cube(
        [&](std::span<const double> u) { return sub->cdf(u); }, sub->dim(), nodes);
    if (cache) cache->store(mask, nodes, value);
    return value;
}

// decomposition weight w(k) = (2^k - (k+1)) / (2^k (k+1)); zero for k <= 1
double decomposition_weight(int k) {
    const double pow2 = std::ldexp(1.0, k);
    return (pow2 - (k + 1)) / (pow2 * (k + 1));
}

// enumerate subsets S of J; fn(S_indices, parity_sign)
template <typename Fn>
void for_each_subset(const std::vector<int>& J, Fn&& fn) {
    const std::size_t m = J.size();
    std::vector<int> S;
    S.reserve(m);
    for (std::uint32_t bits = 0; bits < (1u << m); ++bits) {
        S.clear();
        for (std::size_t b = 0; b < m; ++b)
            if (bits & (1u << b)) S.push_back(J[b]);
        fn(S, S.size() % 2 == 0 ? 1.0 : -1.0);
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

CoefficientEstimate rho_minus(const CopulaModel& model, const IntegratorConfig& cfg) {
    return rho_directional_definition(model, Direction::all_minus(model.dim()), cfg);
}

CoefficientEstimate rho_plus(const CopulaModel& model, const IntegratorConfig& cfg) {
    return rho_directional_definition(model, Direction::all_plus(model.dim()), cfg);
}

CoefficientEstimate rho_directional_definition(const CopulaModel& model, const Direction& alpha,
                                               const IntegratorConfig& cfg) {
    cfg.validate();
    const int d = model.dim();
    if (alpha.dim() != d) throw std::invalid_argument("direction dimension does not match model");
    const double c_d = normalization_constant(d).to_double();
    const SignPartition part = partition_from_direction(alpha);

    const bool use_quadrature =
        cfg.method == IntegratorConfig::Mode::gauss_legendre_tensor && d <= 5;

    CoefficientEstimate est;
    if (use_quadrature) {
        // E[prod_I (1-U) prod_J U] = sum_{S subset J} (-1)^|S| int C_{I u S}
        const int nodes = cfg.nodes_for(d);
        KahanSum expectation;
        for_each_subset(part.positives, [&](const std::vector<int>& S, double sign) {
            std::vector<int> K = part.negatives;
            K.insert(K.end(), S.begin(), S.end());
            std::sort(K.begin(), K.end());
            expectation.add(sign * margin_cdf_integral(model, K, nodes, nullptr));
        });
        est.value = c_d * (expectation.value() - std::ldexp(1.0, -d));
        est.method = Method::quadrature;
    } else {
        const McMoment m = directional_moment_mc(model, part, cfg.sample_count, cfg.seed);
        est.value = c_d * (m.mean - std::ldexp(1.0, -d));
        est.method = Method::monte_carlo;
        est.std_error = c_d * m.std_error;
        est.sample_count = cfg.sample_count;
        check_target(*est.std_error, cfg, "rho_directional_definition");
    }
    return est;
}

CoefficientEstimate rho_directional_decomposition(const CopulaModel& model, const Direction& alpha,
                                                  const IntegratorConfig& cfg,
                                                  MarginIntegralCache* cache) {
    cfg.validate();
    const int d = model.dim();
    if (alpha.dim() != d) throw std::invalid_argument("direction dimension does not match model");
    const double c_d = normalization_constant(d).to_double();
    const SignPartition part = partition_from_direction(alpha);

    KahanSum combination;
    for_each_subset(part.positives, [&](const std::vector<int>& S, double sign) {
        std::vector<int> K = part.negatives;
        K.insert(K.end(), S.begin(), S.end());
        const int k = static_cast<int>(K.size());
        if (k <= 1) return; // zero weight
        std::sort(K.begin(), K.end());

        double sub_rho;
        if (cfg.method == IntegratorConfig::Mode::gauss_legendre_tensor && k <= 5) {
            const int nodes = cfg.nodes_for(k);
            const double integral = margin_cdf_integral(model, K, nodes, cache);
            sub_rho = normalization_constant(k).to_double() * (integral - std::ldexp(1.0, -k));
        } else {
            auto sub = model.margin(K);
            sub_rho = rho_minus(*sub, cfg).value;
        }
        combination.add(sign * decomposition_weight(k) * sub_rho);
    });

    CoefficientEstimate est;
    est.value = c_d * combination.value();
    est.method = Method::decomposition;
    return est;
}

Rational closed_form_mn(const Direction& alpha) {
    const int d = alpha.dim();
    const int k = alpha.negative_count();
    if (k == 0 || k == d) return Rational(1);
    // c_d * ( k!(d-k)!/(d+1)! - 2^-d ), with k!(d-k)!/(d+1)! = 1/((d+1) binom(d,k))
    __int128 binom = 1;
    for (int i = 0; i < k; ++i) binom = binom * (d - i) / (i + 1);
    const Rational beta = Rational::reduce(1, static_cast<__int128>(d + 1) * binom);
    const Rational half_pow = Rational::reduce(1, static_cast<__int128>(1) << d);
    return normalization_constant(d) * (beta - half_pow);
}

double closed_form_fgm(const Direction& alpha, double lambda) {
    if (!(std::abs(lambda) <= 1.0))
        throw std::invalid_argument("FGM parameter must satisfy |lambda| <= 1");
    const int d = alpha.dim();
    const int j_size = d - alpha.negative_count();
    // (-1)^|J| * 2^d (d+1) / ((2^d - (d+1)) 6^d), reduced exactly before the
    // floating-point division
    __int128 num = (static_cast<__int128>(1) << d) * (d + 1);
    __int128 den = (static_cast<__int128>(1) << d) - (d + 1);
    for (int i = 0; i < d; ++i) den *= 6;
    const Rational factor = Rational::reduce(num, den);
    const double sign = j_size % 2 == 0 ? 1.0 : -1.0;
    return sign * lambda * static_cast<double>(factor.num) / static_cast<double>(factor.den);
}

double sum_over_directions(const CopulaModel& model, const IntegratorConfig& cfg) {
    const int d = model.dim();
    if (d > 20) throw std::domain_error("sum over directions is limited to d <= 20");

    MarginIntegralCache cache;
    KahanSum total;
    for (const Direction& alpha : Direction::enumerate(d)) {
        if (cfg.method == IntegratorConfig::Mode::gauss_legendre_tensor && d <= 5)
            total.add(rho_directional_decomposition(model, alpha, cfg, &cache).value);
        else
            // same seed for every direction: the estimates share one sample
            // stream, which makes the cancellation exact
            total.add(rho_directional_definition(model, alpha, cfg).value);
    }
    return total.value();
}

} // namespace dirrho
