#include "dirrho/estimators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "dirrho/quadrature.hpp"

namespace dirrho {

namespace {

// The direct estimator is a ratio of two sums that are integers once scaled
// by 2^d. They are carried in 128-bit integers whenever they fit, which makes
// the perfect-dependence value exactly 1 and the reflection identity exact.
bool integer_path_fits(std::size_t n, int d) {
    const long double bits = d + std::log2((long double)n) +
                             d * std::log2((long double)n + 1.0L);
    return bits < 125.0L;
}

__int128 ipow128(__int128 base, int exp) {
    __int128 r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// 2^d * sum_j j^d - n (n+1)^d, the scaled estimator denominator
__int128 scaled_denominator(std::size_t n, int d) {
    __int128 sum_jd = 0;
    for (std::size_t j = 1; j <= n; ++j) sum_jd += ipow128(static_cast<__int128>(j), d);
    return (static_cast<__int128>(1) << d) * sum_jd -
           static_cast<__int128>(n) * ipow128(static_cast<__int128>(n) + 1, d);
}

long double denominator_real(std::size_t n, int d) {
    // (1/n) sum_j j^d - ((n+1)/2)^d
    KahanSum sum;
    for (std::size_t j = 1; j <= n; ++j) sum.add(std::pow(static_cast<double>(j), d));
    return sum.value() / static_cast<long double>(n) -
           std::pow((static_cast<long double>(n) + 1.0L) / 2.0L, d);
}

void check_estimator_inputs(const RankMatrix& ranks, const Direction& alpha) {
    if (static_cast<std::size_t>(alpha.dim()) != ranks.cols)
        throw std::invalid_argument("direction dimension does not match rank matrix");
    if (ranks.rows < 2) throw std::invalid_argument("estimator needs n >= 2");
}

} // namespace

EstimatorResult rho_hat_directional(const RankMatrix& ranks, const Direction& alpha) {
    check_estimator_inputs(ranks, alpha);
    const std::size_t n = ranks.rows;
    const int d = static_cast<int>(ranks.cols);
    const IntMatrix dr = directional_ranks(ranks, alpha);

    double value;
    if (integer_path_fits(n, d)) {
        __int128 sum_prod = 0;
        for (std::size_t r = 0; r < n; ++r) {
            __int128 p = 1;
            for (std::size_t c = 0; c < ranks.cols; ++c) p *= dr(r, c);
            sum_prod += p;
        }
        const __int128 shift = static_cast<__int128>(n) * ipow128(static_cast<__int128>(n) + 1, d);
        const __int128 num = (static_cast<__int128>(1) << d) * sum_prod - shift;
        const __int128 den = scaled_denominator(n, d);
        value = static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
    } else {
        KahanSum sum_prod;
        for (std::size_t r = 0; r < n; ++r) {
            double p = 1.0;
            for (std::size_t c = 0; c < ranks.cols; ++c) p *= dr(r, c);
            sum_prod.add(p);
        }
        const long double num = sum_prod.value() / static_cast<long double>(n) -
                                std::pow((static_cast<long double>(n) + 1.0L) / 2.0L, d);
        value = static_cast<double>(num / denominator_real(n, d));
    }
    return EstimatorResult{alpha, value, n, static_cast<std::size_t>(d), ranks.total_ties()};
}

double rho_hat_minus_subset(const PseudoObservations& pseudo, const std::vector<int>& K) {
    if (K.size() < 2)
        throw std::invalid_argument(
            "subset rho_hat^- needs |K| >= 2 (smaller subsets have zero decomposition weight)");
    for (int i : K)
        if (i < 0 || static_cast<std::size_t>(i) >= pseudo.cols)
            throw std::invalid_argument("subset index out of range");

    const std::size_t n = pseudo.rows;
    const int k = static_cast<int>(K.size());
    KahanSum sum;
    for (std::size_t r = 0; r < n; ++r) {
        double p = 1.0;
        for (int i : K) p *= 1.0 - pseudo(r, static_cast<std::size_t>(i));
        sum.add(p);
    }
    const double c_k = normalization_constant(k).to_double();
    return c_k * (sum.value() / static_cast<double>(n) - std::ldexp(1.0, -k));
}

EstimatorResult rho_hat_decomposed(const RankMatrix& ranks, const Direction& alpha) {
    check_estimator_inputs(ranks, alpha);
    const std::size_t n = ranks.rows;
    const int d = static_cast<int>(ranks.cols);
    const SignPartition part = partition_from_direction(alpha);
    const PseudoObservations pseudo = pseudo_observations(ranks);

    KahanSum combination;
    const std::size_t m = part.positives.size();
    std::vector<int> K;
    for (std::uint32_t bits = 0; bits < (1u << m); ++bits) {
        K = part.negatives;
        for (std::size_t b = 0; b < m; ++b)
            if (bits & (1u << b)) K.push_back(part.positives[b]);
        const int k = static_cast<int>(K.size());
        if (k <= 1) continue;
        const double sign = std::popcount(bits) % 2 == 0 ? 1.0 : -1.0;
        const double pow2k = std::ldexp(1.0, k);
        const double weight = (pow2k - (k + 1)) / (pow2k * (k + 1));
        combination.add(sign * weight * rho_hat_minus_subset(pseudo, K));
    }

    const double prefactor =
        std::pow(static_cast<double>(n) + 1.0, d) / static_cast<double>(denominator_real(n, d));
    return EstimatorResult{alpha, prefactor * combination.value(), n, static_cast<std::size_t>(d),
                           ranks.total_ties()};
}

double rho_hat_star3(const RankMatrix& ranks) {
    if (ranks.cols != 3) throw std::invalid_argument("rho_hat_star3 is defined for d = 3 only");
    return detail::mean_pairwise_rho_hat(ranks);
}

namespace detail {

double mean_pairwise_rho_hat(const RankMatrix& ranks) {
    if (ranks.cols < 2) throw std::invalid_argument("pairwise mean needs d >= 2");
    const Direction pair_plus = Direction::all_plus(2);
    KahanSum sum;
    int pairs = 0;
    for (int i = 0; i < static_cast<int>(ranks.cols); ++i)
        for (int j = i + 1; j < static_cast<int>(ranks.cols); ++j) {
            sum.add(rho_hat_directional(ranks.select_columns({i, j}), pair_plus).value);
            ++pairs;
        }
    return sum.value() / pairs;
}

} // namespace detail

double empirical_process(const RankMatrix& ranks, const EmpiricalProcessSpec& spec,
                         std::span<const double> u) {
    if (spec.beta.empty()) throw std::invalid_argument("empirical process needs a nonempty beta");
    if (spec.beta.size() != spec.alpha_signs.size() || spec.beta.size() != u.size())
        throw std::invalid_argument("empirical process: beta, alpha and u sizes differ");
    for (int i : spec.beta)
        if (i < 0 || static_cast<std::size_t>(i) >= ranks.cols)
            throw std::invalid_argument("empirical process: beta index out of range");
    for (int s : spec.alpha_signs)
        if (s != 1 && s != -1)
            throw std::invalid_argument("empirical process: direction entries must be +1 or -1");
    for (double x : u)
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error("empirical process point outside the unit cube");

    const double scale = 1.0 / (static_cast<double>(ranks.rows) + 1.0);
    long long count = 0;
    for (std::size_t j = 0; j < ranks.rows; ++j) {
        bool all = true;
        for (std::size_t b = 0; b < spec.beta.size(); ++b) {
            const double pseudo = ranks(j, static_cast<std::size_t>(spec.beta[b])) * scale;
            const bool in = spec.alpha_signs[b] == 1 ? pseudo <= u[b] : pseudo >= u[b];
            if (!in) { all = false; break; }
        }
        count += all;
    }
    return static_cast<double>(count) * scale;
}

double estimator_via_process_integral(const RankMatrix& ranks, const Direction& alpha) {
    check_estimator_inputs(ranks, alpha);
    const std::size_t n = ranks.rows;
    const int d = static_cast<int>(ranks.cols);
    if (d > 4)
        throw std::invalid_argument("process-integral estimator is limited to d <= 4");

    // The process indicator maps alpha_i = +1 to the reflected rank, so the
    // direct estimator at alpha is recovered from the process at -alpha.
    const Direction reflected = alpha.reflected();
    const std::size_t words = (n + 63) / 64;

    // masks[i*(n+1)+k]: bit j set iff observation j's indicator holds on cell
    // k of axis i; the step function is constant on each of the n+1 cells per
    // axis, so evaluating at midpoints integrates it exactly.
    std::vector<std::vector<std::uint64_t>> masks(
        static_cast<std::size_t>(d) * (n + 1), std::vector<std::uint64_t>(words, 0));
    for (int i = 0; i < d; ++i)
        for (std::size_t k = 0; k <= n; ++k) {
            auto& mask = masks[static_cast<std::size_t>(i) * (n + 1) + k];
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t rank = static_cast<std::size_t>(ranks(j, static_cast<std::size_t>(i)));
                const bool in = reflected.sign(i) == 1 ? rank <= k : rank >= k + 1;
                if (in) mask[j / 64] |= std::uint64_t{1} << (j % 64);
            }
        }

    std::vector<std::uint64_t> full(words, ~std::uint64_t{0});
    if (n % 64 != 0) full[words - 1] = (std::uint64_t{1} << (n % 64)) - 1;

    unsigned long long total_count = 0;
    std::vector<std::uint64_t> partial((static_cast<std::size_t>(d) + 1) * words);
    std::copy(full.begin(), full.end(), partial.begin());

    // odometer over the (n+1)^d cells with early pruning of empty branches
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    int level = 0;
    for (;;) {
        if (level == d) {
            const std::uint64_t* p = partial.data() + static_cast<std::size_t>(d) * words;
            for (std::size_t w = 0; w < words; ++w)
                total_count += static_cast<unsigned long long>(std::popcount(p[w]));
            --level;
            ++idx[static_cast<std::size_t>(level)];
        }
        while (level >= 0 && idx[static_cast<std::size_t>(level)] > n) {
            idx[static_cast<std::size_t>(level)] = 0;
            --level;
            if (level >= 0) ++idx[static_cast<std::size_t>(level)];
        }
        if (level < 0) break;

        const std::uint64_t* prev = partial.data() + static_cast<std::size_t>(level) * words;
        std::uint64_t* next = partial.data() + (static_cast<std::size_t>(level) + 1) * words;
        const auto& mask =
            masks[static_cast<std::size_t>(level) * (n + 1) + idx[static_cast<std::size_t>(level)]];
        std::uint64_t any = 0;
        for (std::size_t w = 0; w < words; ++w) {
            next[w] = prev[w] & mask[w];
            any |= next[w];
        }
        if (any == 0) {
            // whole subtree contributes nothing
            ++idx[static_cast<std::size_t>(level)];
        } else {
            ++level;
        }
    }

    const double np1 = static_cast<double>(n) + 1.0;
    const double integral =
        static_cast<double>(total_count) / (np1 * std::pow(np1, d));
    const double affine = std::pow(np1, d + 1) / static_cast<double>(n);
    const double num = affine * integral - std::pow(np1 / 2.0, d);
    return num / static_cast<double>(denominator_real(n, d));
}

} // namespace dirrho
