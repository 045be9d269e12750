// Acceptance suite: one line per criterion, exit status = number of failures.
//
// Every tolerance is pinned here in code. Monte Carlo criteria run with fixed
// seeds, so the whole suite is deterministic.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dirrho/copulas.hpp"
#include "dirrho/core_types.hpp"
#include "dirrho/estimators.hpp"
#include "dirrho/exact_coefficients.hpp"
#include "dirrho/quadrature.hpp"
#include "dirrho/rng.hpp"
#include "dirrho/simulation.hpp"

using namespace dirrho;

namespace {

struct Failure {
    std::string message;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw Failure{message};
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

RankMatrix random_rank_matrix(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    RankMatrix m;
    m.rows = n;
    m.cols = d;
    m.ranks.resize(n * d);
    m.ties_per_column.assign(d, 0);
    std::vector<int> perm(n);
    for (std::size_t c = 0; c < d; ++c) {
        std::iota(perm.begin(), perm.end(), 1);
        for (std::size_t k = n - 1; k > 0; --k) std::swap(perm[k], perm[rng() % (k + 1)]);
        for (std::size_t r = 0; r < n; ++r) m.ranks[r * d + c] = perm[r];
    }
    return m;
}

// ---------------------------------------------------------------------------

void criterion1_fgm_closed_form(std::ostringstream& note) {
    const double lambdas[] = {-1.0, -0.5, 0.6, 1.0};
    double worst = 0.0;
    for (int d : {3, 4, 5}) {
        for (double lambda : lambdas) {
            FgmCopula fgm(d, lambda);
            MarginIntegralCache cache;
            const IntegratorConfig cfg = IntegratorConfig::quadrature(32);
            for (const auto& alpha : Direction::enumerate(d)) {
                const double closed = closed_form_fgm(alpha, lambda);
                const double decomposed =
                    rho_directional_decomposition(fgm, alpha, cfg, &cache).value;
                worst = std::max(worst, std::abs(closed - decomposed));
                require(std::abs(closed - decomposed) <= 1e-10,
                        "d=" + std::to_string(d) + " lambda=" + num(lambda) + " alpha=" +
                            alpha.to_string() + ": |closed - decomposition| = " +
                            num(std::abs(closed - decomposed)) + " > 1e-10");
                if (d == 4) {
                    const int j_size = 4 - alpha.negative_count();
                    const double sign = j_size % 2 == 0 ? 1.0 : -1.0;
                    require(closed == sign * lambda * 5.0 / 891.0,
                            "d=4 sign pattern broken at " + alpha.to_string());
                }
            }
        }
    }
    note << "max |closed - decomposition| = " << num(worst);
}

void criterion2_mn_closed_form(std::ostringstream& note) {
    double worst_sigma = 0.0;
    for (int d : {3, 4}) {
        ComonotoneCopula mono(d);
        for (const auto& alpha : Direction::enumerate(d)) {
            const double closed = closed_form_mn(alpha).to_double();
            const auto mc = rho_directional_definition(
                mono, alpha,
                IntegratorConfig::monte_carlo(1'000'000, derive_seed(2001, d, alpha.negative_count())));
            const double sigmas = std::abs(mc.value - closed) / *mc.std_error;
            worst_sigma = std::max(worst_sigma, sigmas);
            require(sigmas <= 3.0, "d=" + std::to_string(d) + " alpha=" + alpha.to_string() +
                                       ": closed form " + num(closed) + " vs MC " + num(mc.value) +
                                       " is " + num(sigmas) + " standard errors away");
        }
    }
    note << "worst deviation = " << num(worst_sigma) << " sigma";
}

struct ExactTable {
    const char* name;
    int d;
    Direction alpha;
    std::vector<double> thetas;
    std::vector<double> exact;
};

// returns +1 for identity orientation, -1 for mirrored; throws if neither fits
int match_orientation(const ExactTable& table, double tolerance, std::ostringstream& detail) {
    for (int orientation : {+1, -1}) {
        const Direction alpha = orientation == +1 ? table.alpha : table.alpha.reflected();
        bool all_ok = true;
        double worst = 0.0;
        for (std::size_t i = 0; i < table.thetas.size(); ++i) {
            ClaytonCopula clayton(table.d, table.thetas[i]);
            const double value = rho_directional_decomposition(clayton, alpha).value;
            const double err = std::abs(value - table.exact[i]);
            worst = std::max(worst, err);
            if (err > tolerance) all_ok = false;
        }
        if (all_ok) {
            detail << table.name << ": orientation "
                   << (orientation == +1 ? "identity" : "mirrored") << ", max |err| = "
                   << num(worst) << "; ";
            return orientation;
        }
    }
    throw Failure{std::string(table.name) + ": neither orientation matches every cell within " +
                  num(tolerance)};
}

void criterion3_clayton_exact(std::ostringstream& note) {
    const std::vector<double> thetas{0.4, 0.6, 1.0, 2.0, 5.0};
    const ExactTable tables[] = {
        {"table1", 3, Direction({-1, 1, 1}), thetas, {-0.0726, -0.0969, -0.1338, -0.1906, -0.2684}},
        {"table2", 3, Direction({-1, -1, 1}), thetas, {-0.0919, -0.1287, -0.1850, -0.2621, -0.3212}},
        {"table3", 4, Direction({-1, 1, 1, -1}), thetas,
         {-0.0664, -0.0876, -0.1176, -0.1583, -0.1966}},
    };
    int first = 0;
    for (const auto& table : tables) {
        const int orientation = match_orientation(table, 0.005, note);
        if (first == 0) first = orientation;
        require(orientation == first, "orientation flips between tables");
    }
}

void criterion4_table_reproduction(std::ostringstream& note) {
    // same orientation as criterion 3 (identity): compare directly
    const auto report = run_plan(preset_plan("table1", 42).plan);
    const std::vector<double> reference{-0.0714, -0.0969, -0.1347, -0.1928, -0.2686};
    double worst = 0.0;
    std::size_t hit = 0;
    for (const auto& cell : report.cells) {
        if (cell.n != 500) continue;
        const double err = std::abs(cell.mean - reference[hit]);
        worst = std::max(worst, err);
        require(err <= 0.01, "table1 theta=" + num(*cell.parameter) + " n=500: mean " +
                                 num(cell.mean) + " vs reference " + num(reference[hit]) +
                                 " differs by " + num(err));
        // the replicate mean also has to sit on our own exact value within its
        // Monte Carlo radius plus a finite-n bias allowance: at theta=5 the
        // estimator carries a measured bias near +5e-4 that does not shrink
        // with the replicate count
        const double radius = 3.0 * cell.sd / std::sqrt(static_cast<double>(cell.replicates)) +
                              0.5 / static_cast<double>(cell.n);
        require(std::abs(cell.mean - *cell.exact) <= radius,
                "table1 theta=" + num(*cell.parameter) + " n=500: mean " + num(cell.mean) +
                    " is outside the radius " + num(radius) + " around exact " +
                    num(*cell.exact));
        ++hit;
    }
    require(hit == 5, "table1 run lost cells");
    note << "table1 n=500 max |err| = " << num(worst);

    const auto table4 = run_decomposition_table(preset_plan("table4", 42).plan);
    const std::vector<double> assembled_ref{
        -0.0650, -0.0658, -0.0672, -0.0664,  // theta = 0.4, n = 20,50,100,200
        -0.0828, -0.0862, -0.0860, -0.0878,  // theta = 0.6
        -0.1113, -0.1149, -0.1179, -0.1176,  // theta = 1
        -0.1545, -0.1570, -0.1582, -0.1583,  // theta = 2
        -0.1923, -0.1944, -0.1954, -0.1965,  // theta = 5
    };
    require(table4.rows.size() == assembled_ref.size(), "table4 shape mismatch");
    double worst4 = 0.0;
    for (std::size_t i = 0; i < table4.rows.size(); ++i) {
        const double err = std::abs(table4.rows[i].assembled_mean - assembled_ref[i]);
        worst4 = std::max(worst4, err);
        require(err <= 0.015, "table4 theta=" + num(table4.rows[i].parameter) + " n=" +
                                  std::to_string(table4.rows[i].n) + ": assembled " +
                                  num(table4.rows[i].assembled_mean) + " vs reference " +
                                  num(assembled_ref[i]) + " differs by " + num(err));
    }
    note << "; table4 assembled max |err| = " << num(worst4);
}

void criterion5_decomposition_identity(std::ostringstream& note) {
    auto rng = make_engine(505);
    double worst = 0.0;
    for (int d : {3, 4, 5}) {
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 5 + rng() % 56;
            const auto ranks = random_rank_matrix(rng, n, static_cast<std::size_t>(d));
            for (const auto& alpha : Direction::enumerate(d)) {
                const double direct = rho_hat_directional(ranks, alpha).value;
                const double decomposed = rho_hat_decomposed(ranks, alpha).value;
                worst = std::max(worst, std::abs(direct - decomposed));
                require(std::abs(direct - decomposed) <= 1e-10,
                        "identity broken: d=" + std::to_string(d) + " n=" + std::to_string(n) +
                            " alpha=" + alpha.to_string() + " gap=" +
                            num(std::abs(direct - decomposed)));
            }
        }
    }

    // d=3 closed form and d=4 prefactor, n = 5..100
    for (std::size_t n = 5; n <= 100; ++n) {
        const auto ranks = random_rank_matrix(rng, n, 3);
        const double nn = static_cast<double>(n);
        for (const auto& alpha : Direction::enumerate(3)) {
            const auto dr = directional_ranks(ranks, alpha);
            KahanSum sum;
            for (std::size_t r = 0; r < n; ++r)
                sum.add(static_cast<double>(dr(r, 0)) * dr(r, 1) * dr(r, 2));
            const double closed = 8.0 / (nn * (nn - 1.0) * (nn + 1.0) * (nn + 1.0)) * sum.value() -
                                  (nn + 1.0) / (nn - 1.0);
            const double direct = rho_hat_directional(ranks, alpha).value;
            require(std::abs(closed - direct) <= 1e-12 * std::max(1.0, std::abs(direct)),
                    "d=3 closed form differs at n=" + std::to_string(n));
        }

        double sum_j4 = 0.0;
        for (std::size_t j = 1; j <= n; ++j) sum_j4 += std::pow(static_cast<double>(j), 4);
        const double general = std::pow(nn + 1.0, 4) / (sum_j4 / nn - std::pow((nn + 1.0) / 2.0, 4));
        const double closed = 240.0 * std::pow(nn + 1.0, 3) /
                              (33.0 * nn * nn * nn + 27.0 * nn * nn - 37.0 * nn - 23.0);
        require(std::abs(general - closed) <= 1e-12 * closed,
                "d=4 prefactor differs at n=" + std::to_string(n));
    }
    note << "max |direct - decomposed| = " << num(worst);
}

void criterion6_structural_identities(std::ostringstream& note) {
    auto rng = make_engine(606);
    double worst_sum = 0.0;
    for (int d : {3, 4, 5}) {
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 10 + rng() % 90;
            const auto ranks = random_rank_matrix(rng, n, static_cast<std::size_t>(d));

            KahanSum total;
            for (const auto& alpha : Direction::enumerate(d))
                total.add(rho_hat_directional(ranks, alpha).value);
            worst_sum = std::max(worst_sum, std::abs(total.value()));
            require(std::abs(total.value()) <= 1e-12,
                    "direction sum " + num(total.value()) + " exceeds 1e-12");

            RankMatrix reflected = ranks;
            for (int& v : reflected.ranks) v = static_cast<int>(n) + 1 - v;
            for (const auto& alpha : Direction::enumerate(d))
                require(rho_hat_directional(ranks, alpha).value ==
                            rho_hat_directional(reflected, alpha.reflected()).value,
                        "reflection equivariance not exact");
        }
    }

    // perfect dependence: sampled comonotone data and a mixed aligned direction
    ComonotoneCopula mono(3);
    auto sample_rng = make_engine(607);
    const auto data = sample(mono, 64, sample_rng);
    const auto ranks = compute_ranks(data);
    require(rho_hat_directional(ranks, Direction::all_plus(3)).value == 1.0,
            "comonotone rho_hat^+ is not exactly 1");
    require(rho_hat_directional(ranks, Direction::all_minus(3)).value == 1.0,
            "comonotone rho_hat^- is not exactly 1");

    DataMatrix mixed(50, 2);
    for (std::size_t r = 0; r < 50; ++r) {
        const double u = unit_open(sample_rng);
        mixed(r, 0) = u;
        mixed(r, 1) = 1.0 - u;
    }
    require(rho_hat_directional(compute_ranks(mixed), Direction({1, -1})).value == 1.0,
            "anti-aligned perfect dependence is not exactly 1 at (1,-1)");
    note << "max |direction sum| = " << num(worst_sum);
}

void criterion7_fgm_simulation(std::ostringstream& note) {
    const int reps = 1000;
    const std::size_t n = 500;
    FgmCopula fgm(3, 0.6);
    KahanSum star, plus, minus;
    for (int rep = 0; rep < reps; ++rep) {
        auto rng = make_engine(derive_seed(707, 0, static_cast<std::uint64_t>(rep)));
        const auto ranks = compute_ranks(sample(fgm, n, rng));
        star.add(rho_hat_star3(ranks));
        plus.add(rho_hat_directional(ranks, Direction::all_plus(3)).value);
        minus.add(rho_hat_directional(ranks, Direction::all_minus(3)).value);
    }
    const double star_mean = star.value() / reps;
    const double plus_mean = plus.value() / reps;
    const double minus_mean = minus.value() / reps;
    const double target = 0.6 / 27.0; // 0.0222

    require(std::abs(star_mean) <= 0.005,
            "mean rho3_star = " + num(star_mean) + " exceeds 0.005");
    require(std::abs(std::abs(plus_mean) - target) <= 0.005,
            "|mean rho_hat^+| = " + num(std::abs(plus_mean)) + " is not 0.0222 +- 0.005");
    require(std::abs(std::abs(minus_mean) - target) <= 0.005,
            "|mean rho_hat^-| = " + num(std::abs(minus_mean)) + " is not 0.0222 +- 0.005");
    note << "star = " << num(star_mean) << ", plus = " << num(plus_mean)
         << ", minus = " << num(minus_mean);
}

void criterion8_process_integral(std::ostringstream& note) {
    auto rng = make_engine(808);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + static_cast<int>(rng() % 2);
        const std::size_t n = 5 + rng() % 46;
        const auto ranks = random_rank_matrix(rng, n, static_cast<std::size_t>(d));
        for (const auto& alpha : Direction::enumerate(d)) {
            const double via_process = estimator_via_process_integral(ranks, alpha);
            const double direct = rho_hat_directional(ranks, alpha).value;
            worst = std::max(worst, std::abs(via_process - direct));
            require(std::abs(via_process - direct) <= 1e-6,
                    "process integral differs by " + num(std::abs(via_process - direct)) +
                        " at d=" + std::to_string(d) + " n=" + std::to_string(n));
        }
    }
    note << "max |process - direct| = " << num(worst);
}

void criterion9_consistency(std::ostringstream& note) {
    ClaytonCopula clayton(3, 1.0);
    const auto rows = convergence_diagnostic(clayton, Direction({-1, 1, 1}), {50, 200, 800},
                                             800, 909);
    require(rows[0].sd > rows[1].sd && rows[1].sd > rows[2].sd,
            "replicate sd is not strictly decreasing: " + num(rows[0].sd) + ", " +
                num(rows[1].sd) + ", " + num(rows[2].sd));
    const double r1 = rows[0].sd / rows[1].sd;
    const double r2 = rows[1].sd / rows[2].sd;
    require(r1 >= 1.6 && r1 <= 2.6, "sd(50)/sd(200) = " + num(r1) + " outside [1.6, 2.6]");
    require(r2 >= 1.6 && r2 <= 2.6, "sd(200)/sd(800) = " + num(r2) + " outside [1.6, 2.6]");
    note << "sd ratios " << num(r1) << ", " << num(r2);
}

} // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        std::function<void(std::ostringstream&)> run;
    };
    const std::vector<Entry> criteria = {
        {1, "FGM closed form vs 32-node decomposition, d=3..5, all directions",
         criterion1_fgm_closed_form},
        {2, "comonotone closed forms vs 10^6-sample Monte Carlo oracle", criterion2_mn_closed_form},
        {3, "Clayton exact columns match reference tables within 5e-3", criterion3_clayton_exact},
        {4, "simulation presets reproduce reference table means", criterion4_table_reproduction},
        {5, "estimator decomposition identity and small-d closed forms",
         criterion5_decomposition_identity},
        {6, "direction-sum, reflection and perfect-dependence identities",
         criterion6_structural_identities},
        {7, "FGM d=3 simulation: rho3_star blind, directional magnitudes 0.0222",
         criterion7_fgm_simulation},
        {8, "empirical-process integral recovers the direct estimator",
         criterion8_process_integral},
        {9, "replicate sd shrinks at the root-n rate", criterion9_consistency},
    };

    int failures = 0;
    for (const auto& entry : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::ostringstream note;
        std::string failure;
        try {
            entry.run(note);
        } catch (const Failure& f) {
            failure = f.message;
        } catch (const std::exception& e) {
            failure = std::string("unexpected error: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (failure.empty()) {
            std::printf("[PASS] criterion %d: %s (%.1fs) -- %s\n", entry.id, entry.name, seconds,
                        note.str().c_str());
        } else {
            ++failures;
            std::printf("[FAIL] criterion %d: %s (%.1fs) -- %s\n", entry.id, entry.name, seconds,
                        failure.c_str());
        }
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures;
}
