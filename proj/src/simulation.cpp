#include "dirrho/simulation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dirrho/errors.hpp"
#include "dirrho/estimators.hpp"
#include "dirrho/quadrature.hpp"
#include "parallel.hpp"

namespace dirrho {

namespace {

constexpr double kIdentityTolerance = 1e-10;

std::uint64_t double_bits(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return bits;
}

// content-derived cell key: editing the grid never perturbs the sub-streams
// of cells that stay in it
std::uint64_t cell_key(std::optional<double> parameter, std::size_t n, const Direction& alpha) {
    std::uint64_t mask = 0;
    for (int i = 0; i < alpha.dim(); ++i)
        if (alpha.sign(i) == -1) mask |= std::uint64_t{1} << i;
    const std::uint64_t pbits = parameter ? double_bits(*parameter) : 0;
    return derive_seed(pbits, static_cast<std::uint64_t>(n), mask ^ (std::uint64_t(alpha.dim()) << 32));
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

MeanSd aggregate(const std::vector<double>& values) {
    KahanSum sum;
    for (double v : values) sum.add(v);
    MeanSd out;
    out.mean = sum.value() / static_cast<double>(values.size());
    KahanSum sq;
    for (double v : values) sq.add((v - out.mean) * (v - out.mean));
    out.sd = values.size() > 1
                 ? std::sqrt(sq.value() / (static_cast<double>(values.size()) - 1.0))
                 : 0.0;
    return out;
}

CoefficientEstimate exact_for(const ReplicationPlan& plan, const CopulaModel& model,
                              const Direction& alpha, MarginIntegralCache* cache) {
    if (plan.family == "product")
        return CoefficientEstimate{0.0, Method::closed_form, {}, {}};
    if (plan.family == "comonotone")
        return CoefficientEstimate{closed_form_mn(alpha).to_double(), Method::closed_form, {}, {}};
    if (plan.family == "fgm") {
        const auto& fgm = dynamic_cast<const FgmCopula&>(model);
        return CoefficientEstimate{closed_form_fgm(alpha, fgm.lambda()), Method::closed_form, {}, {}};
    }
    return rho_directional_decomposition(model, alpha, plan.exact_cfg, cache);
}

std::string param_label(const std::string& family) {
    if (family == "clayton") return "theta";
    if (family == "fgm") return "lambda";
    return "parameter";
}

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string param_text(std::optional<double> p) {
    if (!p) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", *p);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// ReplicationPlan
// ---------------------------------------------------------------------------

void ReplicationPlan::validate() const {
    if (replicates < 1) throw std::invalid_argument("replicate count must be >= 1");
    if (sample_sizes.empty()) throw std::invalid_argument("plan needs at least one sample size");
    for (std::size_t n : sample_sizes)
        if (n < 2) throw std::invalid_argument("sample sizes must be >= 2");
    if (directions.empty()) throw std::invalid_argument("plan needs at least one direction");
    for (const Direction& a : directions)
        if (a.dim() != dim) throw std::invalid_argument("plan direction dimension mismatch");
    const bool parameterless = family == "product" || family == "comonotone";
    if (!parameterless && parameters.empty())
        throw std::invalid_argument("family \"" + family + "\" needs a parameter grid");
    for (double p : parameters) model_for(p); // admissibility check
}

std::unique_ptr<CopulaModel> ReplicationPlan::model_for(std::optional<double> parameter) const {
    try {
        if (family == "product") return std::make_unique<ProductCopula>(dim);
        if (family == "comonotone") return std::make_unique<ComonotoneCopula>(dim);
        if (family == "clayton") {
            if (!parameter) throw std::invalid_argument("clayton needs theta");
            return std::make_unique<ClaytonCopula>(dim, *parameter);
        }
        if (family == "fgm") {
            if (!parameter) throw std::invalid_argument("fgm needs lambda");
            return std::make_unique<FgmCopula>(dim, *parameter);
        }
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("inadmissible plan parameter: " + std::string(e.what()));
    }
    throw std::invalid_argument("unknown family \"" + family + "\"");
}

std::vector<std::optional<double>> ReplicationPlan::parameter_cells() const {
    if (parameters.empty()) return {std::nullopt};
    std::vector<std::optional<double>> cells;
    for (double p : parameters) cells.emplace_back(p);
    return cells;
}

// ---------------------------------------------------------------------------
// run_plan
// ---------------------------------------------------------------------------

SimulationReport run_plan(const ReplicationPlan& plan) {
    plan.validate();
    SimulationReport report{plan, {}};

    for (const auto& parameter : plan.parameter_cells()) {
        const auto model = plan.model_for(parameter);
        MarginIntegralCache cache;
        for (std::size_t n : plan.sample_sizes) {
            for (const Direction& alpha : plan.directions) {
                const std::uint64_t key = cell_key(parameter, n, alpha);
                std::vector<double> values(static_cast<std::size_t>(plan.replicates));
                detail::parallel_for(values.size(), [&](std::size_t rep) {
                    auto rng = make_engine(derive_seed(plan.seed, key, rep));
                    const DataMatrix data = sample(*model, n, rng);
                    const RankMatrix ranks = compute_ranks(data);
                    const EstimatorResult direct = rho_hat_directional(ranks, alpha);
                    const EstimatorResult decomposed = rho_hat_decomposed(ranks, alpha);
                    if (std::abs(direct.value - decomposed.value) > kIdentityTolerance)
                        throw NumericalError(
                            "estimator decomposition identity broken within a replicate: |" +
                            std::to_string(direct.value) + " - " +
                            std::to_string(decomposed.value) + "| > 1e-10");
                    values[rep] = direct.value;
                });
                const MeanSd stats = aggregate(values);
                SimulationCell cell{parameter, n,          alpha, plan.replicates,
                                    stats.mean, stats.sd, {},    Method::quadrature};
                if (plan.attach_exact) {
                    const CoefficientEstimate exact = exact_for(plan, *model, alpha, &cache);
                    cell.exact = exact.value;
                    cell.exact_method = exact.method;
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// run_decomposition_table
// ---------------------------------------------------------------------------

DecompositionTable run_decomposition_table(const ReplicationPlan& plan) {
    plan.validate();
    if (plan.dim != 4 || plan.directions.size() != 1)
        throw std::invalid_argument(
            "decomposition table runs on a d = 4 plan with exactly one direction");

    const Direction alpha = plan.directions.front();
    const SignPartition part = partition_from_direction(alpha);
    const std::size_t m = part.positives.size();

    // subsets I u S in bit order over J: for (-1,1,1,-1) that is
    // {1,4},{1,2,4},{1,3,4},{1,2,3,4} in 1-based labels
    std::vector<std::vector<int>> subsets;
    std::vector<double> signs, weights;
    for (std::uint32_t bits = 0; bits < (1u << m); ++bits) {
        std::vector<int> K = part.negatives;
        for (std::size_t b = 0; b < m; ++b)
            if (bits & (1u << b)) K.push_back(part.positives[b]);
        std::sort(K.begin(), K.end());
        const int k = static_cast<int>(K.size());
        if (k <= 1) continue;
        const double pow2k = std::ldexp(1.0, k);
        subsets.push_back(K);
        signs.push_back(std::popcount(bits) % 2 == 0 ? 1.0 : -1.0);
        weights.push_back((pow2k - (k + 1)) / (pow2k * (k + 1)));
    }

    DecompositionTable table{plan, {}, {}};
    for (const auto& K : subsets) {
        std::string label = "rho_minus_";
        for (int i : K) label += std::to_string(i + 1);
        table.subset_labels.push_back(label);
    }

    for (const auto& parameter : plan.parameter_cells()) {
        const auto model = plan.model_for(parameter);
        MarginIntegralCache cache;
        std::optional<double> exact;
        if (plan.attach_exact)
            exact = exact_for(plan, *model, alpha, &cache).value;

        for (std::size_t n : plan.sample_sizes) {
            const std::uint64_t key = cell_key(parameter, n, alpha);
            const std::size_t reps = static_cast<std::size_t>(plan.replicates);
            std::vector<std::vector<double>> subset_values(subsets.size(),
                                                           std::vector<double>(reps));
            std::vector<double> assembled(reps);

            detail::parallel_for(reps, [&](std::size_t rep) {
                auto rng = make_engine(derive_seed(plan.seed, key, rep));
                const DataMatrix data = sample(*model, n, rng);
                const RankMatrix ranks = compute_ranks(data);
                const PseudoObservations pseudo = pseudo_observations(ranks);

                KahanSum combination;
                for (std::size_t s = 0; s < subsets.size(); ++s) {
                    const double sub = rho_hat_minus_subset(pseudo, subsets[s]);
                    subset_values[s][rep] = sub;
                    combination.add(signs[s] * weights[s] * sub);
                }
                KahanSum denom;
                for (std::size_t j = 1; j <= n; ++j)
                    denom.add(std::pow(static_cast<double>(j), 4));
                const double np1 = static_cast<double>(n) + 1.0;
                const double d_rank =
                    denom.value() / static_cast<double>(n) - std::pow(np1 / 2.0, 4);
                assembled[rep] = std::pow(np1, 4) / d_rank * combination.value();

                const double direct = rho_hat_directional(ranks, alpha).value;
                if (std::abs(direct - assembled[rep]) > kIdentityTolerance)
                    throw NumericalError("decomposition identity broken within a replicate");
            });

            DecompositionRow row;
            row.parameter = parameter.value_or(0.0);
            row.n = n;
            for (const auto& vals : subset_values) row.subset_means.push_back(aggregate(vals).mean);
            row.assembled_mean = aggregate(assembled).mean;
            row.exact = exact;
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// convergence_diagnostic
// ---------------------------------------------------------------------------

std::vector<ConvergenceRow> convergence_diagnostic(const CopulaModel& model,
                                                   const Direction& alpha,
                                                   const std::vector<std::size_t>& ladder,
                                                   int replicates, std::uint64_t seed) {
    if (ladder.size() < 3)
        throw std::invalid_argument("convergence diagnostic needs a ladder of >= 3 sizes");
    std::vector<ConvergenceRow> rows;
    for (std::size_t n : ladder) {
        const std::uint64_t key = cell_key(std::nullopt, n, alpha);
        std::vector<double> values(static_cast<std::size_t>(replicates));
        detail::parallel_for(values.size(), [&](std::size_t rep) {
            auto rng = make_engine(derive_seed(seed, key, rep));
            const DataMatrix data = sample(model, n, rng);
            values[rep] = rho_hat_directional(compute_ranks(data), alpha).value;
        });
        const MeanSd stats = aggregate(values);
        rows.push_back({n, stats.sd, std::sqrt(static_cast<double>(n)) * stats.sd});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() { return {"table1", "table2", "table3", "table4"}; }

Preset preset_plan(const std::string& name, std::uint64_t seed) {
    ReplicationPlan plan;
    plan.family = "clayton";
    plan.parameters = {0.4, 0.6, 1.0, 2.0, 5.0};
    plan.replicates = 1000;
    plan.seed = seed;

    if (name == "table1" || name == "table2") {
        plan.dim = 3;
        plan.sample_sizes = {20, 50, 100, 500};
        plan.directions = {Direction::parse(name == "table1" ? "(-1,1,1)" : "(-1,-1,1)")};
        return Preset{std::move(plan), false};
    }
    if (name == "table3" || name == "table4") {
        plan.dim = 4;
        plan.sample_sizes = name == "table3" ? std::vector<std::size_t>{20, 50, 100, 500}
                                             : std::vector<std::size_t>{20, 50, 100, 200};
        plan.directions = {Direction::parse("(-1,1,1,-1)")};
        return Preset{std::move(plan), name == "table4"};
    }
    throw UsageError("unknown preset \"" + name + "\" (expected table1..table4)");
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

std::string report_to_csv(const SimulationReport& report, int precision) {
    std::ostringstream out;
    const auto& plan = report.plan;
    if (plan.directions.size() == 1) {
        // grid layout: one row per parameter, one column per sample size
        out << param_label(plan.family) << ",exact";
        for (std::size_t n : plan.sample_sizes) out << ",n=" << n;
        out << "\n";
        for (const auto& parameter : plan.parameter_cells()) {
            out << param_text(parameter);
            bool first = true;
            for (const auto& cell : report.cells) {
                if (cell.parameter != parameter) continue;
                if (first) {
                    out << "," << (cell.exact ? fixed(*cell.exact, precision) : "");
                    first = false;
                }
                out << "," << fixed(cell.mean, precision);
            }
            out << "\n";
        }
        return out.str();
    }

    out << "family,parameter,alpha,n,replicates,mean,sd,exact,exact_method\n";
    for (const auto& cell : report.cells) {
        out << plan.family << "," << param_text(cell.parameter) << ",\""
            << cell.alpha.to_string() << "\"," << cell.n << "," << cell.replicates << ","
            << fixed(cell.mean, precision) << "," << fixed(cell.sd, precision) << ",";
        if (cell.exact) out << fixed(*cell.exact, precision);
        out << "," << (cell.exact ? method_name(cell.exact_method) : "");
        out << "\n";
    }
    return out.str();
}

std::string report_to_text(const SimulationReport& report, int precision) {
    std::ostringstream out;
    const auto& plan = report.plan;
    out << "family: " << plan.family << "  d=" << plan.dim << "  replicates: " << plan.replicates
        << "  seed: " << plan.seed << "\n";
    const int w = precision + 6;

    if (plan.directions.size() == 1) {
        out << "direction: " << plan.directions.front().to_string() << "\n\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%-10s%*s", param_label(plan.family).c_str(), w, "exact");
        out << buf;
        for (std::size_t n : plan.sample_sizes) {
            std::snprintf(buf, sizeof buf, "%*s", w, ("n=" + std::to_string(n)).c_str());
            out << buf;
        }
        out << "\n";
        for (const auto& parameter : plan.parameter_cells()) {
            std::snprintf(buf, sizeof buf, "%-10s", param_text(parameter).c_str());
            out << buf;
            bool first = true;
            for (const auto& cell : report.cells) {
                if (cell.parameter != parameter) continue;
                if (first) {
                    std::snprintf(buf, sizeof buf, "%*s", w,
                                  cell.exact ? fixed(*cell.exact, precision).c_str() : "-");
                    out << buf;
                    first = false;
                }
                std::snprintf(buf, sizeof buf, "%*s", w, fixed(cell.mean, precision).c_str());
                out << buf;
            }
            out << "\n";
        }
        return out.str();
    }

    out << "\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-10s%-16s%8s%8s%*s%*s%*s\n", param_label(plan.family).c_str(),
                  "alpha", "n", "reps", w, "mean", w, "sd", w, "exact");
    out << buf;
    for (const auto& cell : report.cells) {
        std::snprintf(buf, sizeof buf, "%-10s%-16s%8zu%8d%*s%*s%*s\n",
                      param_text(cell.parameter).c_str(), cell.alpha.to_string().c_str(), cell.n,
                      cell.replicates, w, fixed(cell.mean, precision).c_str(), w,
                      fixed(cell.sd, precision).c_str(), w,
                      cell.exact ? fixed(*cell.exact, precision).c_str() : "-");
        out << buf;
    }
    return out.str();
}

std::string report_to_json(const SimulationReport& report) {
    nlohmann::json j;
    const auto& plan = report.plan;
    j["plan"] = {{"family", plan.family},
                 {"dim", plan.dim},
                 {"parameters", plan.parameters},
                 {"sample_sizes", plan.sample_sizes},
                 {"replicates", plan.replicates},
                 {"seed", plan.seed}};
    for (const Direction& a : plan.directions) j["plan"]["directions"].push_back(a.to_string());
    j["cells"] = nlohmann::json::array();
    for (const auto& cell : report.cells) {
        nlohmann::json c = {{"n", cell.n},
                            {"alpha", cell.alpha.to_string()},
                            {"replicates", cell.replicates},
                            {"mean", cell.mean},
                            {"sd", cell.sd}};
        if (cell.parameter) c["parameter"] = *cell.parameter;
        if (cell.exact) {
            c["exact"] = *cell.exact;
            c["exact_method"] = method_name(cell.exact_method);
        }
        j["cells"].push_back(std::move(c));
    }
    return j.dump(2) + "\n";
}

std::string decomposition_to_csv(const DecompositionTable& table, int precision) {
    std::ostringstream out;
    out << "n," << param_label(table.plan.family) << ",exact";
    for (const auto& label : table.subset_labels) out << "," << label;
    out << ",rho_hat\n";
    for (const auto& row : table.rows) {
        out << row.n << "," << param_text(row.parameter) << ","
            << (row.exact ? fixed(*row.exact, precision) : "");
        for (double v : row.subset_means) out << "," << fixed(v, precision);
        out << "," << fixed(row.assembled_mean, precision) << "\n";
    }
    return out.str();
}

std::string decomposition_to_text(const DecompositionTable& table, int precision) {
    std::ostringstream out;
    const auto& plan = table.plan;
    out << "family: " << plan.family << "  d=" << plan.dim
        << "  direction: " << plan.directions.front().to_string()
        << "  replicates: " << plan.replicates << "  seed: " << plan.seed << "\n\n";
    const int w = std::max<int>(precision + 6, 16);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-8s%-8s%*s", "n", param_label(plan.family).c_str(), w,
                  "exact");
    out << buf;
    for (const auto& label : table.subset_labels) {
        std::snprintf(buf, sizeof buf, "%*s", w, label.c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "%*s", w, "rho_hat");
    out << buf << "\n";
    for (const auto& row : table.rows) {
        std::snprintf(buf, sizeof buf, "%-8zu%-8s%*s", row.n, param_text(row.parameter).c_str(), w,
                      row.exact ? fixed(*row.exact, precision).c_str() : "-");
        out << buf;
        for (double v : row.subset_means) {
            std::snprintf(buf, sizeof buf, "%*s", w, fixed(v, precision).c_str());
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%*s", w, fixed(row.assembled_mean, precision).c_str());
        out << buf << "\n";
    }
    return out.str();
}

std::string decomposition_to_json(const DecompositionTable& table) {
    nlohmann::json j;
    const auto& plan = table.plan;
    j["plan"] = {{"family", plan.family},
                 {"dim", plan.dim},
                 {"parameters", plan.parameters},
                 {"sample_sizes", plan.sample_sizes},
                 {"replicates", plan.replicates},
                 {"seed", plan.seed},
                 {"direction", plan.directions.front().to_string()}};
    j["subset_labels"] = table.subset_labels;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json r = {{"n", row.n},
                            {"parameter", row.parameter},
                            {"assembled_mean", row.assembled_mean}};
        if (row.exact) r["exact"] = *row.exact;
        for (std::size_t s = 0; s < table.subset_labels.size(); ++s)
            r[table.subset_labels[s]] = row.subset_means[s];
        j["rows"].push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

} // namespace dirrho
