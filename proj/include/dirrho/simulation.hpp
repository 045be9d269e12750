#ifndef DIRRHO_SIMULATION_HPP
#define DIRRHO_SIMULATION_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dirrho/copulas.hpp"
#include "dirrho/core_types.hpp"
#include "dirrho/exact_coefficients.hpp"
#include "dirrho/rng.hpp"

namespace dirrho {

/// A full replication study: for every (parameter, sample size, direction)
/// cell, `replicates` independent samples are drawn and the rank estimator is
/// evaluated on each. Sub-seeds derive from (master seed, cell index,
/// replicate index), so editing the grid never perturbs other cells' streams
/// and the report is bit-identical regardless of thread count.
struct ReplicationPlan {
    std::string family = "clayton";     ///< clayton | fgm | product | comonotone
    int dim = 3;
    std::vector<double> parameters;     ///< empty for parameterless families
    std::vector<std::size_t> sample_sizes;
    std::vector<Direction> directions;
    int replicates = 1000;
    std::uint64_t seed = kDefaultSeed;
    bool attach_exact = true;
    IntegratorConfig exact_cfg;

    void validate() const;
    std::unique_ptr<CopulaModel> model_for(std::optional<double> parameter) const;

    /// Parameter list with a single empty slot for parameterless families.
    std::vector<std::optional<double>> parameter_cells() const;
};

struct SimulationCell {
    std::optional<double> parameter;
    std::size_t n = 0;
    Direction alpha;
    int replicates = 0;
    double mean = 0.0;
    double sd = 0.0;
    std::optional<double> exact;
    Method exact_method = Method::quadrature;
};

struct SimulationReport {
    ReplicationPlan plan;
    std::vector<SimulationCell> cells; ///< parameter-major, then size, then direction
};

/// Runs the plan. Every replicate also assembles the estimator through the
/// subset decomposition and fails (NumericalError) if the two routes disagree
/// beyond 1e-10 -- the identity is carried through the harness as a
/// self-check.
SimulationReport run_plan(const ReplicationPlan& plan);

/// One row of the subset-decomposition study: mean subset rho_hat^- values
/// next to the assembled directional estimate.
struct DecompositionRow {
    double parameter = 0.0;
    std::size_t n = 0;
    std::vector<double> subset_means; ///< one per subset, in subset order
    double assembled_mean = 0.0;
    std::optional<double> exact;
};

struct DecompositionTable {
    ReplicationPlan plan;
    std::vector<std::string> subset_labels; ///< e.g. "rho_minus_14" (1-based)
    std::vector<DecompositionRow> rows;
};

/// The d = 4 decomposition study: the plan must hold exactly one direction of
/// dimension 4; the subsets I union S are derived from it.
DecompositionTable run_decomposition_table(const ReplicationPlan& plan);

struct ConvergenceRow {
    std::size_t n = 0;
    double sd = 0.0;
    double sqrt_n_sd = 0.0;
};

/// Replicate standard deviation of rho_hat across a ladder of sample sizes
/// (at least 3). Under root-n consistency the sd column decreases and
/// sqrt(n)*sd stays roughly flat.
std::vector<ConvergenceRow> convergence_diagnostic(const CopulaModel& model,
                                                   const Direction& alpha,
                                                   const std::vector<std::size_t>& ladder,
                                                   int replicates, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Presets and report emission
// ---------------------------------------------------------------------------

/// Built-in study grids. table1/table2: Clayton d=3 at directions (-1,1,1)
/// and (-1,-1,1), theta in {0.4,0.6,1,2,5}, n in {20,50,100,500}. table3:
/// Clayton d=4 at (-1,1,1,-1), same grid. table4: the same d=4 study as a
/// decomposition table with n in {20,50,100,200}.
struct Preset {
    ReplicationPlan plan;
    bool decomposition_table = false;
};

Preset preset_plan(const std::string& name, std::uint64_t seed);
std::vector<std::string> preset_names();

std::string report_to_csv(const SimulationReport& report, int precision);
std::string report_to_text(const SimulationReport& report, int precision);
std::string report_to_json(const SimulationReport& report);

std::string decomposition_to_csv(const DecompositionTable& table, int precision);
std::string decomposition_to_text(const DecompositionTable& table, int precision);
std::string decomposition_to_json(const DecompositionTable& table);

} // namespace dirrho

#endif
