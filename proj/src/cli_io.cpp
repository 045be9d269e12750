#include "dirrho/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dirrho/copulas.hpp"
#include "dirrho/errors.hpp"
#include "dirrho/estimators.hpp"
#include "dirrho/exact_coefficients.hpp"
#include "dirrho/rng.hpp"
#include "dirrho/simulation.hpp"

namespace dirrho {

namespace {

constexpr int kDirectionGuard = 16;

// ---------------------------------------------------------------------------
// CSV parsing
// ---------------------------------------------------------------------------

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == delimiter) {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
    const std::string text = trim(raw);
    if (text.empty())
        throw DataError("blank cell at data row " + std::to_string(row) + ", column " +
                        std::to_string(col));
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw DataError("non-numeric cell \"" + text + "\" at data row " + std::to_string(row) +
                        ", column " + std::to_string(col));
    return value;
}

} // namespace

void OutputSpec::validate() const {
    if (precision < 1 || precision > 15)
        throw UsageError("precision must be between 1 and 15");
}

Dataset ingest_csv_stream(std::istream& in, const std::string& name, const CsvOptions& options) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw DataError(name + ": file is empty");

    std::size_t first_data = 0;
    std::vector<std::string> names;
    const std::size_t width = split_line(lines[0], options.delimiter).size();
    if (options.header) {
        auto fields = split_line(lines[0], options.delimiter);
        for (auto& f : fields) names.push_back(trim(f));
        first_data = 1;
    } else {
        for (std::size_t c = 0; c < width; ++c) names.push_back("col" + std::to_string(c + 1));
    }
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            if (names[i] == names[j])
                throw DataError(name + ": duplicate column name \"" + names[i] + "\"");

    // resolve the column selection: names (with a header) or 1-based indices
    std::vector<std::size_t> selected;
    if (options.columns.empty()) {
        for (std::size_t c = 0; c < width; ++c) selected.push_back(c);
    } else {
        for (const std::string& want : options.columns) {
            auto it = std::find(names.begin(), names.end(), want);
            if (it != names.end()) {
                selected.push_back(static_cast<std::size_t>(it - names.begin()));
                continue;
            }
            int idx = 0;
            auto [ptr, ec] = std::from_chars(want.data(), want.data() + want.size(), idx);
            if (ec == std::errc{} && ptr == want.data() + want.size() && idx >= 1 &&
                static_cast<std::size_t>(idx) <= width) {
                selected.push_back(static_cast<std::size_t>(idx - 1));
                continue;
            }
            throw DataError(name + ": no column named \"" + want + "\"");
        }
    }
    if (selected.size() < 2) throw DataError(name + ": need at least 2 selected columns");

    const std::size_t rows = lines.size() - first_data;
    if (rows < 2) throw DataError(name + ": need at least 2 data rows");

    Dataset ds;
    ds.source_path = name;
    ds.values = DataMatrix(rows, selected.size());
    for (std::size_t c = 0; c < selected.size(); ++c)
        ds.column_names.push_back(names[selected[c]]);

    for (std::size_t r = 0; r < rows; ++r) {
        auto fields = split_line(lines[first_data + r], options.delimiter);
        if (fields.size() != width)
            throw DataError(name + ": ragged row " + std::to_string(r + 1) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(width));
        for (std::size_t c = 0; c < selected.size(); ++c)
            ds.values(r, c) = parse_cell(fields[selected[c]], r + 1, selected[c] + 1);
    }
    return ds;
}

Dataset ingest_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path + "\"");
    return ingest_csv_stream(in, path, options);
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

namespace {

void write_output(const OutputSpec& spec, const std::string& payload, std::ostream& stdout_stream) {
    if (spec.destination.empty()) {
        stdout_stream << payload;
        return;
    }
    std::ofstream out(spec.destination, std::ios::binary);
    if (!out) throw DataError("cannot write \"" + spec.destination + "\"");
    out << payload;
}

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

OutputFormat parse_format(const std::string& text) {
    if (text == "csv") return OutputFormat::csv;
    if (text == "json") return OutputFormat::json;
    if (text == "table") return OutputFormat::table;
    throw UsageError("unknown format \"" + text + "\" (expected csv, json or table)");
}

std::vector<Direction> resolve_directions(const std::vector<std::string>& texts, bool all, int d,
                                          bool force) {
    if (all || texts.empty()) {
        if (d > kDirectionGuard && !force)
            throw UsageError("enumerating 2^" + std::to_string(d) +
                             " directions needs --force (d > " +
                             std::to_string(kDirectionGuard) + ")");
        return Direction::enumerate(d);
    }
    std::vector<Direction> out;
    for (const auto& t : texts) {
        Direction a = Direction::parse(t);
        if (a.dim() != d)
            throw UsageError("direction " + a.to_string() + " has dimension " +
                             std::to_string(a.dim()) + ", data has " + std::to_string(d));
        out.push_back(std::move(a));
    }
    return out;
}

struct EstimateArgs {
    std::string input;
    CsvOptions csv;
    std::vector<std::string> directions;
    bool all = false;
    bool force = false;
    std::string tie_policy = "stable";
    std::uint64_t tie_seed = 0;
    OutputSpec output;
};

int cmd_estimate(const EstimateArgs& args, std::ostream& out, std::ostream& err) {
    args.output.validate();
    const Dataset ds = ingest_csv(args.input, args.csv);
    const int d = static_cast<int>(ds.values.cols());
    if (d < 2) throw DataError("estimation needs at least 2 columns");

    const TiePolicy policy =
        args.tie_policy == "random" ? TiePolicy::random : TiePolicy::stable;
    const RankMatrix ranks = compute_ranks(ds.values, policy, args.tie_seed);
    if (ranks.total_ties() > 0)
        err << "warning: broke " << ranks.total_ties() << " rank ties (policy: "
            << args.tie_policy << ")\n";

    std::vector<Direction> directions =
        resolve_directions(args.directions, args.all, d, args.force);
    std::vector<EstimatorResult> results;
    results.reserve(directions.size());
    for (const Direction& a : directions) results.push_back(rho_hat_directional(ranks, a));
    std::stable_sort(results.begin(), results.end(),
                     [](const EstimatorResult& a, const EstimatorResult& b) {
                         return a.value > b.value;
                     });

    std::optional<double> star3;
    if (d == 3) star3 = rho_hat_star3(ranks);

    std::ostringstream payload;
    const int p = args.output.precision;
    switch (args.output.format) {
        case OutputFormat::csv: {
            payload << "alpha,rho_hat\n";
            for (const auto& r : results)
                payload << "\"" << r.alpha.to_string() << "\"," << fixed(r.value, p) << "\n";
            if (star3) payload << "rho3_star," << fixed(*star3, p) << "\n";
            break;
        }
        case OutputFormat::json: {
            nlohmann::json j;
            j["source"] = ds.source_path;
            j["n"] = ds.values.rows();
            j["d"] = d;
            j["columns"] = ds.column_names;
            j["tie_count"] = ranks.total_ties();
            j["estimates"] = nlohmann::json::array();
            for (const auto& r : results)
                j["estimates"].push_back({{"alpha", r.alpha.to_string()}, {"rho_hat", r.value}});
            if (star3) j["rho3_star"] = *star3;
            payload << j.dump(2) << "\n";
            break;
        }
        case OutputFormat::table: {
            payload << "n=" << ds.values.rows() << "  d=" << d
                    << "  ties=" << ranks.total_ties() << "\n\n";
            char buf[64];
            std::snprintf(buf, sizeof buf, "%-20s%12s\n", "alpha", "rho_hat");
            payload << buf;
            for (const auto& r : results) {
                std::snprintf(buf, sizeof buf, "%-20s%12s\n", r.alpha.to_string().c_str(),
                              fixed(r.value, p).c_str());
                payload << buf;
            }
            if (star3) {
                std::snprintf(buf, sizeof buf, "%-20s%12s\n", "rho3_star",
                              fixed(*star3, p).c_str());
                payload << buf;
            }
            break;
        }
    }
    write_output(args.output, payload.str(), out);
    return 0;
}

struct ExactArgs {
    std::string family;
    std::vector<std::string> directions;
    bool all = false;
    bool force = false;
    std::string method = "auto"; ///< auto | quadrature | mc
    int nodes = 0;
    long long mc_samples = 1'000'000;
    std::uint64_t seed = kDefaultSeed;
    double target_se = 0.0;
    OutputSpec output;
};

int cmd_exact(const ExactArgs& args, std::ostream& out, std::ostream& err) {
    (void)err;
    args.output.validate();
    const auto model = parse_family_spec(args.family);
    const int d = model->dim();
    std::vector<Direction> directions =
        resolve_directions(args.directions, args.all, d, args.force);

    const bool closed_family =
        model->family() == "product" || model->family() == "comonotone" || model->family() == "fgm";
    const bool use_mc = args.method == "mc";
    if (args.method != "auto" && args.method != "quadrature" && args.method != "mc")
        throw UsageError("unknown method \"" + args.method + "\"");

    IntegratorConfig cfg = use_mc
                               ? IntegratorConfig::monte_carlo(args.mc_samples, args.seed,
                                                               args.target_se)
                               : IntegratorConfig::quadrature(args.nodes);
    MarginIntegralCache cache;

    std::optional<double> parameter;
    if (const auto* cl = dynamic_cast<const ClaytonCopula*>(model.get())) parameter = cl->theta();
    if (const auto* fg = dynamic_cast<const FgmCopula*>(model.get())) parameter = fg->lambda();

    std::vector<DirectionalRho> rows;
    for (const Direction& alpha : directions) {
        CoefficientEstimate est;
        if (use_mc) {
            est = rho_directional_definition(*model, alpha, cfg);
        } else if (closed_family && args.method == "auto") {
            if (model->family() == "product")
                est = CoefficientEstimate{0.0, Method::closed_form, {}, {}};
            else if (model->family() == "comonotone")
                est = CoefficientEstimate{closed_form_mn(alpha).to_double(), Method::closed_form,
                                          {}, {}};
            else
                est = CoefficientEstimate{
                    closed_form_fgm(alpha, dynamic_cast<const FgmCopula&>(*model).lambda()),
                    Method::closed_form, {}, {}};
        } else {
            est = rho_directional_decomposition(*model, alpha, cfg, &cache);
        }
        rows.push_back(DirectionalRho{alpha, est, model->family(), parameter});
    }

    std::ostringstream payload;
    const int p = args.output.precision;
    switch (args.output.format) {
        case OutputFormat::csv: {
            payload << "alpha,rho,method,std_error\n";
            for (const auto& r : rows) {
                payload << "\"" << r.alpha.to_string() << "\"," << fixed(r.estimate.value, p)
                        << "," << method_name(r.estimate.method) << ",";
                if (r.estimate.std_error) payload << fixed(*r.estimate.std_error, p);
                payload << "\n";
            }
            break;
        }
        case OutputFormat::json: {
            nlohmann::json j;
            j["family"] = args.family;
            j["values"] = nlohmann::json::array();
            for (const auto& r : rows) {
                nlohmann::json v = {{"alpha", r.alpha.to_string()},
                                    {"rho", r.estimate.value},
                                    {"method", method_name(r.estimate.method)}};
                if (r.estimate.std_error) v["std_error"] = *r.estimate.std_error;
                if (r.estimate.sample_count) v["sample_count"] = *r.estimate.sample_count;
                j["values"].push_back(std::move(v));
            }
            payload << j.dump(2) << "\n";
            break;
        }
        case OutputFormat::table: {
            payload << model->spec_string() << "\n\n";
            char buf[96];
            std::snprintf(buf, sizeof buf, "%-20s%12s  %-14s%12s\n", "alpha", "rho", "method",
                          "std_error");
            payload << buf;
            for (const auto& r : rows) {
                std::snprintf(buf, sizeof buf, "%-20s%12s  %-14s%12s\n",
                              r.alpha.to_string().c_str(), fixed(r.estimate.value, p).c_str(),
                              std::string(method_name(r.estimate.method)).c_str(),
                              r.estimate.std_error ? fixed(*r.estimate.std_error, p).c_str() : "-");
                payload << buf;
            }
            break;
        }
    }
    write_output(args.output, payload.str(), out);
    return 0;
}

struct SimulateArgs {
    std::string preset;
    std::string family;
    int dim = 0;
    std::vector<double> params;
    std::vector<std::size_t> sizes;
    std::vector<std::string> directions;
    int reps = 1000;
    bool reps_given = false;
    std::uint64_t seed = kDefaultSeed;
    bool no_exact = false;
    OutputSpec output;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    (void)err;
    args.output.validate();

    Preset preset{ReplicationPlan{}, false};
    if (!args.preset.empty()) {
        preset = preset_plan(args.preset, args.seed);
        if (args.reps_given) preset.plan.replicates = args.reps;
        if (!args.sizes.empty()) preset.plan.sample_sizes = args.sizes;
    } else {
        if (args.family.empty())
            throw UsageError("simulate needs --preset or an explicit --family plan");
        auto model = parse_family_spec(args.family); // validates family + parameter syntax
        preset.plan.family = model->family();
        preset.plan.dim = model->dim();
        preset.plan.parameters = args.params;
        if (preset.plan.parameters.empty()) {
            if (auto* cl = dynamic_cast<const ClaytonCopula*>(model.get()))
                preset.plan.parameters = {cl->theta()};
            else if (auto* fg = dynamic_cast<const FgmCopula*>(model.get()))
                preset.plan.parameters = {fg->lambda()};
        }
        preset.plan.sample_sizes = args.sizes.empty() ? std::vector<std::size_t>{20, 50, 100, 500}
                                                      : args.sizes;
        for (const auto& t : args.directions)
            preset.plan.directions.push_back(Direction::parse(t));
        if (preset.plan.directions.empty())
            throw UsageError("simulate needs at least one --direction");
        preset.plan.replicates = args.reps;
        preset.plan.seed = args.seed;
    }
    preset.plan.attach_exact = !args.no_exact;
    try {
        preset.plan.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    std::string payload;
    if (preset.decomposition_table) {
        const DecompositionTable table = run_decomposition_table(preset.plan);
        switch (args.output.format) {
            case OutputFormat::csv: payload = decomposition_to_csv(table, args.output.precision); break;
            case OutputFormat::json: payload = decomposition_to_json(table); break;
            case OutputFormat::table: payload = decomposition_to_text(table, args.output.precision); break;
        }
    } else {
        const SimulationReport report = run_plan(preset.plan);
        switch (args.output.format) {
            case OutputFormat::csv: payload = report_to_csv(report, args.output.precision); break;
            case OutputFormat::json: payload = report_to_json(report); break;
            case OutputFormat::table: payload = report_to_text(report, args.output.precision); break;
        }
    }
    write_output(args.output, payload, out);
    return 0;
}

struct SampleArgs {
    std::string family;
    std::size_t count = 100;
    std::uint64_t seed = kDefaultSeed;
    std::string output;
};

int cmd_sample(const SampleArgs& args, std::ostream& out, std::ostream& err) {
    (void)err;
    const auto model = parse_family_spec(args.family);
    if (args.count < 1) throw UsageError("sample count must be >= 1");
    auto rng = make_engine(args.seed);
    const DataMatrix data = sample(*model, args.count, rng);

    std::ostringstream payload;
    for (int c = 0; c < model->dim(); ++c) payload << (c ? "," : "") << "u" << (c + 1);
    payload << "\n";
    char buf[40];
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < data.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", data(r, c));
            payload << (c ? "," : "") << buf;
        }
        payload << "\n";
    }
    OutputSpec spec;
    spec.destination = args.output;
    write_output(spec, payload.str(), out);
    return 0;
}

std::uint64_t env_seed_default() {
    if (const char* env = std::getenv("DIRRHO_SEED")) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), v);
        if (ec != std::errc{} || ptr != env + std::strlen(env))
            throw UsageError("DIRRHO_SEED is not a valid unsigned integer");
        return v;
    }
    return kDefaultSeed;
}

void add_output_options(CLI::App* cmd, std::string& format, OutputSpec& spec) {
    cmd->add_option("--format", format, "Output format: csv, json or table")
        ->default_val("table");
    cmd->add_option("-o,--output", spec.destination, "Write to this file instead of stdout");
    cmd->add_option("--precision", spec.precision, "Printed decimals (1-15)")->default_val(4);
}

} // namespace

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"directional rho-coefficients of multivariate dependence"};
    app.require_subcommand(1);

    EstimateArgs est;
    std::string est_format = "table", est_delim = ",";
    bool est_no_header = false;
    auto* est_cmd = app.add_subcommand(
        "estimate", "Rank-based directional estimates from a CSV dataset");
    est_cmd->add_option("-i,--input", est.input, "CSV file")->required();
    est_cmd->add_flag("--no-header", est_no_header, "Treat the first row as data");
    est_cmd->add_option("--delimiter", est_delim, "Field delimiter (default ,)");
    est_cmd->add_option("--columns", est.csv.columns,
                        "Columns to use: names or 1-based indices")->delimiter(',');
    est_cmd->add_option("-a,--direction", est.directions,
                        "Direction, compact (-++) or tuple ((-1,1,1)); repeatable");
    est_cmd->add_flag("--all", est.all, "All 2^d directions (default)");
    est_cmd->add_flag("--force", est.force, "Override the d <= 16 direction-enumeration guard");
    est_cmd->add_option("--ties", est.tie_policy, "Tie policy: stable or random")
        ->default_val("stable");
    est_cmd->add_option("--tie-seed", est.tie_seed, "Seed for the random tie policy");
    add_output_options(est_cmd, est_format, est.output);

    ExactArgs exact;
    std::string exact_format = "table";
    auto* exact_cmd = app.add_subcommand(
        "exact", "Population coefficients for a parametric family");
    exact_cmd->add_option("-f,--family", exact.family,
                          "Family spec, e.g. clayton:theta=1:d=3")->required();
    exact_cmd->add_option("-a,--direction", exact.directions, "Direction; repeatable");
    exact_cmd->add_flag("--all", exact.all, "All 2^d directions (default)");
    exact_cmd->add_flag("--force", exact.force, "Override the direction-enumeration guard");
    exact_cmd->add_option("--method", exact.method, "auto, quadrature or mc")->default_val("auto");
    exact_cmd->add_option("--nodes", exact.nodes, "Quadrature nodes per dimension");
    exact_cmd->add_option("--mc-samples", exact.mc_samples, "Monte Carlo sample count");
    exact_cmd->add_option("--seed", exact.seed, "Monte Carlo seed");
    exact_cmd->add_option("--target-se", exact.target_se,
                          "Fail if the Monte Carlo standard error exceeds this");
    add_output_options(exact_cmd, exact_format, exact.output);

    SimulateArgs sim;
    std::string sim_format = "table";
    auto* sim_cmd = app.add_subcommand(
        "simulate", "Replicated estimator study over a parameter/size grid");
    sim_cmd->add_option("--preset", sim.preset, "Built-in grid: table1, table2, table3, table4");
    sim_cmd->add_option("-f,--family", sim.family, "Family spec (alternative to --preset)");
    sim_cmd->add_option("--params", sim.params, "Parameter grid")->delimiter(',');
    sim_cmd->add_option("--sizes", sim.sizes, "Sample sizes")->delimiter(',');
    sim_cmd->add_option("-a,--direction", sim.directions, "Direction; repeatable");
    sim_cmd->add_option("--reps", sim.reps, "Replicates per cell")->default_val(1000);
    sim_cmd->add_option("--seed", sim.seed, "Master seed");
    sim_cmd->add_flag("--no-exact", sim.no_exact, "Skip the exact-value column");
    add_output_options(sim_cmd, sim_format, sim.output);

    SampleArgs smp;
    auto* smp_cmd = app.add_subcommand("sample", "Emit a synthetic CSV sample from a family");
    smp_cmd->add_option("-f,--family", smp.family, "Family spec")->required();
    smp_cmd->add_option("-n,--count", smp.count, "Rows to draw")->default_val(100);
    smp_cmd->add_option("--seed", smp.seed, "Sampler seed");
    smp_cmd->add_option("-o,--output", smp.output, "Write to this file instead of stdout");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream help_out, help_err;
        const int code = app.exit(e, help_out, help_err);
        out << help_out.str();
        err << help_err.str();
        return code == 0 ? 0 : 2;
    }

    try {
        const std::uint64_t fallback_seed = env_seed_default();
        if (est_cmd->parsed()) {
            est.csv.header = !est_no_header;
            if (est_delim.size() != 1) throw UsageError("delimiter must be a single character");
            est.csv.delimiter = est_delim[0];
            if (est.tie_policy != "stable" && est.tie_policy != "random")
                throw UsageError("tie policy must be stable or random");
            if (est_cmd->count("--tie-seed") == 0) est.tie_seed = fallback_seed;
            est.output.format = parse_format(est_format);
            return cmd_estimate(est, out, err);
        }
        if (exact_cmd->parsed()) {
            if (exact_cmd->count("--seed") == 0) exact.seed = fallback_seed;
            exact.output.format = parse_format(exact_format);
            return cmd_exact(exact, out, err);
        }
        if (sim_cmd->parsed()) {
            if (sim_cmd->count("--seed") == 0) sim.seed = fallback_seed;
            sim.reps_given = sim_cmd->count("--reps") > 0;
            sim.output.format = parse_format(sim_format);
            return cmd_simulate(sim, out, err);
        }
        if (smp_cmd->parsed()) {
            if (smp_cmd->count("--seed") == 0) smp.seed = fallback_seed;
            return cmd_sample(smp, out, err);
        }
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace dirrho
