#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dirrho/cli_io.hpp"
#include "dirrho/copulas.hpp"
#include "dirrho/errors.hpp"
#include "dirrho/estimators.hpp"
#include "dirrho/rng.hpp"

using namespace dirrho;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path);
    f << content;
}

} // namespace

TEST_CASE("ingest_csv: happy path with header and selection") {
    const auto path = temp_file("dirrho_ok.csv");
    write_file(path, "a,b,c\n1,2,3\n4,5,6\n7,8,9\n");
    const auto ds = ingest_csv(path.string());
    CHECK(ds.values.rows() == 3);
    CHECK(ds.values.cols() == 3);
    CHECK(ds.column_names == std::vector<std::string>{"a", "b", "c"});
    CHECK(ds.values(1, 2) == 6.0);

    CsvOptions pick;
    pick.columns = {"c", "a"};
    const auto sub = ingest_csv(path.string(), pick);
    CHECK(sub.values.cols() == 2);
    CHECK(sub.column_names == std::vector<std::string>{"c", "a"});
    CHECK(sub.values(0, 0) == 3.0);

    CsvOptions by_index;
    by_index.columns = {"2", "3"};
    CHECK(ingest_csv(path.string(), by_index).column_names ==
          std::vector<std::string>{"b", "c"});
}

TEST_CASE("ingest_csv: delimiter and headerless options") {
    const auto path = temp_file("dirrho_semi.csv");
    write_file(path, "0.1;0.2\n0.3;0.4\n");
    CsvOptions options;
    options.header = false;
    options.delimiter = ';';
    const auto ds = ingest_csv(path.string(), options);
    CHECK(ds.values.rows() == 2);
    CHECK(ds.column_names == std::vector<std::string>{"col1", "col2"});
    CHECK(ds.values(1, 1) == 0.4);
}

TEST_CASE("ingest_csv: rejections name the offending cell") {
    const auto path = temp_file("dirrho_bad.csv");

    CHECK_THROWS_AS(ingest_csv("/nonexistent/nowhere.csv"), DataError);

    write_file(path, "a,b\n1,2\n3,\n");
    CHECK_THROWS_WITH_AS(ingest_csv(path.string()),
                         doctest::Contains("blank cell at data row 2, column 2"), DataError);

    write_file(path, "a,b\n1,2\n3,x4\n");
    CHECK_THROWS_WITH_AS(ingest_csv(path.string()), doctest::Contains("row 2, column 2"),
                         DataError);

    write_file(path, "a,b\n1,2,9\n3,4\n");
    CHECK_THROWS_WITH_AS(ingest_csv(path.string()), doctest::Contains("ragged row 1"), DataError);

    write_file(path, "a\n1\n2\n");
    CHECK_THROWS_AS(ingest_csv(path.string()), DataError);

    write_file(path, "a,a\n1,2\n3,4\n");
    CHECK_THROWS_WITH_AS(ingest_csv(path.string()), doctest::Contains("duplicate"), DataError);

    write_file(path, "a,b\n1,2\n");
    CHECK_THROWS_AS(ingest_csv(path.string()), DataError); // a single data row is not enough
}

TEST_CASE("cli: exact values for closed-form families") {
    const auto mono = cli({"exact", "-f", "comonotone:d=3", "--all"});
    CHECK(mono.code == 0);
    CHECK(mono.out.find("1.0000") != std::string::npos);
    CHECK(mono.out.find("-0.3333") != std::string::npos);

    const auto prod = cli({"exact", "-f", "product:d=5", "--all", "--format", "csv"});
    CHECK(prod.code == 0);
    std::istringstream lines(prod.out);
    std::string line;
    std::getline(lines, line); // header
    int rows = 0;
    while (std::getline(lines, line)) {
        CHECK(line.find("0.0000,closed_form") != std::string::npos);
        ++rows;
    }
    CHECK(rows == 32);

    const auto fgm = cli({"exact", "-f", "fgm:lambda=1:d=4", "--all", "--format", "csv",
                          "--precision", "6"});
    CHECK(fgm.code == 0);
    CHECK(fgm.out.find("\"(1,1,1,1)\",0.005612") != std::string::npos);
    CHECK(fgm.out.find("\"(1,1,1,-1)\",-0.005612") != std::string::npos);
}

TEST_CASE("cli: exact quadrature and monte carlo for Clayton") {
    const auto quad = cli({"exact", "-f", "clayton:theta=1:d=3", "-a", "(-1,1,1)", "--format",
                           "json", "--precision", "6"});
    CHECK(quad.code == 0);
    auto j = nlohmann::json::parse(quad.out);
    CHECK(j["values"].size() == 1);
    CHECK(std::abs(j["values"][0]["rho"].get<double>() - (-0.133904)) < 1e-4);
    CHECK(j["values"][0]["method"] == "decomposition");

    const auto mc = cli({"exact", "-f", "clayton:theta=1:d=3", "-a", "-++", "--method", "mc",
                         "--mc-samples", "50000", "--seed", "9", "--format", "json"});
    CHECK(mc.code == 0);
    auto jm = nlohmann::json::parse(mc.out);
    CHECK(jm["values"][0]["method"] == "monte_carlo");
    CHECK(jm["values"][0].contains("std_error"));
    CHECK(std::abs(jm["values"][0]["rho"].get<double>() - (-0.1339)) < 0.02);
}

TEST_CASE("cli: sample then estimate round-trips exactly") {
    const auto csv_path = temp_file("dirrho_roundtrip.csv");
    const auto s = cli({"sample", "-f", "clayton:theta=2:d=3", "-n", "300", "--seed", "99", "-o",
                        csv_path.string()});
    REQUIRE(s.code == 0);

    const auto est = cli({"estimate", "-i", csv_path.string(), "--format", "json"});
    REQUIRE(est.code == 0);
    const auto j = nlohmann::json::parse(est.out);
    CHECK(j["n"] == 300);
    CHECK(j["d"] == 3);
    CHECK(j["tie_count"] == 0);
    REQUIRE(j["estimates"].size() == 8);

    // the same estimates computed directly through the library
    auto rng = make_engine(99);
    ClaytonCopula clayton(3, 2.0);
    const auto data = sample(clayton, 300, rng);
    const auto ranks = compute_ranks(data);
    for (const auto& entry : j["estimates"]) {
        const Direction alpha = Direction::parse(entry["alpha"].get<std::string>());
        CHECK(entry["rho_hat"].get<double>() == rho_hat_directional(ranks, alpha).value);
    }
    CHECK(j["rho3_star"].get<double>() == rho_hat_star3(ranks));
}

TEST_CASE("cli: estimate output is sorted and flags perfect dependence") {
    const auto csv_path = temp_file("dirrho_mono.csv");
    REQUIRE(cli({"sample", "-f", "comonotone:d=3", "-n", "40", "--seed", "4", "-o",
                 csv_path.string()}).code == 0);
    const auto est = cli({"estimate", "-i", csv_path.string(), "--format", "csv"});
    REQUIRE(est.code == 0);
    std::istringstream lines(est.out);
    std::string header, first, second;
    std::getline(lines, header);
    std::getline(lines, first);
    std::getline(lines, second);
    CHECK(header == "alpha,rho_hat");
    // both fully aligned directions sit on top with exactly 1
    CHECK(first.find("1.0000") != std::string::npos);
    CHECK(second.find("1.0000") != std::string::npos);
    const bool plus_first = first.find("(1,1,1)") != std::string::npos;
    const bool minus_second = second.find("(-1,-1,-1)") != std::string::npos;
    const bool minus_first = first.find("(-1,-1,-1)") != std::string::npos;
    const bool plus_second = second.find("(1,1,1)") != std::string::npos;
    CHECK(((plus_first && minus_second) || (minus_first && plus_second)));
}

TEST_CASE("cli: independent data keeps every direction near zero") {
    const auto csv_path = temp_file("dirrho_indep.csv");
    REQUIRE(cli({"sample", "-f", "product:d=3", "-n", "10000", "--seed", "12", "-o",
                 csv_path.string()}).code == 0);
    const auto est = cli({"estimate", "-i", csv_path.string(), "--format", "json"});
    REQUIRE(est.code == 0);
    const auto j = nlohmann::json::parse(est.out);
    for (const auto& entry : j["estimates"])
        CHECK(std::abs(entry["rho_hat"].get<double>()) <= 0.04);
}

TEST_CASE("cli: exit codes") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"estimate"}).code == 2);                       // missing --input
    CHECK(cli({"estimate", "-i", "/nope.csv"}).code == 3);    // data error
    CHECK(cli({"exact", "-f", "gauss:d=3"}).code == 2);       // bad family
    CHECK(cli({"exact", "-f", "clayton:theta=-1:d=3"}).code == 2);
    CHECK(cli({"exact", "-f", "product:d=3", "-a", "+x+"}).code == 2);
    CHECK(cli({"exact", "-f", "product:d=3", "-a", "++"}).code == 2); // dimension mismatch
    CHECK(cli({"exact", "-f", "product:d=17", "--all"}).code == 2);   // guard without --force
    CHECK(cli({"exact", "-f", "product:d=3", "--precision", "0"}).code == 2);
    CHECK(cli({"exact", "-f", "product:d=3", "--format", "yaml"}).code == 2);
    CHECK(cli({"simulate", "--sizes", "10"}).code == 2); // neither preset nor family
    CHECK(cli({"simulate", "--preset", "table7"}).code == 2);
    // numerical failure: impossible Monte Carlo accuracy target
    CHECK(cli({"exact", "-f", "clayton:theta=1:d=3", "-a", "-++", "--method", "mc",
               "--mc-samples", "10000", "--target-se", "1e-10"}).code == 4);
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"estimate", "--help"}).code == 0);
}

TEST_CASE("cli: tie warning goes to stderr") {
    const auto path = temp_file("dirrho_ties.csv");
    write_file(path, "a,b\n1,4\n1,3\n2,2\n3,1\n");
    const auto est = cli({"estimate", "-i", path.string()});
    CHECK(est.code == 0);
    CHECK(est.err.find("warning") != std::string::npos);
    CHECK(est.err.find("1") != std::string::npos);
    CHECK(est.out.find("ties=1") != std::string::npos);
}

TEST_CASE("cli: simulate tiny plan, formats and determinism") {
    const std::vector<std::string> args{"simulate", "-f",        "product:d=2", "--sizes",
                                        "20",       "--reps",    "25",          "-a",
                                        "++",       "--seed",    "31",          "--format",
                                        "json"};
    const auto a = cli(args);
    REQUIRE(a.code == 0);
    const auto b = cli(args);
    CHECK(a.out == b.out);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["cells"].size() == 1);
    CHECK(j["cells"][0]["replicates"] == 25);

    const auto preset = cli({"simulate", "--preset", "table1", "--reps", "2", "--sizes", "20",
                             "--format", "csv"});
    REQUIRE(preset.code == 0);
    CHECK(preset.out.find("theta,exact,n=20\n") == 0);
    CHECK(std::count(preset.out.begin(), preset.out.end(), '\n') == 6);

    const auto table4 = cli({"simulate", "--preset", "table4", "--reps", "2", "--sizes", "20",
                             "--format", "csv"});
    REQUIRE(table4.code == 0);
    CHECK(table4.out.find("rho_minus_1234") != std::string::npos);
}

TEST_CASE("cli: DIRRHO_SEED fallback and flag precedence") {
    setenv("DIRRHO_SEED", "777", 1);
    const auto env_a = cli({"sample", "-f", "product:d=2", "-n", "5"});
    const auto env_b = cli({"sample", "-f", "product:d=2", "-n", "5"});
    const auto flagged = cli({"sample", "-f", "product:d=2", "-n", "5", "--seed", "778"});
    const auto explicit_seed = cli({"sample", "-f", "product:d=2", "-n", "5", "--seed", "777"});
    unsetenv("DIRRHO_SEED");
    const auto default_seed = cli({"sample", "-f", "product:d=2", "-n", "5"});

    CHECK(env_a.out == env_b.out);
    CHECK(env_a.out == explicit_seed.out);
    CHECK(env_a.out != flagged.out);
    CHECK(default_seed.out != env_a.out);

    setenv("DIRRHO_SEED", "not-a-number", 1);
    CHECK(cli({"sample", "-f", "product:d=2", "-n", "5"}).code == 2);
    unsetenv("DIRRHO_SEED");
}

TEST_CASE("cli: output file writing") {
    const auto out_path = temp_file("dirrho_out.csv");
    std::filesystem::remove(out_path);
    const auto r = cli({"exact", "-f", "comonotone:d=2", "--all", "--format", "csv", "-o",
                        out_path.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(out_path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "alpha,rho,method,std_error");
}
