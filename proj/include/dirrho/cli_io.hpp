#ifndef DIRRHO_CLI_IO_HPP
#define DIRRHO_CLI_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "dirrho/core_types.hpp"

namespace dirrho {

struct CsvOptions {
    bool header = true;
    char delimiter = ',';
    /// Column selection: names (with header) or 1-based indices. Empty keeps
    /// every column.
    std::vector<std::string> columns;
};

/// A named data matrix as read from disk.
struct Dataset {
    std::vector<std::string> column_names;
    DataMatrix values;
    std::string source_path;

    Dataset() : values(1, 1) {}
};

/// Parses a delimited numeric file. Rejects ragged rows, blank or
/// non-numeric cells (naming the 1-based row and column), duplicate column
/// names, and shapes smaller than 2x2.
Dataset ingest_csv(const std::string& path, const CsvOptions& options = {});
Dataset ingest_csv_stream(std::istream& in, const std::string& name,
                          const CsvOptions& options = {});

enum class OutputFormat { csv, json, table };

struct OutputSpec {
    OutputFormat format = OutputFormat::table;
    std::string destination; ///< empty = stdout
    int precision = 4;       ///< printed decimals, in [1,15]; JSON is always full

    void validate() const;
};

/// Full command-line application (estimate / exact / simulate / sample).
/// Returns the process exit code: 0 success, 2 usage error, 3 data
/// validation error, 4 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

} // namespace dirrho

#endif
