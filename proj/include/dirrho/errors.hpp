#ifndef DIRRHO_ERRORS_HPP
#define DIRRHO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dirrho {

/// Bad command-line usage or malformed specification string (CLI exit code 2).
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid input data: missing file, ragged rows, non-numeric cells (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: integration did not reach its target accuracy (CLI exit code 4).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dirrho

#endif
