#ifndef QSHRINK_ERRORS_HPP
#define QSHRINK_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace qshrink {

// Bad user input: invalid arguments, malformed files, violated preconditions.
// The CLI maps this family to exit code 2.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input file does not match the expected column schema.
class schema_error : public validation_error {
public:
    schema_error(const std::string& msg, std::vector<std::string> columns)
        : validation_error(msg), offending_columns(std::move(columns)) {}
    std::vector<std::string> offending_columns;
};

// Numerical failure while computing: singular systems, divergence.
// The CLI maps this family to exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

class singular_design_error : public numeric_error {
public:
    explicit singular_design_error(const std::string& msg) : numeric_error(msg) {}
};

class singular_block_error : public numeric_error {
public:
    explicit singular_block_error(const std::string& msg) : numeric_error(msg) {}
};

// Solver did not certify optimality within the iteration budget.  Carries the
// best iterate found so callers can inspect or keep it.
class convergence_error : public numeric_error {
public:
    convergence_error(const std::string& msg, std::vector<double> best, double objective)
        : numeric_error(msg), best_iterate(std::move(best)), best_objective(objective) {}
    std::vector<double> best_iterate;
    double best_objective;
};

} // namespace qshrink

#endif
