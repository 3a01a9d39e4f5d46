#ifndef COVDEN_ERROR_HPP
#define COVDEN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace covden {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments, inconsistent dimensions, unknown identifiers.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Malformed input files. Carries the 1-based row/column when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
        : Error(format(what, row, column)), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t row, std::size_t column) {
        if (row == 0) return what;
        std::string msg = what + " (row " + std::to_string(row);
        if (column != 0) msg += ", column " + std::to_string(column);
        return msg + ")";
    }

    std::size_t row_;
    std::size_t column_;
};

/// Numerical failure: non-convergence, non-finite values, domain violations.
class NumericError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public NumericError {
public:
    using NumericError::NumericError;
};

/// An iterative solver hit its cap. `residual()` is the last KKT residual.
class SolverError : public NumericError {
public:
    SolverError(const std::string& what, double residual)
        : NumericError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Weights file problems: wrong magic/version, checksum mismatch, truncation.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace covden

#endif  // COVDEN_ERROR_HPP
