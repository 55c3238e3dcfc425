#pragma once

#include <stdexcept>
#include <string>

namespace tenrec {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

/// Iterative solver failed to reach its residual tolerance within max_iter.
struct ConvergenceError : Error {
    using Error::Error;
};

/// Pruning exhausted the candidate pool before r factors were selected.
struct InitFailureError : Error {
    int found;
    InitFailureError(const std::string& what, int found_factors)
        : Error(what), found(found_factors) {}
};

/// A gradient descent iterate became non-finite.
struct DivergenceError : Error {
    int iteration;
    DivergenceError(const std::string& what, int iter)
        : Error(what), iteration(iter) {}
};

struct ParseError : Error {
    std::string path;
    int line;
    ParseError(const std::string& what, std::string file_path, int line_number)
        : Error(what), path(std::move(file_path)), line(line_number) {}
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace tenrec
