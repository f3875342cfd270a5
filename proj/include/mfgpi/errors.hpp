#pragma once

#include <stdexcept>
#include <string>

namespace mfgpi {

// Bad user input: malformed priors, grids, utilities, couplings.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Query outside a table, a wealth window or a representable range.
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Singular systems, failed inversions, non-finite intermediate values.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Root finder was handed an interval that does not bracket the target.
struct BracketError : NumericalError {
    BracketError(const std::string& what, double f_lo, double f_hi)
        : NumericalError(what), f_lo(f_lo), f_hi(f_hi) {}
    double f_lo;
    double f_hi;
};

// A built object violates one of its own invariants.
struct ConsistencyError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace mfgpi
