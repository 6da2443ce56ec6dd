#pragma once

#include <stdexcept>
#include <string>

namespace andlab {

// Base for every error the library raises.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A documented precondition of an operation does not hold.
struct PreconditionError : Error {
    using Error::Error;
};

// Site requested from a field or set that does not contain it.
struct MissingSite : Error {
    using Error::Error;
};

// lambda_bar is (numerically) an eigenvalue of H_Q.
struct NearSingular : Error {
    double distance = 0.0;
    double scale = 0.0;
    NearSingular(const std::string& what, double dist, double sc)
        : Error(what), distance(dist), scale(sc) {}
};

struct ConvergenceError : Error {
    using Error::Error;
};

// Shortest-path pass found a cycle of negative total weight.
struct NegativeCycle : Error {
    using Error::Error;
};

// No admissible geometric object exists for the given inputs.
struct GeometryError : Error {
    using Error::Error;
};

// Input file or config could not be parsed.
struct FormatError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw PreconditionError(msg);
}

}  // namespace andlab
