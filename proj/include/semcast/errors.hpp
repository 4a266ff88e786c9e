#pragma once

#include <stdexcept>
#include <string>

namespace semcast {

/// Scenario or plan configuration is malformed or inconsistent.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A distortion/perception target lies at or below the curve floor and no
/// finite compression rate can reach it.
struct InfeasibleRequirement : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Curve fitting failed to improve on the initial parameter guess.
struct FitDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An active stream's power fell below the solver floor, making 1/R and its
/// derivatives numerically meaningless.
struct DegenerateStream : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The linearized QP subproblem has no feasible point.
struct QpInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An intent assignment policy cannot be satisfied with the given K and L.
struct PolicyUnsatisfiable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A label map file could not be parsed.
struct MalformedFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A label map contains a label outside [0, num_classes).
struct LabelOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace semcast
