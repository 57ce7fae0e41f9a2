#pragma once

#include <stdexcept>
#include <string>

namespace windingstats {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// -ln S(p,q) is undefined when v(p) and v(q) are orthogonal.
struct BranchPointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IllConditionedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NearSingularError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MulticriticalPointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonClosureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RootOnCircleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InconsistentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PoleEncounteredError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooManyExclusionsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MismatchedConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace windingstats
