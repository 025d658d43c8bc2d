#pragma once

#include <stdexcept>
#include <string>

namespace bisim {

// Malformed input text (model files, sidecars, map and relation files).
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A documented precondition of an operation does not hold.
struct precondition_error : std::logic_error {
    using std::logic_error::logic_error;
};

// The request is well formed but outside what the implementation decides.
struct unsupported_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A state the algorithms consider impossible was reached.
struct internal_error : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace bisim
