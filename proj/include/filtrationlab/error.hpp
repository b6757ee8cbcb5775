#pragma once

#include <stdexcept>
#include <string>

namespace filtrationlab {

/// Raised on invalid input: unmeasurable processes, zero-mass cells, broken invariants.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition)
        throw Error(message);
}

} // namespace filtrationlab
