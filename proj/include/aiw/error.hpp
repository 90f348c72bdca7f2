#pragma once

#include <stdexcept>
#include <string>

namespace aiw {

/// Malformed input: bad files, invalid graphs, out-of-range parameters.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed (singular system, eigensolver failure, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Interpolation system too ill-conditioned to solve; carries the region it
/// was assembled for so callers can retry with a wider neighborhood.
class SingularSystemError : public NumericalError {
public:
    SingularSystemError(const std::string& what, int region, double condition)
        : NumericalError(what), region_(region), condition_(condition) {}

    int region() const noexcept { return region_; }
    double condition() const noexcept { return condition_; }

private:
    int region_;
    double condition_;
};

}  // namespace aiw
