#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcfe {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Arguments that violate a documented precondition (dimension mismatch,
// non-finite values, non-SPD precision, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// A state left the admissible region (overflow guard or non-finite values).
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : Error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// An adaptive integrator exhausted its step budget.
class NonConvergenceError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

// Configuration problems; carries every offending field so the CLI can
// report them all at once.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> fields)
        : Error(join(fields)), fields_(std::move(fields)) {}
    const std::vector<std::string>& fields() const noexcept { return fields_; }

private:
    static std::string join(const std::vector<std::string>& fields) {
        std::string out = "invalid configuration:";
        for (const auto& f : fields) out += "\n  - " + f;
        return out;
    }
    std::vector<std::string> fields_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace pcfe
