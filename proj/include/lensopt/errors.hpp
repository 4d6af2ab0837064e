/** @file errors.hpp
    @brief Exception hierarchy used across the library.
*/
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lensopt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the admissible range (e.g. parameter outside [0,1]).
class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DegenerateGeometryError : public Error {
public:
    DegenerateGeometryError(int patch, double u, double v, double det)
        : Error("non-positive Jacobian determinant " + std::to_string(det) + " on patch " +
                std::to_string(patch) + " at (" + std::to_string(u) + ", " + std::to_string(v) + ")"),
          patch_(patch), u_(u), v_(v) {}
    int patch() const { return patch_; }
    double u() const { return u_; }
    double v() const { return v_; }

private:
    int patch_;
    double u_, v_;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ConformityError : public Error {
public:
    using Error::Error;
};

class GluingError : public Error {
public:
    struct Mismatch {
        int patch_a, local_a, patch_b, local_b;
        double distance;
    };
    GluingError(std::string msg, std::vector<Mismatch> mismatches)
        : Error(std::move(msg)), mismatches_(std::move(mismatches)) {}
    const std::vector<Mismatch>& mismatches() const { return mismatches_; }

private:
    std::vector<Mismatch> mismatches_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FactorizationError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Inner iteration of a time step failed to converge or produced non-finite values.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, int step, int iterations, double last_increment)
        : Error(what), step_(step), iterations_(iterations), last_increment_(last_increment) {}
    int step() const { return step_; }
    int iterations() const { return iterations_; }
    double last_increment() const { return last_increment_; }

private:
    int step_, iterations_;
    double last_increment_;
};

} // namespace lensopt
