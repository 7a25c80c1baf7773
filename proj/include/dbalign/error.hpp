#pragma once
// Error types shared by every module.
//
// The CLI maps CapacityError to exit code 2 and every other dbalign::Error
// to exit code 1.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dbalign {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A parameter or input violates a stated invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// The model is valid but lacks a property the operation needs
// (positive marginal, mutual absolute continuity, nonzero correlation).
class DegenerateModelError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Divergent moment generating function (Gaussian lambda outside the integrable range).
class DivergentMgfError : public DomainError {
public:
    using DomainError::DomainError;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Observed data incompatible with the model (support violation).
class DataError : public Error {
public:
    using Error::Error;
};

// Enumeration guard exceeded.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Enumeration limits. Kept in one place so callers can inspect or override them.
struct Capacity {
    int max_cycle_type_n = 60;           // integer partitions of n
    int max_factorial_n = 8;             // n! permutation enumeration
    std::size_t max_tv_states = 1u << 24; // m^(2nd) database pairs
};

inline const Capacity& default_capacity() {
    static const Capacity cap{};
    return cap;
}

}  // namespace dbalign
