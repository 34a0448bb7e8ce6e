#pragma once

#include <stdexcept>
#include <string>

namespace cmdp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The chain induced by a policy is not irreducible (or a linear solve on it
/// is singular).
class NonErgodicChain : public Error {
public:
    using Error::Error;
};

/// A constrained program has no feasible point.
class InfeasibleProgram : public Error {
public:
    using Error::Error;
};

class MalformedProgram : public Error {
public:
    using Error::Error;
};

/// The simplex iteration cap was reached; indicates numerical trouble.
class IterationLimit : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

class InvalidMixture : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace cmdp
