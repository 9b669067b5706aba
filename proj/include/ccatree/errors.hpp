#pragma once

#include <stdexcept>
#include <string>

namespace ccatree {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A parameter outside its documented domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

// A size or color range exceeds the representable limits.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Two values that must share a topology do not.
class TopologyMismatch : public Error {
public:
    using Error::Error;
};

// An operation's precondition on its inputs does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// A query for a structure that cannot exist (e.g. rainbow with theta > d).
class InvalidQuery : public Error {
public:
    using Error::Error;
};

// No witness exists for the given input.
class NoWitness : public Error {
public:
    using Error::Error;
};

// Operation applied to a trajectory of the wrong model.
class ModelMismatch : public Error {
public:
    using Error::Error;
};

// A numeric or structural invariant was broken; indicates a bug or a fault.
class InternalError : public Error {
public:
    using Error::Error;
};

// A search exhausted its budget without finding a value.
class NotFound : public Error {
public:
    using Error::Error;
};

// Persisted data written by an incompatible format version.
class VersionError : public Error {
public:
    using Error::Error;
};

// File-system or parse failure while reading/writing artifacts.
class IoError : public Error {
public:
    using Error::Error;
};

// Two root trajectories disagreed inside the light cone.
class LightconeViolation : public Error {
public:
    using Error::Error;
};

} // namespace ccatree
