#pragma once

#include <stdexcept>
#include <string>

namespace sawperc {

enum class ErrorKind {
    Parameter,
    Region,
    Resource,
    Adjacency,
    Precondition,
    Invariant,
    Format,
};

/// Base of every error thrown by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define SAWPERC_DEFINE_ERROR(Name, Kind)                                   \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    };

SAWPERC_DEFINE_ERROR(ParameterError, Parameter)
SAWPERC_DEFINE_ERROR(RegionError, Region)
SAWPERC_DEFINE_ERROR(ResourceError, Resource)
SAWPERC_DEFINE_ERROR(AdjacencyError, Adjacency)
SAWPERC_DEFINE_ERROR(PreconditionError, Precondition)
SAWPERC_DEFINE_ERROR(InvariantError, Invariant)
SAWPERC_DEFINE_ERROR(FormatError, Format)

#undef SAWPERC_DEFINE_ERROR

} // namespace sawperc
