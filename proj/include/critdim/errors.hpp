#pragma once

#include <stdexcept>
#include <string>

namespace critdim {

enum class ErrorKind {
    invalid_input,
    invalid_family,
    domain,
    precision,
    resolution,
    geometry,
    tuning,
    depth_exceeded,
};

const char* to_string(ErrorKind kind);

/// Base of every error raised by the toolkit. The kind survives into the
/// structured error JSON emitted by the CLI.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define CRITDIM_DEFINE_ERROR(Name, Kind)                                       \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    }

CRITDIM_DEFINE_ERROR(InvalidInputError, invalid_input);
CRITDIM_DEFINE_ERROR(InvalidFamilyError, invalid_family);
CRITDIM_DEFINE_ERROR(DomainError, domain);
CRITDIM_DEFINE_ERROR(PrecisionError, precision);
CRITDIM_DEFINE_ERROR(ResolutionError, resolution);
CRITDIM_DEFINE_ERROR(GeometryError, geometry);
CRITDIM_DEFINE_ERROR(TuningError, tuning);
CRITDIM_DEFINE_ERROR(DepthExceededError, depth_exceeded);

#undef CRITDIM_DEFINE_ERROR

}  // namespace critdim
