#pragma once

#include <stdexcept>
#include <string>

namespace sem {

/// Category of a library failure. The CLI maps these onto exit codes.
enum class ErrorKind {
    InvalidArgument,
    InvalidGeometry,
    ConfigError,
    NumericFailure,
    OutOfDomain,
    StepFailure,
    NonConvergence,
    DomainError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

#define SEM_REQUIRE(cond, kind, msg)                                                        \
    do {                                                                                    \
        if (!(cond)) ::sem::fail(::sem::ErrorKind::kind, msg);                              \
    } while (false)

} // namespace sem
