#pragma once

#include <stdexcept>
#include <string>

namespace magthermo {

/// Base of every library error. `kind()` is the machine-readable tag used in
/// CLI error records; `numerical()` separates internal numerical failures
/// (exit code 2) from input/domain problems (exit code 1).
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what, bool numerical)
        : std::runtime_error(what), kind_(std::move(kind)), numerical_(numerical) {}

    const std::string& kind() const noexcept { return kind_; }
    bool numerical() const noexcept { return numerical_; }

private:
    std::string kind_;
    bool numerical_;
};

#define MAGTHERMO_ERROR(Name, tag, is_numerical)                        \
    class Name : public Error {                                         \
    public:                                                             \
        explicit Name(const std::string& what) : Error(tag, what, is_numerical) {} \
    };

// input / domain
MAGTHERMO_ERROR(DomainError, "domain", false)
MAGTHERMO_ERROR(OrderError, "order", false)
MAGTHERMO_ERROR(ArityError, "arity", false)
MAGTHERMO_ERROR(ResolutionError, "resolution", false)
MAGTHERMO_ERROR(IOError, "io", false)
MAGTHERMO_ERROR(SchemaError, "schema", false)
MAGTHERMO_ERROR(FitError, "fit", false)
MAGTHERMO_ERROR(ValidationError, "validation", false)

// numerical
MAGTHERMO_ERROR(ConvergenceError, "convergence", true)
MAGTHERMO_ERROR(TruncationError, "truncation", true)
MAGTHERMO_ERROR(QuadratureError, "quadrature", true)
MAGTHERMO_ERROR(SolverError, "solver", true)
MAGTHERMO_ERROR(StencilError, "stencil", true)

#undef MAGTHERMO_ERROR

} // namespace magthermo
