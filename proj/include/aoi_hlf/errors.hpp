#ifndef AOI_HLF_ERRORS_HPP
#define AOI_HLF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace aoi_hlf {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error
{
 public:
    using std::domain_error::domain_error;
};

// A series, continued fraction or quadrature failed to reach its tolerance.
class ConvergenceError : public std::runtime_error
{
 public:
    using std::runtime_error::runtime_error;
};

// Series terms kept growing past the point where they should decay.
class DivergenceError : public ConvergenceError
{
 public:
    using ConvergenceError::ConvergenceError;
};

// The working precision cannot resolve the cancellation between terms.
class CancellationError : public ConvergenceError
{
 public:
    using ConvergenceError::ConvergenceError;
};

class ConfigError : public std::runtime_error
{
 public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error
{
 public:
    using std::runtime_error::runtime_error;
};

// Too few samples / updates for the requested statistic.
class SampleError : public std::runtime_error
{
 public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what)
{
    if (!cond)
        throw DomainError(what);
}

} // namespace detail

} // namespace aoi_hlf

#endif
