#ifndef AOI_HLF_QUADRATURE_HPP
#define AOI_HLF_QUADRATURE_HPP

// Thin wrappers over Boost.Math adaptive quadrature that turn a missed
// tolerance into a ConvergenceError instead of a silently poor value.

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "aoi_hlf/errors.hpp"

namespace aoi_hlf::quad {

struct Result
{
    double value;
    double error;
};

namespace detail {

inline void check(const Result& r, double rel_tol, double abs_floor, const char* what)
{
    if (!std::isfinite(r.value))
        throw ConvergenceError(std::string(what) + ": non-finite integral");
    if (r.error > rel_tol * std::abs(r.value) && r.error > abs_floor)
        throw ConvergenceError(std::string(what) + ": error estimate " + std::to_string(r.error) +
                               " above tolerance for value " + std::to_string(r.value));
}

} // namespace detail

/// Finite interval; tolerates integrable endpoint singularities.
template <typename F>
Result finite(F f, double a, double b, double rel_tol = 1e-10, double abs_floor = 0.0)
{
    if (a == b)
        return {0.0, 0.0};
    thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
    double err = 0.0, l1 = 0.0;
    double v = integrator.integrate(f, a, b, rel_tol * 0.1, &err, &l1);
    Result r{v, err};
    detail::check(r, rel_tol, abs_floor, "quad::finite");
    return r;
}

/// Smooth integrand on a finite interval; adaptive Gauss-Kronrod 31.
template <typename F>
Result smooth(F f, double a, double b, double rel_tol = 1e-10, double abs_floor = 0.0)
{
    if (a == b)
        return {0.0, 0.0};
    // Boost 1.74 adaptive GK only terminates reliably on O(1) intervals.
    const double w = b - a;
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double t) { return f(a + w * t); }, 0.0, 1.0, 20, rel_tol * 0.1, &err);
    Result r{w * v, std::abs(w) * err};
    detail::check(r, rel_tol, abs_floor, "quad::smooth");
    return r;
}

/// [a, inf) for integrands with exponential-type decay.
template <typename F>
Result semi_infinite(F f, double a, double rel_tol = 1e-10, double abs_floor = 0.0)
{
    thread_local boost::math::quadrature::exp_sinh<double> integrator(12);
    double err = 0.0, l1 = 0.0;
    double v = integrator.integrate(
        [&](double t) { return f(a + t); }, 0.0, std::numeric_limits<double>::infinity(),
        rel_tol * 0.1, &err, &l1);
    Result r{v, err};
    detail::check(r, rel_tol, abs_floor, "quad::semi_infinite");
    return r;
}

} // namespace aoi_hlf::quad

#endif
