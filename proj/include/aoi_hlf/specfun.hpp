#ifndef AOI_HLF_SPECFUN_HPP
#define AOI_HLF_SPECFUN_HPP

// Scalar special functions used by the uplink and AoI closed forms.
//
// Everything except Ci/Si is templated on the real type so the AoI series
// can be re-evaluated in extended precision when it cancels in double.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "aoi_hlf/detail/compensated_sum.hpp"
#include "aoi_hlf/errors.hpp"
#include "aoi_hlf/gamma_params.hpp"

namespace aoi_hlf::specfun {

struct EvalPolicy
{
    double rel_tol = 1e-12;
    int max_terms = 500;

    void validate() const
    {
        detail::require(rel_tol > 0 && rel_tol < 1e-3,
                        "EvalPolicy: rel_tol must lie in (0, 1e-3)");
        detail::require(max_terms >= 50, "EvalPolicy: max_terms must be >= 50");
    }
};

namespace detail {

using aoi_hlf::detail::CompensatedSum;

template <typename Real>
Real epsilon()
{
    return std::numeric_limits<Real>::epsilon();
}

// Tolerance actually used for termination: never tighter than the type allows.
template <typename Real>
Real termination_tol(const EvalPolicy& policy)
{
    Real tol = Real(policy.rel_tol);
    Real eps = epsilon<Real>();
    return tol < eps ? eps : tol;
}

template <typename Real>
bool finite(const Real& x)
{
    using boost::math::isfinite;
    return (isfinite)(x);
}

template <typename Real>
Real lgamma(const Real& x)
{
    if constexpr (std::is_same_v<Real, double>)
        return std::lgamma(x);
    else
        return boost::math::lgamma(x);
}

template <typename Real>
Real tgamma(const Real& x)
{
    if constexpr (std::is_same_v<Real, double>)
        return std::tgamma(x);
    else
        return boost::math::tgamma(x);
}

template <typename Real>
bool is_nonpositive_integer(const Real& b)
{
    using std::floor;
    return b <= 0 && floor(b) == b;
}

// x^a e^{-x} computed in log space.
template <typename Real>
Real power_exp(const Real& a, const Real& x)
{
    using std::exp;
    using std::log;
    if (x == 0)
        return Real(0);
    return exp(a * log(x) - x);
}

// gamma(a,x) by its power series; good for x < a + 1.
template <typename Real>
Real lower_gamma_series(const Real& a, const Real& x, const EvalPolicy& policy)
{
    using std::abs;
    const Real tol = termination_tol<Real>(policy);
    Real term = Real(1) / a;
    CompensatedSum<Real> sum;
    sum += term;
    Real denom = a;
    for (int n = 1; n < policy.max_terms; ++n) {
        denom += 1;
        term *= x / denom;
        sum += term;
        if (abs(term) < tol * abs(sum.value()))
            return sum.value() * power_exp(a, x);
    }
    throw ConvergenceError("lower_incomplete_gamma: series did not converge");
}

// Gamma(a,x) by the Legendre continued fraction (modified Lentz); x >= a + 1.
template <typename Real>
Real upper_gamma_fraction(const Real& a, const Real& x, const EvalPolicy& policy)
{
    using std::abs;
    const Real tol = termination_tol<Real>(policy);
    const Real tiny = std::numeric_limits<Real>::min() / epsilon<Real>();
    Real b = x + 1 - a;
    Real c = Real(1) / tiny;
    Real d = Real(1) / b;
    Real h = d;
    for (int i = 1; i < policy.max_terms; ++i) {
        Real an = -Real(i) * (Real(i) - a);
        b += 2;
        d = an * d + b;
        if (abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (abs(c) < tiny)
            c = tiny;
        d = Real(1) / d;
        Real delta = d * c;
        h *= delta;
        if (abs(delta - 1) < tol)
            return power_exp(a, x) * h;
    }
    throw ConvergenceError("upper_incomplete_gamma: continued fraction did not converge");
}

template <typename Real>
void check_gamma_args(const Real& a, const Real& x, const char* fn)
{
    if (!(a > 0) || !finite(a))
        throw DomainError(std::string(fn) + ": shape must be > 0");
    if (!(x >= 0))
        throw DomainError(std::string(fn) + ": argument must be >= 0");
}

} // namespace detail

/// Lower incomplete gamma function gamma(a, x) = int_0^x t^{a-1} e^{-t} dt.
template <typename Real>
Real lower_incomplete_gamma(const Real& a, const Real& x, const EvalPolicy& policy = {})
{
    detail::check_gamma_args(a, x, "lower_incomplete_gamma");
    if (x == 0)
        return Real(0);
    if (!detail::finite(x))
        return detail::tgamma(a);
    if (x < a + 1)
        return detail::lower_gamma_series(a, x, policy);
    return detail::tgamma(a) - detail::upper_gamma_fraction(a, x, policy);
}

/// Upper incomplete gamma function Gamma(a, x) = int_x^inf t^{a-1} e^{-t} dt.
template <typename Real>
Real upper_incomplete_gamma(const Real& a, const Real& x, const EvalPolicy& policy = {})
{
    detail::check_gamma_args(a, x, "upper_incomplete_gamma");
    if (x == 0)
        return detail::tgamma(a);
    if (!detail::finite(x))
        return Real(0);
    if (x < a + 1)
        return detail::tgamma(a) - detail::lower_gamma_series(a, x, policy);
    return detail::upper_gamma_fraction(a, x, policy);
}

/// Regularized P(a, x) = gamma(a, x) / Gamma(a). Avoids overflow of Gamma(a).
template <typename Real>
Real regularized_lower_gamma(const Real& a, const Real& x, const EvalPolicy& policy = {})
{
    using std::exp;
    detail::check_gamma_args(a, x, "regularized_lower_gamma");
    if (x == 0)
        return Real(0);
    if (!detail::finite(x))
        return Real(1);
    const Real lg = detail::lgamma(a);
    if (x < a + 1) {
        Real unscaled = detail::lower_gamma_series(a, x, policy);
        return unscaled * exp(-lg);
    }
    return Real(1) - detail::upper_gamma_fraction(a, x, policy) * exp(-lg);
}

/// Regularized Q(a, x) = Gamma(a, x) / Gamma(a).
template <typename Real>
Real regularized_upper_gamma(const Real& a, const Real& x, const EvalPolicy& policy = {})
{
    using std::exp;
    detail::check_gamma_args(a, x, "regularized_upper_gamma");
    if (x == 0)
        return Real(1);
    if (!detail::finite(x))
        return Real(0);
    const Real lg = detail::lgamma(a);
    if (x < a + 1)
        return Real(1) - detail::lower_gamma_series(a, x, policy) * exp(-lg);
    return detail::upper_gamma_fraction(a, x, policy) * exp(-lg);
}

/// Raw Maclaurin series of 1F1(a; b; z), no transformation applied.
/// Suffers cancellation for large negative z; use kummer_1f1 instead unless
/// that is exactly what is being measured.
template <typename Real>
Real kummer_series(const Real& a, const Real& b, const Real& z, const EvalPolicy& policy = {})
{
    using std::abs;
    if (detail::is_nonpositive_integer(b))
        throw DomainError("kummer_1f1: b must not be a nonpositive integer");
    const Real tol = detail::termination_tol<Real>(policy);
    detail::CompensatedSum<Real> sum;
    Real term(1);
    sum += term;
    int small_run = 0;
    for (int n = 0; n < policy.max_terms; ++n) {
        term *= (a + n) * z / ((b + n) * Real(n + 1));
        sum += term;
        if (!detail::finite(term) || !detail::finite(sum.value()))
            throw ConvergenceError("kummer_1f1: non-finite partial sum");
        if (abs(term) <= tol * abs(sum.value()))
            ++small_run;
        else
            small_run = 0;
        if (small_run >= 3)
            return sum.value();
    }
    throw ConvergenceError("kummer_1f1: max_terms exceeded for a=" +
                           std::to_string(static_cast<double>(a)) +
                           " b=" + std::to_string(static_cast<double>(b)) +
                           " z=" + std::to_string(static_cast<double>(z)));
}

/// Confluent hypergeometric function 1F1(a; b; z). Negative arguments are
/// mapped through 1F1(a;b;z) = e^z 1F1(b-a;b;-z) before summation.
template <typename Real>
Real kummer_1f1(const Real& a, const Real& b, const Real& z, const EvalPolicy& policy = {})
{
    using std::exp;
    if (detail::is_nonpositive_integer(b))
        throw DomainError("kummer_1f1: b must not be a nonpositive integer");
    if (z == 0)
        return Real(1);
    if (z < 0)
        return exp(z) * kummer_series(Real(b - a), b, Real(-z), policy);
    return kummer_series(a, b, z, policy);
}

template <typename Real>
Real beta_fn(const Real& a, const Real& b)
{
    using std::exp;
    if (!(a > 0) || !(b > 0))
        throw DomainError("beta_fn: arguments must be > 0");
    return exp(detail::lgamma(a) + detail::lgamma(b) - detail::lgamma(Real(a + b)));
}

template <typename Real>
Real euler_gamma()
{
    return boost::math::constants::euler<Real>();
}

/// psi(x) = d/dx ln Gamma(x), x > 0.
template <typename Real>
Real digamma(Real x)
{
    using std::log;
    if (!(x > 0))
        throw DomainError("digamma: x must be > 0");
    Real shift(0);
    while (x < 10) {
        shift -= Real(1) / x;
        x += 1;
    }
    const Real inv = Real(1) / x;
    const Real inv2 = inv * inv;
    // Bernoulli tail: B_2k / (2k x^2k), k = 1..7
    Real tail = inv2 * (Real(1) / 12 -
                inv2 * (Real(1) / 120 -
                inv2 * (Real(1) / 252 -
                inv2 * (Real(1) / 240 -
                inv2 * (Real(1) / 132 -
                inv2 * (Real(691) / 32760 -
                inv2 * (Real(1) / 12)))))));
    return shift + log(x) - inv / 2 - tail;
}

/// psi'(x), used by the Newton step of the Gamma MLE.
template <typename Real>
Real trigamma(Real x)
{
    if (!(x > 0))
        throw DomainError("trigamma: x must be > 0");
    Real shift(0);
    while (x < 10) {
        shift += Real(1) / (x * x);
        x += 1;
    }
    const Real inv = Real(1) / x;
    const Real inv2 = inv * inv;
    Real tail = inv * (Real(1) + inv / 2 +
                inv2 * (Real(1) / 6 -
                inv2 * (Real(1) / 30 -
                inv2 * (Real(1) / 42 -
                inv2 * (Real(1) / 30 -
                inv2 * (Real(5) / 66 -
                inv2 * (Real(691) / 2730 -
                inv2 * (Real(7) / 6))))))));
    return shift + tail;
}

struct CosSinIntegrals
{
    double ci;
    double si;
};

namespace detail {

// Series branch, 0 < x <= 4.
inline CosSinIntegrals cisi_series(double x)
{
    const double x2 = x * x;
    CompensatedSum<double> si, ci;
    double t = x; // (-1)^k x^{2k+1} / (2k+1)!
    si += t;
    double c = 1.0; // (-1)^k x^{2k} / (2k)!
    for (int k = 1; k < 60; ++k) {
        c *= -x2 / ((2.0 * k - 1) * (2.0 * k));
        t *= -x2 / ((2.0 * k) * (2.0 * k + 1));
        si += t / (2.0 * k + 1);
        ci += c / (2.0 * k);
        if (std::abs(t) < 1e-18 * std::abs(si.value()) && std::abs(c) < 1e-18)
            break;
    }
    return {std::numbers::egamma + std::log(x) + ci.value(), si.value()};
}

// Continued fraction for E1(ix), 4 < x < 40.
inline CosSinIntegrals cisi_fraction(double x)
{
    using cd = std::complex<double>;
    const double eps = std::numeric_limits<double>::epsilon();
    const double tiny = 1e-300;
    cd b(1.0, x);
    cd c(1.0 / tiny, 0.0);
    cd d = 1.0 / b;
    cd h = d;
    for (int i = 2; i < 1000; ++i) {
        double a = -double(i - 1) * double(i - 1);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        cd del = c * d;
        h *= del;
        if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < eps) {
            h *= cd(std::cos(x), -std::sin(x));
            return {-h.real(), std::numbers::pi / 2 + h.imag()};
        }
    }
    throw ConvergenceError("cosine/sine integral: continued fraction did not converge");
}

// Asymptotic auxiliary functions f, g; x >= 40.
inline CosSinIntegrals cisi_asymptotic(double x)
{
    const double inv2 = 1.0 / (x * x);
    double f = 0, g = 0;
    double tf = 1.0, tg = 1.0;
    for (int k = 0; k < 40; ++k) {
        f += tf;
        g += tg;
        double nf = -tf * (2.0 * k + 1) * (2.0 * k + 2) * inv2;
        double ng = -tg * (2.0 * k + 2) * (2.0 * k + 3) * inv2;
        if (std::abs(nf) >= std::abs(tf) || std::abs(nf) < 1e-18)
            break;
        tf = nf;
        tg = ng;
    }
    f /= x;
    g *= inv2;
    const double s = std::sin(x), co = std::cos(x);
    return {f * s - g * co, std::numbers::pi / 2 - f * co - g * s};
}

inline CosSinIntegrals cisi(double x)
{
    if (x <= 4.0)
        return cisi_series(x);
    if (x < 40.0)
        return cisi_fraction(x);
    return cisi_asymptotic(x);
}

} // namespace detail

/// Ci(x) = C + ln x + int_0^x (cos t - 1)/t dt, x > 0.
inline double cosine_integral(double x)
{
    if (!(x > 0))
        throw DomainError("cosine_integral: x must be > 0");
    return detail::cisi(x).ci;
}

/// Si(x) = int_0^x sin t / t dt; odd in x.
inline double sine_integral(double x)
{
    if (x == 0)
        return 0.0;
    if (x < 0)
        return -sine_integral(-x);
    return detail::cisi(x).si;
}

inline double gamma_pdf(double x, const GammaParams& p)
{
    p.validate();
    if (x < 0)
        throw DomainError("gamma_pdf: x must be >= 0");
    if (x == 0) {
        if (p.shape < 1)
            return std::numeric_limits<double>::infinity();
        return p.shape == 1 ? p.rate : 0.0;
    }
    return std::exp(p.shape * std::log(p.rate) + (p.shape - 1) * std::log(x) - p.rate * x -
                    std::lgamma(p.shape));
}

inline double gamma_cdf(double x, const GammaParams& p)
{
    p.validate();
    if (x <= 0)
        return 0.0;
    return regularized_lower_gamma(p.shape, p.rate * x);
}

} // namespace aoi_hlf::specfun

#endif
