#ifndef AOI_HLF_GAMMA_PARAMS_HPP
#define AOI_HLF_GAMMA_PARAMS_HPP

#include <cmath>
#include <string>

#include "aoi_hlf/errors.hpp"

namespace aoi_hlf {

// Gamma(shape, rate) law of the consensus latency.
struct GammaParams
{
    double shape = 1.0; // alpha
    double rate = 1.0;  // beta, per second

    double mean() const { return shape / rate; }
    double variance() const { return shape / (rate * rate); }

    void validate() const
    {
        detail::require(std::isfinite(shape) && shape > 0,
                        "GammaParams: shape must be > 0, got " + std::to_string(shape));
        detail::require(std::isfinite(rate) && rate > 0,
                        "GammaParams: rate must be > 0, got " + std::to_string(rate));
    }

    friend bool operator==(const GammaParams&, const GammaParams&) = default;
};

} // namespace aoi_hlf

#endif
