#ifndef AOI_HLF_DETAIL_COMPENSATED_SUM_HPP
#define AOI_HLF_DETAIL_COMPENSATED_SUM_HPP

#include <cmath>

namespace aoi_hlf::detail {

// Neumaier's variant of Kahan summation. Also tracks the sum of magnitudes,
// which bounds the rounding error of the result: |error| <~ eps * magnitude().
template <typename Real>
class CompensatedSum
{
 public:
    CompensatedSum& operator+=(const Real& x)
    {
        using std::abs;
        Real t = sum_ + x;
        if (abs(sum_) >= abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        mag_ += abs(x);
        return *this;
    }

    CompensatedSum& operator-=(const Real& x) { return *this += Real(-x); }

    Real value() const { return sum_ + comp_; }
    Real magnitude() const { return mag_; }

 private:
    Real sum_{0};
    Real comp_{0};
    Real mag_{0};
};

} // namespace aoi_hlf::detail

#endif
