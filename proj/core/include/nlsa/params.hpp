#pragma once

#include <cmath>
#include <string>

#include "nlsa/errors.hpp"

namespace nlsa {

inline constexpr double kPi = 3.14159265358979323846;

// Admissible coupling window (-1/4 + 4/25, 0).
inline constexpr double kAMin = -0.25 + 4.0 / 25.0;
inline constexpr double kAMax = 0.0;

class PhysParams {
public:
    explicit PhysParams(double a) : a_(a) {
        if (!(a > kAMin && a < kAMax))
            throw ConfigError("coupling a=" + std::to_string(a) +
                              " outside the admissible interval (-1/4+4/25, 0) = (-0.09, 0)");
    }

    double a() const { return a_; }
    double beta() const { return std::sqrt(1.0 + 4.0 * a_); }
    static constexpr int dim = 3;

    // Indicial roots of -u'' - (2/r)u' + (a + l(l+1))u/r^2 = 0.
    double s_plus(int ell) const { return 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * (a_ + ell * (ell + 1.0)))); }
    double s_minus(int ell) const { return 0.5 * (-1.0 - std::sqrt(1.0 + 4.0 * (a_ + ell * (ell + 1.0)))); }

private:
    double a_;
};

}  // namespace nlsa
