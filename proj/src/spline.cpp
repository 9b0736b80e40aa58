#include "cchedge/spline.hpp"

#include "cchedge/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cchedge {

UniformCubicSpline::UniformCubicSpline(double x0, double dx, std::vector<double> y)
    : x0_(x0), dx_(dx), y_(std::move(y)), m_(y_.size(), 0.0) {
    const std::size_t n = y_.size();
    if (n < 3 || !(dx > 0.0)) throw DomainError("spline: need >= 3 nodes and dx > 0");
    // Thomas algorithm for m_{j-1} + 4 m_j + m_{j+1} = 6 (y_{j+1} - 2 y_j + y_{j-1}) / dx^2,
    // natural ends m_0 = m_{n-1} = 0.
    const double scale = 6.0 / (dx * dx);
    std::vector<double> c(n, 0.0);
    std::vector<double> d(n, 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double rhs = scale * (y_[j + 1] - 2.0 * y_[j] + y_[j - 1]);
        const double denom = 4.0 - c[j - 1];
        c[j] = 1.0 / denom;
        d[j] = (rhs - d[j - 1]) / denom;
    }
    for (std::size_t j = n - 2; j >= 1; --j) {
        m_[j] = d[j] - c[j] * m_[j + 1];
    }
}

UniformCubicSpline::Eval UniformCubicSpline::eval(double x) const {
    const double pos = (x - x0_) / dx_;
    const auto last = static_cast<double>(y_.size() - 2);
    const double cell = std::clamp(std::floor(pos), 0.0, last);
    const auto j = static_cast<std::size_t>(cell);
    const double t = pos - cell;
    const double s = 1.0 - t;
    const double h = dx_;
    const double y0 = y_[j], y1 = y_[j + 1], m0 = m_[j], m1 = m_[j + 1];
    Eval e;
    e.value = s * y0 + t * y1 + h * h / 6.0 * ((s * s * s - s) * m0 + (t * t * t - t) * m1);
    e.d1 = (y1 - y0) / h + h / 6.0 * ((1.0 - 3.0 * s * s) * m0 + (3.0 * t * t - 1.0) * m1);
    e.d2 = s * m0 + t * m1;
    return e;
}

}  // namespace cchedge
