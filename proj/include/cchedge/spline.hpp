#pragma once

#include <cstddef>
#include <vector>

namespace cchedge {

/// Natural cubic spline on a uniform grid x_j = x0 + j * dx.
class UniformCubicSpline {
public:
    struct Eval {
        double value;
        double d1;
        double d2;
    };

    UniformCubicSpline() = default;
    UniformCubicSpline(double x0, double dx, std::vector<double> y);

    double x_min() const { return x0_; }
    double x_max() const { return x0_ + dx_ * static_cast<double>(y_.size() - 1); }
    std::size_t size() const { return y_.size(); }
    const std::vector<double>& nodes() const { return y_; }

    /// Caller guarantees x_min() <= x <= x_max().
    Eval eval(double x) const;
    double operator()(double x) const { return eval(x).value; }

private:
    double x0_ = 0.0;
    double dx_ = 1.0;
    std::vector<double> y_;
    std::vector<double> m_;  // second derivatives at the nodes
};

}  // namespace cchedge
