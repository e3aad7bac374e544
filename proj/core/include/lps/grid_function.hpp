#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lps {

/// Values on the uniform grid u = 0, step, 2*step, ..., step*(n-1), with
/// either linear interpolation or left-continuous step evaluation between
/// grid points. Evaluation clamps to the last value beyond u_max.
struct GridFunction {
    double step = 0.0;
    std::vector<double> values;
    bool linear_interp = true;

    GridFunction() = default;
    GridFunction(double step_, std::vector<double> values_, bool linear = true)
        : step(step_), values(std::move(values_)), linear_interp(linear) {
        if (!(step > 0.0) || values.empty()) {
            throw std::invalid_argument("GridFunction: need step > 0 and nonempty values");
        }
    }

    std::size_t size() const { return values.size(); }
    double u_max() const { return step * static_cast<double>(values.size() - 1); }

    double operator()(double u) const {
        if (u <= 0.0) return values.front();
        double s = u / step;
        auto i = static_cast<std::size_t>(s);
        if (i + 1 >= values.size()) return values.back();
        if (!linear_interp) return values[i];
        double frac = s - static_cast<double>(i);
        return values[i] + frac * (values[i + 1] - values[i]);
    }
};

} // namespace lps
