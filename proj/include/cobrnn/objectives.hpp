#pragma once

// Standard continuous benchmark objectives for exercising the optimizer.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cobrnn/errors.hpp"

namespace cobrnn {

inline double sphere(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

inline double rosenbrock(const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        const double b = 1.0 - x[i];
        s += 100.0 * a * a + b * b;
    }
    return s;
}

inline double rastrigin(const std::vector<double>& x) {
    double s = 10.0 * double(x.size());
    for (double v : x)
        s += v * v - 10.0 * std::cos(2.0 * 3.14159265358979323846 * v);
    return s;
}

inline std::function<double(const std::vector<double>&)>
benchmark_objective(const std::string& name) {
    if (name == "sphere") return sphere;
    if (name == "rosenbrock") return rosenbrock;
    if (name == "rastrigin") return rastrigin;
    throw UsageError("unknown objective '" + name +
                     "' (expected sphere|rosenbrock|rastrigin)");
}

}  // namespace cobrnn
