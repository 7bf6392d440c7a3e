#pragma once

// Unchecked evaluation kernels shared by the public evaluators and the
// fitters. Callers guarantee d > 0 and parameters within their invariants.

#include <array>
#include <cmath>

namespace datascale::kernels {

struct LawTerms {
    double base;   // 1/d + C
    double power;  // base^p
    double value;  // alpha * base^p
};

inline LawTerms law_terms(double alpha, double c, double p, double d) {
    const double base = 1.0 / d + c;
    const double power = std::pow(base, p);
    return {base, power, alpha * power};
}

// (dL/dalpha, dL/dC, dL/dp) from precomputed terms.
inline std::array<double, 3> law_gradient(const LawTerms& t, double alpha, double p) {
    return {t.power, alpha * p * t.power / t.base, t.value * std::log(t.base)};
}

inline double tail_value(double gamma, double q, double b, double d) {
    return gamma * std::pow(d, -q) + b;
}

inline std::array<double, 3> tail_gradient(double gamma, double q, double d) {
    const double dq = std::pow(d, -q);
    return {dq, -gamma * dq * std::log(d), 1.0};
}

}  // namespace datascale::kernels
