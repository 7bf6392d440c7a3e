#pragma once

#include "datascale/core.hpp"
#include "datascale/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace datascale::testing {

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

inline std::vector<double> doubling_grid(double lo, double hi) {
    std::vector<double> d;
    for (double x = lo; x <= hi; x *= 2) d.push_back(x);
    return d;
}

// Curve points straight from the closed form, optionally with multiplicative
// Gaussian noise. Written independently of the library's simulator.
inline std::vector<Observation> curve(double alpha, double c, double p, const std::vector<double>& d,
                                      double noise = 0.0, std::uint64_t seed = 0,
                                      const std::string& label = "c") {
    std::vector<Observation> obs;
    SplitMix64 rng(seed);
    for (double x : d) {
        Observation o;
        o.condition = label;
        o.d_millions = x;
        o.loss = alpha * std::pow(1.0 / x + c, p);
        if (noise > 0) o.loss *= 1.0 + noise * rng.normal();
        obs.push_back(o);
    }
    return obs;
}

// Central difference of f at x with step h.
template <class F>
double central_difference(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace datascale::testing

namespace datascale::testing {

struct TableRow {
    const char* block;
    const char* name;
    double alpha;
    double c;
    double p;
};

// Published scaling coefficients; exponents are shared within each block
// (parallel data has its own).
inline constexpr TableRow kTableOne[] = {
    {"architecture", "Encoder-Decoder", 1.969, 0.057, 0.285},
    {"architecture", "Decoder-only", 1.817, 0.11, 0.285},
    {"architecture", "Hybrid-LSTM", 2.011, 0.078, 0.285},
    {"synthetic-noise", "No noise", 1.969, 0.064, 0.296},
    {"synthetic-noise", "Source noise", 2.222, 0.067, 0.296},
    {"synthetic-noise", "Target noise", 2.772, 0.323, 0.296},
    {"filtering", "No filter", 2.501, 0.034, 0.278},
    {"filtering", "CDS", 2.235, 0.054, 0.278},
    {"filtering", "Bicleaner", 2.130, 0.064, 0.278},
    {"back-translation", "BT model 2L6L", 2.343, 0.059, 0.198},
    {"back-translation", "BT model 6L6L", 2.288, 0.054, 0.198},
    {"back-translation", "BT model 32L6L", 2.251, 0.040, 0.198},
    {"back-translation", "BT model 64L6L", 2.224, 0.037, 0.198},
    {"back-translation", "Parallel data", 1.196, 0.048, 0.271},
};

}  // namespace datascale::testing
