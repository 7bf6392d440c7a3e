#pragma once

// Quantities derived from a fitted law: the capacity-limited floor, the
// regime transition, the marginal value of data, data-equivalence between
// conditions sharing an exponent, and Monte Carlo exponent uncertainty.

#include "datascale/core.hpp"
#include "datascale/fit.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>

namespace datascale {

// alpha * C^p, the loss as D -> infinity.
double asymptotic_loss(const PowerLaw& law);

// D* = 1/C, where the data-limited and capacity-limited regimes meet.
// Empty when C = 0 (the curve never leaves the data-limited regime).
std::optional<double> transition_point(const PowerLaw& law);

// -dL/dD in loss units per million sentence pairs.
double marginal_value(const PowerLaw& law, double d_millions);

// Slopes dL/dD of the two asymptotic approximations of a law:
//   data-limited      alpha * D^-p
//   capacity-limited  alpha * C^p + alpha * p * C^(p-1) / D
struct RegimeSlopes {
    double data_limited;
    double capacity_limited;
};

RegimeSlopes regime_slopes(const PowerLaw& law, double d_millions);

// Locates where the two regime slopes are equal by bisection on
// ln(data_limited / capacity_limited) over [lo, hi]. Empty when C = 0, when
// the slopes coincide everywhere (p = 1), or when there is no sign change.
std::optional<double> regime_crossing(const PowerLaw& law, double lo, double hi);

inline constexpr double kSharedExponentTolerance = 1e-9;

// (alpha1 / alpha2)^(1/p): how many times more data condition 1 needs to
// match condition 2 in the data-limited regime.
double data_equivalence_factor(const PowerLaw& law1, const PowerLaw& law2);

struct McConfig {
    double noise_frac = 0.02;
    int n_reps = 1000;
    std::uint64_t seed = 0;
};

void validate(const McConfig& cfg);

struct McSummary {
    double mean_p = 0.0;
    double std_p = 0.0;
    std::array<double, 3> quantiles{};  // 5%, 50%, 95%
    int n_converged = 0;
    int n_reps = 0;
};

// Parametric Monte Carlo over the exponent: each replicate redraws every loss
// from Normal(l, noise_frac * l) on its own (seed, replicate) stream and
// refits with fit_single.
McSummary mc_uncertainty(std::span<const Observation> obs, const FitConfig& cfg_fit,
                         const McConfig& cfg_mc);

// Exponents fitted by each replicate (NaN for non-converged ones); exposed so
// callers can inspect the distribution.
std::vector<double> mc_exponents(std::span<const Observation> obs, const FitConfig& cfg_fit,
                                 const McConfig& cfg_mc);

struct LawQuery {
    double d_millions = 0.0;
    std::optional<ModelShape> shape;
};

using AnyLaw = std::variant<PowerLaw, JointLawParams>;

double predict(const AnyLaw& law, const LawQuery& query);

}  // namespace datascale
