#pragma once

// Least-squares estimation of the scaling-law variants.
//
// All fits run a damped Gauss-Newton (Levenberg-Marquardt) solver on a
// reparameterized problem so that every returned law satisfies its
// invariants by construction:
//
//     alpha = exp(a),  C = exp(c),  p = 2 / (1 + exp(-s))
//
// C only reaches 0 asymptotically; fitted values below 1e-12 are reported
// as exactly 0. The solver is started from a data-driven seed plus
// `n_restarts` log-normal perturbations of it; the lowest objective wins and
// ties go to the earliest start. Everything is single-threaded and
// deterministic in (inputs, FitConfig).

#include "datascale/core.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace datascale {

enum class LossSpace { log, linear };

struct FitConfig {
    LossSpace loss_space = LossSpace::log;
    int max_iters = 2000;
    double rel_tol = 1e-10;
    int n_restarts = 8;
    std::uint64_t seed = 0;
};

void validate(const FitConfig& cfg);

struct FitResult {
    PowerLaw law;
    double objective = 0.0;
    std::vector<double> residuals;  // observed - predicted, in the configured space
    bool converged = false;
    int n_iters = 0;
};

struct ConditionConstants {
    double alpha = 1.0;
    double c = 0.0;
};

struct SharedFitResult {
    double p = 1.0;
    std::map<std::string, ConditionConstants> per_condition;
    std::map<std::string, std::vector<double>> residuals;
    double objective = 0.0;
    bool converged = false;
    int n_iters = 0;

    PowerLaw law_for(const std::string& condition) const;
};

using ModelShape = std::pair<std::int64_t, std::int64_t>;  // (n_enc, n_dec)

// Parameter-law constants supplied to the joint fit.
struct CapacityLaw {
    double beta = 1.0;
    double p_e = 0.0;
    double p_d = 0.0;
    double l_inf = 0.0;
};

struct JointFitResult {
    double alpha = 1.0;
    double p = 1.0;
    double objective = 0.0;            // over in-sample observations only
    std::vector<double> residuals;     // aligned with all inputs, held-out included
    std::vector<bool> in_sample;
    bool converged = false;
    int n_iters = 0;

    JointLawParams params(const CapacityLaw& fixed) const;
};

struct TailFitResult {
    TailLaw law;
    double objective = 0.0;
    std::vector<double> residuals;  // aligned with the qualifying observations
    std::vector<double> d_used;
    bool converged = false;
    int n_iters = 0;
};

// Residual of one observation against a prediction in the given space.
double residual(double observed, double predicted, LossSpace space);

// Sum of squared residuals of `law` over `obs`.
double sum_squared_residuals(const PowerLaw& law, std::span<const Observation> obs, LossSpace space);

FitResult fit_single(std::span<const Observation> obs, const FitConfig& cfg);

// One shared exponent, per-condition (alpha, C); a single joint problem over
// 1 + 2k parameters.
SharedFitResult fit_shared(const std::map<std::string, std::vector<Observation>>& groups,
                           const FitConfig& cfg);

// Fits (alpha, p) of the joint data/parameter law with the capacity constants
// held fixed. Observations whose shape is listed in `hold_out` are excluded
// from the objective but still receive residuals.
JointFitResult fit_joint(std::span<const Observation> obs, const CapacityLaw& fixed,
                         const FitConfig& cfg, std::span<const ModelShape> hold_out = {});

TailFitResult fit_tail(std::span<const Observation> obs, double d_min, const FitConfig& cfg);

LinearFit fit_linear(std::span<const double> x, std::span<const double> y);

// Brute-force search over a regular grid, for verifying fit_single.
struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    int steps = 1;
};

struct GridSpec {
    GridAxis alpha;
    GridAxis c;
    GridAxis p;
    LossSpace loss_space = LossSpace::log;
};

struct GridResult {
    PowerLaw law;
    double objective = 0.0;
    std::size_t evaluations = 0;
};

GridResult grid_oracle(std::span<const Observation> obs, const GridSpec& grid);

}  // namespace datascale
