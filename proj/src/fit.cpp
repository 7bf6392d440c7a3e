#include "datascale/fit.hpp"
#include "datascale/error.hpp"
#include "datascale/rng.hpp"

#include "law_kernels.hpp"
#include "levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace datascale {

namespace {

constexpr double kZeroFloor = 1e-12;
constexpr double kRestartSigma = 0.5;
constexpr double kMinSeedP = 1e-2;
constexpr double kMaxSeedP = 1.9;

double exponent_from(double s) { return kMaxExponent / (1.0 + std::exp(-s)); }
double exponent_to(double p) { return std::log(p / (kMaxExponent - p)); }
double exponent_slope(double p) { return p * (1.0 - p / kMaxExponent); }

double floor_to_zero(double v) { return v < kZeroFloor ? 0.0 : v; }

double transform(double loss, LossSpace space) {
    return space == LossSpace::log ? std::log(loss) : loss;
}

struct Curve {
    std::vector<double> d;
    std::vector<double> loss;
};

struct CurveSeed {
    double alpha;
    double p;
    double min_loss;
};

void check_curve(std::span<const Observation> obs, std::size_t min_points) {
    if (obs.size() < min_points) {
        std::ostringstream os;
        os << "need at least " << min_points << " observations, got " << obs.size();
        throw Error(ErrorKind::insufficient_data, os.str());
    }
    std::set<double> seen;
    for (const auto& o : obs) {
        validate(o);
        if (!(o.loss > 0.0)) throw Error(ErrorKind::domain, "losses must be positive to fit");
        if (o.condition != obs.front().condition)
            throw Error(ErrorKind::schema, "observations span several conditions: '" +
                                               obs.front().condition + "' and '" + o.condition + "'");
        if (!seen.insert(o.d_millions).second) {
            std::ostringstream os;
            os << "dataset size " << o.d_millions << " appears more than once";
            throw Error(ErrorKind::duplicate_abscissa, os.str());
        }
    }
}

Curve to_curve(std::span<const Observation> obs) {
    Curve c;
    for (const auto& o : obs) {
        c.d.push_back(o.d_millions);
        c.loss.push_back(o.loss);
    }
    return c;
}

// Ordinary least squares of ln L on ln(1/d) over the smallest half of the
// sizes, where 1/d dominates C: slope ~ p, intercept ~ ln alpha.
CurveSeed seed_curve(const Curve& curve) {
    std::vector<std::size_t> order(curve.d.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return curve.d[a] < curve.d[b]; });
    const std::size_t half = std::max<std::size_t>(2, (order.size() + 1) / 2);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < half; ++k) {
        const double x = -std::log(curve.d[order[k]]);
        const double y = std::log(curve.loss[order[k]]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(half);
    const double denom = n * sxx - sx * sx;
    double p = denom > 0 ? (n * sxy - sx * sy) / denom : 0.3;
    if (!std::isfinite(p)) p = 0.3;
    p = std::clamp(p, kMinSeedP, kMaxSeedP);
    const double log_alpha = (sy - p * sx) / n;
    const double min_loss = *std::min_element(curve.loss.begin(), curve.loss.end());
    return {std::exp(log_alpha), p, min_loss};
}

double seed_capacity(double alpha, double p, double min_loss) {
    const double c = std::pow(min_loss / alpha, 1.0 / p);
    return std::isfinite(c) ? std::clamp(c, 1e-8, 1e3) : 1e-2;
}

double perturb(double v, SplitMix64& rng) { return v * std::exp(kRestartSigma * rng.normal()); }

double perturb_exponent(double p, SplitMix64& rng) {
    return std::clamp(perturb(p, rng), 1e-3, 0.99 * kMaxExponent);
}

struct Start {
    lm::Outcome outcome;
    double objective = std::numeric_limits<double>::infinity();
};

// Runs the solver from the seed and each perturbed restart. `start_for`
// builds the initial vector (restart 0 is the unperturbed seed);
// `reported_objective` scores the law that will actually be returned.
Start multistart(const lm::Evaluate& evaluate,
                 const std::function<Eigen::VectorXd(SplitMix64*)>& start_for,
                 const std::function<double(const Eigen::VectorXd&)>& reported_objective,
                 const FitConfig& cfg) {
    const lm::Options options{cfg.max_iters, cfg.rel_tol};
    Start best;
    bool best_converged = false;
    for (int r = 0; r <= cfg.n_restarts; ++r) {
        Eigen::VectorXd x0;
        if (r == 0) {
            x0 = start_for(nullptr);
        } else {
            auto rng = stream_for(cfg.seed, static_cast<std::uint64_t>(r));
            x0 = start_for(&rng);
        }
        auto outcome = lm::minimize(evaluate, std::move(x0), options);
        double objective = reported_objective(outcome.x);
        if (!std::isfinite(objective)) {
            objective = std::numeric_limits<double>::infinity();
            outcome.converged = false;
        }
        // Converged starts beat non-converged ones; otherwise lowest
        // objective, earliest start on ties.
        const bool better = (outcome.converged && !best_converged) ||
                            (outcome.converged == best_converged && objective < best.objective);
        if (r == 0 || better) {
            best_converged = outcome.converged;
            best.objective = objective;
            best.outcome = std::move(outcome);
        }
    }
    return best;
}

// Shared-exponent problem over k curves. Parameter layout:
//   x[0] = s (p = 2 * logistic(s)), x[1 + 2g] = ln alpha_g, x[2 + 2g] = ln C_g.
struct GroupFit {
    double p = 1.0;
    std::vector<ConditionConstants> constants;
    std::vector<std::vector<double>> residuals;
    double objective = 0.0;
    bool converged = false;
    int n_iters = 0;
};

GroupFit fit_groups(const std::vector<Curve>& curves, const FitConfig& cfg) {
    const auto k = curves.size();
    const LossSpace space = cfg.loss_space;
    std::size_t n_points = 0;
    for (const auto& c : curves) n_points += c.d.size();

    std::vector<CurveSeed> seeds;
    double p_sum = 0.0;
    for (const auto& c : curves) {
        seeds.push_back(seed_curve(c));
        p_sum += seeds.back().p;
    }
    const double p_seed = p_sum / static_cast<double>(k);

    const lm::Evaluate evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                                      Eigen::MatrixXd* jac) {
        const double p = exponent_from(x[0]);
        if (!(p > 0.0)) return false;
        const double slope = exponent_slope(p);
        r.resize(static_cast<Eigen::Index>(n_points));
        if (jac) jac->setZero(static_cast<Eigen::Index>(n_points), x.size());
        Eigen::Index row = 0;
        for (std::size_t g = 0; g < k; ++g) {
            const auto ia = static_cast<Eigen::Index>(1 + 2 * g);
            const double alpha = std::exp(x[ia]);
            const double c = std::exp(x[ia + 1]);
            for (std::size_t i = 0; i < curves[g].d.size(); ++i, ++row) {
                const auto terms = kernels::law_terms(alpha, c, p, curves[g].d[i]);
                if (!(terms.value > 0.0) || !std::isfinite(terms.value)) return false;
                r[row] = transform(curves[g].loss[i], space) - transform(terms.value, space);
                if (jac) {
                    const auto grad = kernels::law_gradient(terms, alpha, p);
                    const double scale = space == LossSpace::log ? 1.0 / terms.value : 1.0;
                    (*jac)(row, 0) = -scale * grad[2] * slope;
                    (*jac)(row, ia) = -scale * grad[0] * alpha;
                    (*jac)(row, ia + 1) = -scale * grad[1] * c;
                }
            }
        }
        return true;
    };

    const auto start_for = [&](SplitMix64* rng) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(1 + 2 * k));
        const double p = rng ? perturb_exponent(p_seed, *rng) : p_seed;
        x[0] = exponent_to(p);
        for (std::size_t g = 0; g < k; ++g) {
            double alpha = seeds[g].alpha;
            double c = seed_capacity(alpha, p_seed, seeds[g].min_loss);
            if (rng) {
                alpha = perturb(alpha, *rng);
                c = perturb(c, *rng);
            }
            x[static_cast<Eigen::Index>(1 + 2 * g)] = std::log(alpha);
            x[static_cast<Eigen::Index>(2 + 2 * g)] = std::log(c);
        }
        return x;
    };

    const auto decode = [&](const Eigen::VectorXd& x) {
        GroupFit out;
        out.p = exponent_from(x[0]);
        out.objective = 0.0;
        for (std::size_t g = 0; g < k; ++g) {
            const double alpha = std::exp(x[static_cast<Eigen::Index>(1 + 2 * g)]);
            const double c = floor_to_zero(std::exp(x[static_cast<Eigen::Index>(2 + 2 * g)]));
            out.constants.push_back({alpha, c});
            std::vector<double> res;
            for (std::size_t i = 0; i < curves[g].d.size(); ++i) {
                const double pred = kernels::law_terms(alpha, c, out.p, curves[g].d[i]).value;
                res.push_back(residual(curves[g].loss[i], pred, space));
                out.objective += res.back() * res.back();
            }
            out.residuals.push_back(std::move(res));
        }
        return out;
    };

    const auto best = multistart(
        evaluate, start_for, [&](const Eigen::VectorXd& x) { return decode(x).objective; }, cfg);
    auto out = decode(best.outcome.x);
    out.converged = best.outcome.converged;
    out.n_iters = best.outcome.iterations;
    return out;
}

}  // namespace

void validate(const FitConfig& cfg) {
    if (cfg.max_iters < 1) throw Error(ErrorKind::domain, "max_iters must be at least 1");
    if (!(cfg.rel_tol > 0.0)) throw Error(ErrorKind::domain, "rel_tol must be positive");
    if (cfg.n_restarts < 0) throw Error(ErrorKind::domain, "n_restarts must be non-negative");
}

PowerLaw SharedFitResult::law_for(const std::string& condition) const {
    const auto it = per_condition.find(condition);
    if (it == per_condition.end()) throw Error(ErrorKind::schema, "unknown condition '" + condition + "'");
    return {it->second.alpha, it->second.c, p};
}

JointLawParams JointFitResult::params(const CapacityLaw& fixed) const {
    return {alpha, p, fixed.beta, fixed.p_e, fixed.p_d, fixed.l_inf};
}

double residual(double observed, double predicted, LossSpace space) {
    return transform(observed, space) - transform(predicted, space);
}

double sum_squared_residuals(const PowerLaw& law, std::span<const Observation> obs, LossSpace space) {
    double total = 0.0;
    for (const auto& o : obs) {
        const double r = residual(o.loss, eval_law(law, o.d_millions), space);
        total += r * r;
    }
    return total;
}

FitResult fit_single(std::span<const Observation> obs, const FitConfig& cfg) {
    validate(cfg);
    check_curve(obs, 4);
    const auto group = fit_groups({to_curve(obs)}, cfg);
    FitResult out;
    out.law = {group.constants[0].alpha, group.constants[0].c, group.p};
    out.objective = group.objective;
    out.residuals = group.residuals[0];
    out.converged = group.converged;
    out.n_iters = group.n_iters;
    return out;
}

SharedFitResult fit_shared(const std::map<std::string, std::vector<Observation>>& groups,
                           const FitConfig& cfg) {
    validate(cfg);
    if (groups.empty()) throw Error(ErrorKind::insufficient_data, "no condition groups given");
    std::vector<Curve> curves;
    for (const auto& [label, obs] : groups) {
        check_curve(obs, 4);
        curves.push_back(to_curve(obs));
    }
    const auto fitted = fit_groups(curves, cfg);
    SharedFitResult out;
    out.p = fitted.p;
    std::size_t g = 0;
    for (const auto& [label, obs] : groups) {
        out.per_condition[label] = fitted.constants[g];
        out.residuals[label] = fitted.residuals[g];
        ++g;
    }
    out.objective = fitted.objective;
    out.converged = fitted.converged;
    out.n_iters = fitted.n_iters;
    return out;
}

JointFitResult fit_joint(std::span<const Observation> obs, const CapacityLaw& fixed,
                         const FitConfig& cfg, std::span<const ModelShape> hold_out) {
    validate(cfg);
    validate(JointLawParams{1.0, 1.0, fixed.beta, fixed.p_e, fixed.p_d, fixed.l_inf});

    std::vector<bool> in_sample;
    std::vector<Observation> fitted_obs;
    for (const auto& o : obs) {
        validate(o);
        if (!o.has_shape()) throw Error(ErrorKind::schema, "joint fit needs n_enc and n_dec on every row");
        if (!(o.loss > 0.0)) throw Error(ErrorKind::domain, "losses must be positive to fit");
        const ModelShape shape{*o.n_enc, *o.n_dec};
        const bool held = std::find(hold_out.begin(), hold_out.end(), shape) != hold_out.end();
        in_sample.push_back(!held);
        if (!held) fitted_obs.push_back(o);
    }
    if (fitted_obs.size() < 4) {
        std::ostringstream os;
        os << "need at least 4 in-sample observations, got " << fitted_obs.size();
        throw Error(ErrorKind::insufficient_data, os.str());
    }

    const LossSpace space = cfg.loss_space;
    const auto n = static_cast<Eigen::Index>(fitted_obs.size());
    const auto params_at = [&](const Eigen::VectorXd& x) {
        return JointLawParams{std::exp(x[0]), exponent_from(x[1]), fixed.beta, fixed.p_e, fixed.p_d,
                              fixed.l_inf};
    };

    const lm::Evaluate evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                                      Eigen::MatrixXd* jac) {
        const auto params = params_at(x);
        if (!(params.p > 0.0) || !std::isfinite(params.alpha) || !(params.alpha > 0.0)) return false;
        r.resize(n);
        if (jac) jac->resize(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& o = fitted_obs[static_cast<std::size_t>(i)];
            const double value = eval_joint_law(params, *o.n_enc, *o.n_dec, o.d_millions);
            if (!(value > 0.0) || !std::isfinite(value)) return false;
            r[i] = transform(o.loss, space) - transform(value, space);
            if (jac) {
                const auto grad = eval_joint_law_gradient(params, *o.n_enc, *o.n_dec, o.d_millions);
                const double scale = space == LossSpace::log ? 1.0 / value : 1.0;
                (*jac)(i, 0) = -scale * grad[0] * params.alpha;
                (*jac)(i, 1) = -scale * grad[1] * exponent_slope(params.p);
            }
        }
        return true;
    };

    const auto seed = seed_curve(to_curve(fitted_obs));
    // With p fixed, ln alpha has a closed-form least-squares value in log space.
    const auto alpha_given = [&](double p) {
        const JointLawParams unit{1.0, p, fixed.beta, fixed.p_e, fixed.p_d, fixed.l_inf};
        double acc = 0.0;
        for (const auto& o : fitted_obs)
            acc += std::log(o.loss) - std::log(eval_joint_law(unit, *o.n_enc, *o.n_dec, o.d_millions));
        return std::exp(acc / static_cast<double>(fitted_obs.size()));
    };

    const auto start_for = [&](SplitMix64* rng) {
        const double p = rng ? perturb_exponent(seed.p, *rng) : seed.p;
        double alpha = alpha_given(p);
        if (rng) alpha = perturb(alpha, *rng);
        Eigen::VectorXd x(2);
        x << std::log(alpha), exponent_to(p);
        return x;
    };

    const auto objective_at = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd r;
        return evaluate(x, r, nullptr) ? r.squaredNorm() : std::numeric_limits<double>::infinity();
    };

    const auto best = multistart(evaluate, start_for, objective_at, cfg);
    const auto params = params_at(best.outcome.x);

    JointFitResult out;
    out.alpha = params.alpha;
    out.p = params.p;
    out.in_sample = std::move(in_sample);
    out.converged = best.outcome.converged;
    out.n_iters = best.outcome.iterations;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& o = obs[i];
        const double r = residual(o.loss, eval_joint_law(params, *o.n_enc, *o.n_dec, o.d_millions), space);
        out.residuals.push_back(r);
        if (out.in_sample[i]) out.objective += r * r;
    }
    return out;
}

TailFitResult fit_tail(std::span<const Observation> obs, double d_min, const FitConfig& cfg) {
    validate(cfg);
    if (!(d_min > 0.0)) throw Error(ErrorKind::domain, "d_min must be positive");
    Curve curve;
    for (const auto& o : obs) {
        validate(o);
        if (o.d_millions < d_min) continue;
        if (!(o.loss > 0.0)) throw Error(ErrorKind::domain, "losses must be positive to fit");
        curve.d.push_back(o.d_millions);
        curve.loss.push_back(o.loss);
    }
    if (curve.d.size() < 3) {
        std::ostringstream os;
        os << "need at least 3 observations with d >= " << d_min << ", got " << curve.d.size();
        throw Error(ErrorKind::insufficient_data, os.str());
    }

    const LossSpace space = cfg.loss_space;
    const auto n = static_cast<Eigen::Index>(curve.d.size());

    // x = (ln gamma, ln q, ln B)
    const lm::Evaluate evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                                      Eigen::MatrixXd* jac) {
        const double gamma = std::exp(x[0]);
        const double q = std::exp(x[1]);
        const double b = std::exp(x[2]);
        if (!std::isfinite(gamma) || !std::isfinite(q) || !(q > 0.0)) return false;
        r.resize(n);
        if (jac) jac->resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = curve.d[static_cast<std::size_t>(i)];
            const double value = kernels::tail_value(gamma, q, b, d);
            if (!(value > 0.0) || !std::isfinite(value)) return false;
            r[i] = transform(curve.loss[static_cast<std::size_t>(i)], space) - transform(value, space);
            if (jac) {
                const auto grad = kernels::tail_gradient(gamma, q, d);
                const double scale = space == LossSpace::log ? 1.0 / value : 1.0;
                (*jac)(i, 0) = -scale * grad[0] * gamma;
                (*jac)(i, 1) = -scale * grad[1] * q;
                (*jac)(i, 2) = -scale * grad[2] * b;
            }
        }
        return true;
    };

    const double min_loss = *std::min_element(curve.loss.begin(), curve.loss.end());
    const auto start_for = [&](SplitMix64* rng) {
        double q = 1.0;
        double b = 0.9 * min_loss;
        if (rng) {
            q = perturb(q, *rng);
            b = perturb(b, *rng);
        }
        double gamma_sum = 0.0;
        int used = 0;
        for (std::size_t i = 0; i < curve.d.size(); ++i) {
            if (curve.loss[i] > b) {
                gamma_sum += (curve.loss[i] - b) * std::pow(curve.d[i], q);
                ++used;
            }
        }
        const double gamma = used > 0 ? gamma_sum / used : min_loss;
        Eigen::VectorXd x(3);
        x << std::log(gamma), std::log(q), std::log(std::max(b, 1e-8));
        return x;
    };

    const auto decode = [&](const Eigen::VectorXd& x) {
        return TailLaw{std::exp(x[0]), std::exp(x[1]), floor_to_zero(std::exp(x[2]))};
    };
    const auto objective_of = [&](const TailLaw& law) {
        double total = 0.0;
        for (std::size_t i = 0; i < curve.d.size(); ++i) {
            const double r = residual(curve.loss[i], kernels::tail_value(law.gamma, law.q, law.b, curve.d[i]), space);
            total += r * r;
        }
        return total;
    };

    const auto best = multistart(
        evaluate, start_for, [&](const Eigen::VectorXd& x) { return objective_of(decode(x)); }, cfg);

    TailFitResult out;
    out.law = decode(best.outcome.x);
    out.d_used = curve.d;
    for (std::size_t i = 0; i < curve.d.size(); ++i) {
        out.residuals.push_back(
            residual(curve.loss[i], kernels::tail_value(out.law.gamma, out.law.q, out.law.b, curve.d[i]), space));
        out.objective += out.residuals.back() * out.residuals.back();
    }
    out.converged = best.outcome.converged;
    out.n_iters = best.outcome.iterations;
    return out;
}

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::domain, "x and y differ in length");
    if (x.size() < 2) throw Error(ErrorKind::insufficient_data, "need at least 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw Error(ErrorKind::rank, "x values are all identical");

    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += e * e;
    }
    fit.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

GridResult grid_oracle(std::span<const Observation> obs, const GridSpec& grid) {
    const auto check_axis = [](const GridAxis& a, const char* name) {
        if (a.steps < 1 || !(a.lo <= a.hi) || !std::isfinite(a.lo) || !std::isfinite(a.hi))
            throw Error(ErrorKind::domain, std::string("invalid grid axis for ") + name);
    };
    check_axis(grid.alpha, "alpha");
    check_axis(grid.c, "C");
    check_axis(grid.p, "p");
    if (!(grid.alpha.lo > 0.0) || grid.c.lo < 0.0 || !(grid.p.lo > 0.0) || grid.p.hi > kMaxExponent)
        throw Error(ErrorKind::domain, "grid leaves the valid parameter region");
    if (obs.empty()) throw Error(ErrorKind::insufficient_data, "no observations");
    for (const auto& o : obs) {
        validate(o);
        if (!(o.loss > 0.0)) throw Error(ErrorKind::domain, "losses must be positive");
    }

    const auto at = [](const GridAxis& a, int i) {
        return a.steps == 1 ? a.lo : a.lo + (a.hi - a.lo) * i / (a.steps - 1);
    };

    // Deliberately written straight from the formula, not via the fitter's kernels.
    GridResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int ia = 0; ia < grid.alpha.steps; ++ia) {
        for (int ic = 0; ic < grid.c.steps; ++ic) {
            for (int ip = 0; ip < grid.p.steps; ++ip) {
                const PowerLaw law{at(grid.alpha, ia), at(grid.c, ic), at(grid.p, ip)};
                double total = 0.0;
                for (const auto& o : obs) {
                    const double pred = law.alpha * std::pow(1.0 / o.d_millions + law.c, law.p);
                    const double r = grid.loss_space == LossSpace::log ? std::log(o.loss) - std::log(pred)
                                                                       : o.loss - pred;
                    total += r * r;
                }
                ++best.evaluations;
                if (total < best.objective) {
                    best.objective = total;
                    best.law = law;
                }
            }
        }
    }
    return best;
}

}  // namespace datascale
