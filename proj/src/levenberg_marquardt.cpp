#include "levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>

namespace datascale::lm {

namespace {

constexpr double kInitialDamping = 1e-3;
constexpr double kMinDamping = 1e-15;
constexpr double kMaxDamping = 1e16;

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

Outcome minimize(const Evaluate& evaluate, Eigen::VectorXd x0, const Options& options) {
    Outcome out;
    out.x = std::move(x0);

    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    if (!evaluate(out.x, r, &jac) || !finite(r) || !jac.allFinite()) return out;
    out.objective = r.squaredNorm();

    Eigen::VectorXd r_trial;
    Eigen::MatrixXd jac_trial;
    double damping = kInitialDamping;

    while (out.iterations < options.max_iters) {
        if (out.objective == 0.0) {
            out.converged = true;
            break;
        }
        ++out.iterations;

        const Eigen::MatrixXd normal = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;
        if (grad.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(out.objective, 1e-300)) {
            out.converged = true;
            break;
        }

        Eigen::VectorXd scale = normal.diagonal();
        const double floor = std::max(scale.maxCoeff() * 1e-12, 1e-300);
        scale = scale.cwiseMax(floor);

        Eigen::MatrixXd damped = normal;
        damped.diagonal() += damping * scale;
        const Eigen::VectorXd step = damped.ldlt().solve(-grad);

        bool accepted = false;
        if (finite(step)) {
            if (step.norm() <= 1e-15 * (out.x.norm() + 1e-15)) {
                out.converged = true;
                break;
            }
            const Eigen::VectorXd x_trial = out.x + step;
            if (evaluate(x_trial, r_trial, &jac_trial) && finite(r_trial) && jac_trial.allFinite()) {
                const double trial_objective = r_trial.squaredNorm();
                if (trial_objective < out.objective) {
                    const double rel_decrease = (out.objective - trial_objective) / out.objective;
                    out.x = x_trial;
                    out.objective = trial_objective;
                    std::swap(r, r_trial);
                    std::swap(jac, jac_trial);
                    damping = std::max(damping / 3.0, kMinDamping);
                    accepted = true;
                    if (rel_decrease < options.rel_tol) {
                        out.converged = true;
                        break;
                    }
                }
            }
        }
        if (!accepted) {
            damping *= 8.0;
            // No descent left at machine precision: we are at a stationary point.
            if (damping > kMaxDamping) {
                out.converged = true;
                break;
            }
        }
    }
    return out;
}

}  // namespace datascale::lm
