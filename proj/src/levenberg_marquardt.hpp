#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>

namespace datascale::lm {

// Fills residuals r (and the Jacobian J = dr/dx when requested) at x.
// Returns false when the model cannot be evaluated there (non-finite values);
// the solver then treats the trial point as a rejected step.
using Evaluate = std::function<bool(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac)>;

struct Options {
    int max_iters = 2000;
    double rel_tol = 1e-10;
};

struct Outcome {
    Eigen::VectorXd x;
    double objective = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

// Damped Gauss-Newton with Marquardt diagonal scaling. Minimizes ||r(x)||^2.
Outcome minimize(const Evaluate& evaluate, Eigen::VectorXd x0, const Options& options);

}  // namespace datascale::lm
