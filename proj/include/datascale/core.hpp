#pragma once

// Domain types and evaluators for the data scaling law
//
//     L(D) = alpha * (1/D + C)^p
//
// and its relatives: the tail law gamma * D^-q + B fitted to the large-D end
// of a curve, and the joint data/parameter law in which C is replaced by
// beta * (Ne^-pe * Nd^-pd + L_inf)^(1/p).
//
// D is always measured in millions of sentence pairs. Losses are opaque
// positive scalars (nats/token by convention).

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace datascale {

enum class Metric { log_perplexity, bleu };

struct Observation {
    std::string condition;
    double d_millions = 0.0;
    double loss = 0.0;
    std::optional<std::int64_t> n_enc;
    std::optional<std::int64_t> n_dec;
    Metric metric = Metric::log_perplexity;

    bool has_shape() const { return n_enc.has_value() && n_dec.has_value(); }
};

// Throws Error(domain) / Error(schema) when the invariants do not hold.
void validate(const Observation& obs);

inline constexpr double kMaxExponent = 2.0;

struct PowerLaw {
    double alpha = 1.0;
    double c = 0.0;
    double p = 1.0;
};

void validate(const PowerLaw& law);

struct TailLaw {
    double gamma = 1.0;
    double q = 1.0;
    double b = 0.0;
};

void validate(const TailLaw& law);

// (beta, p_e, p_d, l_inf) are supplied from a parameter scaling law and are
// never fitted here; only alpha and p are.
struct JointLawParams {
    double alpha = 1.0;
    double p = 1.0;
    double beta = 1.0;
    double p_e = 0.0;
    double p_d = 0.0;
    double l_inf = 0.0;
};

void validate(const JointLawParams& params);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Partial derivatives in the order (alpha, C, p).
using LawGradient = std::array<double, 3>;

double eval_law(const PowerLaw& law, double d_millions);
LawGradient eval_law_gradient(const PowerLaw& law, double d_millions);

// (gamma, q, B)
using TailGradient = std::array<double, 3>;

double eval_tail(const TailLaw& law, double d_millions);
TailGradient eval_tail_gradient(const TailLaw& law, double d_millions);

// beta * (n_e^-p_e * n_d^-p_d + l_inf)^(1/p)
double joint_capacity(const JointLawParams& params, std::int64_t n_enc, std::int64_t n_dec);

double eval_joint_law(const JointLawParams& params, std::int64_t n_enc, std::int64_t n_dec,
                      double d_millions);

// Derivatives with respect to the two fitted parameters (alpha, p). The p
// derivative includes the dependence of the implied capacity on p.
std::array<double, 2> eval_joint_law_gradient(const JointLawParams& params, std::int64_t n_enc,
                                              std::int64_t n_dec, double d_millions);

}  // namespace datascale
