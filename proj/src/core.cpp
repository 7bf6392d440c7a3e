#include "datascale/core.hpp"
#include "datascale/error.hpp"

#include "law_kernels.hpp"

#include <cmath>
#include <sstream>

namespace datascale {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::domain: return "domain error";
    case ErrorKind::singularity: return "singularity error";
    case ErrorKind::insufficient_data: return "insufficient data";
    case ErrorKind::duplicate_abscissa: return "duplicate abscissa";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::rank: return "rank error";
    case ErrorKind::shared_exponent_required: return "shared exponent required";
    case ErrorKind::mc_failure: return "monte carlo failure";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::io: return "i/o error";
    }
    return "error";
}

namespace {

[[noreturn]] void domain_error(const std::string& msg) { throw Error(ErrorKind::domain, msg); }

bool positive(double x) { return std::isfinite(x) && x > 0.0; }
bool non_negative(double x) { return std::isfinite(x) && x >= 0.0; }

void check_size(double d) {
    if (!positive(d)) {
        std::ostringstream os;
        os << "dataset size must be positive and finite, got " << d;
        domain_error(os.str());
    }
}

void check_counts(std::int64_t n_enc, std::int64_t n_dec) {
    if (n_enc <= 0 || n_dec <= 0) domain_error("parameter counts must be positive");
}

}  // namespace

void validate(const Observation& obs) {
    check_size(obs.d_millions);
    if (!std::isfinite(obs.loss)) domain_error("loss must be finite");
    if (obs.metric == Metric::log_perplexity && obs.loss <= 0.0)
        domain_error("log-perplexity loss must be positive");
    if (obs.n_enc.has_value() != obs.n_dec.has_value())
        throw Error(ErrorKind::schema, "n_enc and n_dec must be given together");
    if (obs.has_shape()) check_counts(*obs.n_enc, *obs.n_dec);
}

void validate(const PowerLaw& law) {
    if (!positive(law.alpha)) domain_error("alpha must be positive");
    if (!non_negative(law.c)) domain_error("C must be non-negative");
    if (!(law.p > 0.0 && law.p <= kMaxExponent)) domain_error("p must lie in (0, 2]");
}

void validate(const TailLaw& law) {
    if (!positive(law.gamma)) domain_error("gamma must be positive");
    if (!positive(law.q)) domain_error("tail exponent must be positive");
    if (!non_negative(law.b)) domain_error("asymptote B must be non-negative");
}

void validate(const JointLawParams& params) {
    if (!positive(params.alpha)) domain_error("alpha must be positive");
    if (!(params.p > 0.0 && params.p <= kMaxExponent)) domain_error("p must lie in (0, 2]");
    if (!positive(params.beta)) domain_error("beta must be positive");
    if (!positive(params.p_e)) domain_error("p_e must be positive");
    if (!positive(params.p_d)) domain_error("p_d must be positive");
    if (!non_negative(params.l_inf)) domain_error("L_inf must be non-negative");
}

double eval_law(const PowerLaw& law, double d_millions) {
    validate(law);
    check_size(d_millions);
    return kernels::law_terms(law.alpha, law.c, law.p, d_millions).value;
}

LawGradient eval_law_gradient(const PowerLaw& law, double d_millions) {
    validate(law);
    check_size(d_millions);
    const auto terms = kernels::law_terms(law.alpha, law.c, law.p, d_millions);
    if (!(terms.base > 0.0)) throw Error(ErrorKind::singularity, "1/d + C vanishes");
    return kernels::law_gradient(terms, law.alpha, law.p);
}

double eval_tail(const TailLaw& law, double d_millions) {
    validate(law);
    check_size(d_millions);
    return kernels::tail_value(law.gamma, law.q, law.b, d_millions);
}

TailGradient eval_tail_gradient(const TailLaw& law, double d_millions) {
    validate(law);
    check_size(d_millions);
    return kernels::tail_gradient(law.gamma, law.q, d_millions);
}

double joint_capacity(const JointLawParams& params, std::int64_t n_enc, std::int64_t n_dec) {
    validate(params);
    check_counts(n_enc, n_dec);
    const double k = std::pow(static_cast<double>(n_enc), -params.p_e) *
                         std::pow(static_cast<double>(n_dec), -params.p_d) +
                     params.l_inf;
    return params.beta * std::pow(k, 1.0 / params.p);
}

double eval_joint_law(const JointLawParams& params, std::int64_t n_enc, std::int64_t n_dec,
                      double d_millions) {
    check_size(d_millions);
    const double c = joint_capacity(params, n_enc, n_dec);
    return kernels::law_terms(params.alpha, c, params.p, d_millions).value;
}

std::array<double, 2> eval_joint_law_gradient(const JointLawParams& params, std::int64_t n_enc,
                                              std::int64_t n_dec, double d_millions) {
    check_size(d_millions);
    const double c = joint_capacity(params, n_enc, n_dec);
    const auto terms = kernels::law_terms(params.alpha, c, params.p, d_millions);
    const auto g = kernels::law_gradient(terms, params.alpha, params.p);
    // C = beta * K^(1/p)  =>  dC/dp = -C * ln(K) / p^2, with ln(K) = p * ln(C / beta)
    const double dc_dp = c > 0.0 ? -std::log(c / params.beta) / params.p * c : 0.0;
    return {g[0], g[2] + g[1] * dc_dp};
}

}  // namespace datascale
