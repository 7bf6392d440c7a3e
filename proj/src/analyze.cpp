#include "datascale/analyze.hpp"
#include "datascale/error.hpp"
#include "datascale/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace datascale {

namespace {

constexpr int kMaxRedraws = 100;

// Linear interpolation between order statistics (the common "type 7" rule).
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double asymptotic_loss(const PowerLaw& law) {
    validate(law);
    if (law.c == 0.0) return 0.0;
    return law.alpha * std::pow(law.c, law.p);
}

std::optional<double> transition_point(const PowerLaw& law) {
    validate(law);
    if (law.c == 0.0) return std::nullopt;
    return 1.0 / law.c;
}

double marginal_value(const PowerLaw& law, double d_millions) {
    validate(law);
    if (!(d_millions > 0.0) || !std::isfinite(d_millions))
        throw Error(ErrorKind::domain, "dataset size must be positive");
    const double base = 1.0 / d_millions + law.c;
    if (!(base > 0.0)) throw Error(ErrorKind::singularity, "1/d + C vanishes");
    return law.alpha * law.p * std::pow(base, law.p - 1.0) / (d_millions * d_millions);
}

RegimeSlopes regime_slopes(const PowerLaw& law, double d_millions) {
    validate(law);
    if (!(d_millions > 0.0)) throw Error(ErrorKind::domain, "dataset size must be positive");
    if (law.c == 0.0) throw Error(ErrorKind::domain, "C = 0 has no capacity-limited regime");
    const double d = d_millions;
    return {-law.alpha * law.p * std::pow(d, -law.p - 1.0),
            -law.alpha * law.p * std::pow(law.c, law.p - 1.0) / (d * d)};
}

std::optional<double> regime_crossing(const PowerLaw& law, double lo, double hi) {
    validate(law);
    if (law.c == 0.0 || !(lo > 0.0) || !(hi > lo)) return std::nullopt;
    const auto gap = [&](double d) {
        const auto s = regime_slopes(law, d);
        return std::log(s.data_limited / s.capacity_limited);
    };
    double g_lo = gap(lo);
    const double g_hi = gap(hi);
    if (g_lo == 0.0) return lo;
    if (g_hi == 0.0) return hi;
    if ((g_lo > 0.0) == (g_hi > 0.0)) return std::nullopt;
    double a = std::log(lo);
    double b = std::log(hi);
    for (int i = 0; i < 200 && b - a > 1e-14; ++i) {
        const double mid = 0.5 * (a + b);
        const double g = gap(std::exp(mid));
        if (g == 0.0) return std::exp(mid);
        if ((g > 0.0) == (g_lo > 0.0)) {
            a = mid;
            g_lo = g;
        } else {
            b = mid;
        }
    }
    return std::exp(0.5 * (a + b));
}

double data_equivalence_factor(const PowerLaw& law1, const PowerLaw& law2) {
    validate(law1);
    validate(law2);
    if (std::abs(law1.p - law2.p) > kSharedExponentTolerance) {
        std::ostringstream os;
        os << "exponents differ (" << law1.p << " vs " << law2.p << ")";
        throw Error(ErrorKind::shared_exponent_required, os.str());
    }
    return std::pow(law1.alpha / law2.alpha, 1.0 / law1.p);
}

void validate(const McConfig& cfg) {
    if (!(cfg.noise_frac > 0.0) || !std::isfinite(cfg.noise_frac))
        throw Error(ErrorKind::domain, "noise_frac must be positive");
    if (cfg.n_reps < 2) throw Error(ErrorKind::domain, "n_reps must be at least 2");
}

std::vector<double> mc_exponents(std::span<const Observation> obs, const FitConfig& cfg_fit,
                                 const McConfig& cfg_mc) {
    validate(cfg_mc);
    validate(cfg_fit);
    // Surface precondition failures up front rather than once per replicate.
    (void)fit_single(obs, FitConfig{cfg_fit.loss_space, 1, cfg_fit.rel_tol, 0, cfg_fit.seed});

    std::vector<double> exponents;
    exponents.reserve(static_cast<std::size_t>(cfg_mc.n_reps));
    std::vector<Observation> noisy(obs.begin(), obs.end());
    for (int rep = 1; rep <= cfg_mc.n_reps; ++rep) {
        auto rng = stream_for(cfg_mc.seed, static_cast<std::uint64_t>(rep));
        bool drawn = false;
        for (int attempt = 0; attempt < kMaxRedraws && !drawn; ++attempt) {
            drawn = true;
            for (std::size_t i = 0; i < obs.size(); ++i) {
                noisy[i].loss = obs[i].loss * (1.0 + cfg_mc.noise_frac * rng.normal());
                if (!(noisy[i].loss > 0.0)) drawn = false;
            }
        }
        if (!drawn) {
            exponents.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const auto fit = fit_single(noisy, cfg_fit);
        exponents.push_back(fit.converged ? fit.law.p : std::numeric_limits<double>::quiet_NaN());
    }
    return exponents;
}

McSummary mc_uncertainty(std::span<const Observation> obs, const FitConfig& cfg_fit,
                         const McConfig& cfg_mc) {
    const auto all = mc_exponents(obs, cfg_fit, cfg_mc);
    std::vector<double> ps;
    std::copy_if(all.begin(), all.end(), std::back_inserter(ps), [](double p) { return !std::isnan(p); });
    if (ps.empty()) throw Error(ErrorKind::mc_failure, "no replicate converged");

    McSummary out;
    out.n_reps = cfg_mc.n_reps;
    out.n_converged = static_cast<int>(ps.size());
    const double n = static_cast<double>(ps.size());
    out.mean_p = std::accumulate(ps.begin(), ps.end(), 0.0) / n;
    double ss = 0.0;
    for (double p : ps) ss += (p - out.mean_p) * (p - out.mean_p);
    out.std_p = ps.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(ps.begin(), ps.end());
    out.quantiles = {quantile(ps, 0.05), quantile(ps, 0.50), quantile(ps, 0.95)};
    return out;
}

double predict(const AnyLaw& law, const LawQuery& query) {
    if (!(query.d_millions > 0.0)) throw Error(ErrorKind::domain, "dataset size must be positive");
    if (const auto* simple = std::get_if<PowerLaw>(&law)) {
        if (query.shape) throw Error(ErrorKind::schema, "model shape given for a data-only law");
        return eval_law(*simple, query.d_millions);
    }
    const auto& joint = std::get<JointLawParams>(law);
    if (!query.shape) throw Error(ErrorKind::schema, "joint law needs a model shape");
    return eval_joint_law(joint, query.shape->first, query.shape->second, query.d_millions);
}

}  // namespace datascale
