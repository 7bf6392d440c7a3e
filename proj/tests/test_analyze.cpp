#include "doctest.h"

#include "datascale/analyze.hpp"
#include "datascale/error.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace datascale;
using namespace datascale::testing;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected datascale::Error");
    return ErrorKind::io;
}

const PowerLaw kEncDec{1.969, 0.057, 0.285};

}  // namespace

TEST_CASE("asymptotic_loss") {
    CHECK(rel_err(asymptotic_loss(kEncDec), 0.870302137169261932) < 1e-14);
    CHECK(asymptotic_loss({5.0, 0.0, 0.3}) == 0.0);
    CHECK(asymptotic_loss({2.0, 1.0, 0.7}) == 2.0);
}

TEST_CASE("transition_point") {
    CHECK(rel_err(*transition_point(kEncDec), 17.5438596491228070) < 1e-14);
    CHECK_FALSE(transition_point({1.0, 0.0, 0.3}).has_value());
    CHECK(*transition_point({1.0, 1.0, 0.3}) == 1.0);
}

TEST_CASE("marginal_value") {
    CHECK(rel_err(marginal_value(kEncDec, 1.0), 0.539357795648219157) < 1e-14);
    CHECK(marginal_value({1.0, 0.0, 1.0}, 2.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(kind_of([] { marginal_value(kEncDec, 0.0); }) == ErrorKind::domain);

    SplitMix64 rng(31);
    for (int i = 0; i < 500; ++i) {
        const PowerLaw law{0.5 + 4.5 * rng.uniform(), 0.5 * rng.uniform(), 0.05 + 1.45 * rng.uniform()};
        const double d = std::exp(std::log(0.25) + rng.uniform() * std::log(4096.0));
        const double h = 1e-5 * d;
        const double fd = -central_difference([&](double x) { return eval_law(law, x); }, d, h);
        CHECK(rel_err(marginal_value(law, d), fd) < 1e-6);
    }
}

TEST_CASE("marginal value scales as D^-(1+p) when data-limited") {
    const PowerLaw law{2.0, 1e-9, 0.25};
    const double ratio = marginal_value(law, 1.0) / marginal_value(law, 16.0);
    CHECK(rel_err(ratio, std::pow(16.0, 1.25)) < 1e-6);
}

TEST_CASE("regime slopes cross at D = 1/C") {
    SplitMix64 rng(4);
    for (int i = 0; i < 100; ++i) {
        const PowerLaw law{0.5 + 4.5 * rng.uniform(), 0.001 + 0.5 * rng.uniform(), 0.05 + 0.9 * rng.uniform()};
        const double star = 1.0 / law.c;
        const auto s = regime_slopes(law, star);
        CHECK(std::abs(s.data_limited - s.capacity_limited) / std::abs(s.data_limited) < 1e-12);
        const auto cross = regime_crossing(law, 0.3 * star, 3.0 * star);
        REQUIRE(cross.has_value());
        CHECK(rel_err(*cross, star) < 1e-9);
    }
    CHECK_FALSE(regime_crossing({1.0, 0.0, 0.3}, 1.0, 10.0).has_value());
    CHECK_FALSE(regime_crossing({1.0, 0.1, 0.3}, 20.0, 100.0).has_value());
}

TEST_CASE("data_equivalence_factor") {
    const PowerLaw no_filter{2.501, 0.034, 0.278};
    const PowerLaw bicleaner{2.130, 0.064, 0.278};
    const double k = data_equivalence_factor(no_filter, bicleaner);
    CHECK(rel_err(k, 1.78173062233710065) < 1e-13);
    CHECK(data_equivalence_factor(bicleaner, bicleaner) == 1.0);

    // Data-limited regime: k times the unfiltered data matches the filtered curve.
    for (double d = 1e-4; d * 0.064 < 0.01; d *= 1.1) {
        const double gap = std::abs(eval_law(no_filter, k * d) - eval_law(bicleaner, d)) / eval_law(bicleaner, d);
        CHECK(gap < 0.01);
    }

    CHECK(kind_of([&] { data_equivalence_factor(no_filter, {2.1, 0.06, 0.3}); }) ==
          ErrorKind::shared_exponent_required);
}

TEST_CASE("predict dispatches on the law kind") {
    CHECK(predict(kEncDec, {8.0}) == eval_law(kEncDec, 8.0));
    const JointLawParams joint{1.0, 0.5, 1.0, 0.25, 0.25, 0.01};
    CHECK(predict(joint, {64.0, ModelShape{100'000'000, 100'000'000}}) ==
          eval_joint_law(joint, 100'000'000, 100'000'000, 64.0));
    CHECK(kind_of([&] { predict(kEncDec, {8.0, ModelShape{1, 1}}); }) == ErrorKind::schema);
    CHECK(kind_of([&] { predict(joint, {8.0}); }) == ErrorKind::schema);
    CHECK(kind_of([&] { predict(kEncDec, {0.0}); }) == ErrorKind::domain);
    CHECK(kind_of([&] { predict(kEncDec, {-3.0}); }) == ErrorKind::domain);
}

TEST_CASE("predict on a held-out shape tracks the generator") {
    const CapacityLaw fixed{2.0, 0.2, 0.3, 0.05};
    const JointLawParams truth{1.5, 0.3, fixed.beta, fixed.p_e, fixed.p_d, fixed.l_inf};
    const std::vector<ModelShape> shapes{{50'000'000, 80'000'000}, {200'000'000, 80'000'000},
                                         {50'000'000, 300'000'000}, {120'000'000, 40'000'000}};
    std::vector<Observation> obs;
    SplitMix64 rng(12);
    for (const auto& [ne, nd] : shapes)
        for (double d : doubling_grid(1, 512))
            obs.push_back({"m", d, eval_joint_law(truth, ne, nd, d) * (1.0 + 0.01 * rng.normal()), ne, nd});
    FitConfig cfg;
    const std::vector<ModelShape> hold{shapes[3]};
    const auto fit = fit_joint(obs, fixed, cfg, hold);
    double rms = 0;
    int n = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!fit.in_sample[i]) continue;
        rms += fit.residuals[i] * fit.residuals[i];
        ++n;
    }
    rms = std::sqrt(rms / n);
    for (double d : doubling_grid(1, 512)) {
        const double pred = predict(fit.params(fixed), {d, shapes[3]});
        const double gen = eval_joint_law(truth, shapes[3].first, shapes[3].second, d);
        CHECK(std::abs(std::log(pred) - std::log(gen)) < 3 * rms);
    }
}

TEST_CASE("mc_uncertainty") {
    const auto obs = curve(1.969, 0.057, 0.285, doubling_grid(1, 512));
    FitConfig cfg_fit;
    cfg_fit.n_restarts = 2;

    SUBCASE("two percent noise gives an exponent spread of about 0.02") {
        const auto s = mc_uncertainty(obs, cfg_fit, {0.02, 300, 7});
        CHECK(s.n_converged == 300);
        CHECK(s.std_p >= 0.01);
        CHECK(s.std_p <= 0.04);
        CHECK(s.quantiles[0] <= s.quantiles[1]);
        CHECK(s.quantiles[1] <= s.quantiles[2]);
        CHECK(std::abs(s.mean_p - 0.285) < 0.01);
    }
    SUBCASE("vanishing noise") {
        const auto s = mc_uncertainty(obs, cfg_fit, {1e-9, 20, 7});
        CHECK(s.std_p < 1e-5);
    }
    SUBCASE("reproducible and prefix-stable") {
        const auto a = mc_uncertainty(obs, cfg_fit, {0.02, 100, 9});
        const auto b = mc_uncertainty(obs, cfg_fit, {0.02, 100, 9});
        CHECK(a.mean_p == b.mean_p);
        CHECK(a.std_p == b.std_p);
        CHECK(a.quantiles == b.quantiles);

        const auto first = mc_exponents(obs, cfg_fit, {0.02, 50, 9});
        const auto all = mc_exponents(obs, cfg_fit, {0.02, 100, 9});
        for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i] == all[i]);

        const auto doubled = mc_uncertainty(obs, cfg_fit, {0.02, 200, 9});
        CHECK(std::abs(doubled.mean_p - a.mean_p) < 3 * a.std_p / std::sqrt(100.0));
    }
    SUBCASE("config validation") {
        CHECK(kind_of([&] { mc_uncertainty(obs, cfg_fit, {0.0, 10, 1}); }) == ErrorKind::domain);
        CHECK(kind_of([&] { mc_uncertainty(obs, cfg_fit, {0.02, 1, 1}); }) == ErrorKind::domain);
    }
    SUBCASE("no replicate converges") {
        FitConfig starved;
        starved.max_iters = 1;
        starved.n_restarts = 0;
        CHECK(kind_of([&] { mc_uncertainty(obs, starved, {0.02, 5, 1}); }) == ErrorKind::mc_failure);
    }
}
