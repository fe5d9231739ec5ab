#include "rescast/error.hpp"
#include "rescast/metrics.hpp"
#include "rescast/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace rescast;
using namespace rescast::metrics;

TEST_CASE("evaluate identity") {
    const std::vector<double> a{1.5, 2.5, -3.0};
    const EvaluationReport r = evaluate(a, a);
    CHECK(r.mae == 0.0);
    CHECK(r.mse == 0.0);
    CHECK(r.rmse == 0.0);
    CHECK(r.mape_percent == 0.0);
    CHECK(*r.nrmse_mean == 0.0);
    CHECK(r.n == 3);
}

TEST_CASE("evaluate single point") {
    const EvaluationReport r = evaluate(std::vector<double>{100}, std::vector<double>{110});
    CHECK(r.mae == doctest::Approx(10).epsilon(1e-15));
    CHECK(r.mse == doctest::Approx(100).epsilon(1e-15));
    CHECK(r.rmse == doctest::Approx(10).epsilon(1e-15));
    CHECK(r.mape_percent == doctest::Approx(10).epsilon(1e-15));
    CHECK(*r.nrmse_mean == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("evaluate three points by hand") {
    const EvaluationReport r = evaluate(std::vector<double>{1, 2, 4}, std::vector<double>{2, 2, 2});
    CHECK(std::abs(r.mae - 1.0) <= 1e-12);
    CHECK(std::abs(r.mse - 5.0 / 3.0) <= 1e-12);
    CHECK(std::abs(r.rmse - std::sqrt(5.0 / 3.0)) <= 1e-12);
    CHECK(std::abs(r.mape_percent - 50.0) <= 1e-12);
    CHECK(std::abs(*r.nrmse_mean - std::sqrt(5.0 / 3.0) / (7.0 / 3.0)) <= 1e-12);
}

TEST_CASE("MAPE skips near-zero actuals") {
    const EvaluationReport r =
        evaluate(std::vector<double>{0.0, 2.0, 4.0}, std::vector<double>{1.0, 3.0, 4.0});
    CHECK(r.mape_skipped == 1);
    CHECK(r.mape_percent == doctest::Approx(25.0));
    CHECK(r.mae == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("NRMSE absent when the mean vanishes") {
    const EvaluationReport r = evaluate(std::vector<double>{-1, 1}, std::vector<double>{0, 0});
    CHECK_FALSE(r.nrmse_mean.has_value());
    CHECK(to_json(r)["nrmse_mean"].is_null());
}

TEST_CASE("evaluate input errors") {
    CHECK_THROWS_AS(evaluate(std::vector<double>{}, std::vector<double>{}), Error);
    CHECK_THROWS_AS(evaluate(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
}

TEST_CASE("scale equivariance and metric ordering") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(25), p(25);
        for (int i = 0; i < 25; ++i) {
            a[i] = rng.uniform(10, 100);
            p[i] = a[i] + rng.normal() * 5;
        }
        const double c = rng.uniform(0.1, 50);
        std::vector<double> ac(a), pc(p);
        for (int i = 0; i < 25; ++i) {
            ac[i] *= c;
            pc[i] *= c;
        }
        const auto r = evaluate(a, p);
        const auto s = evaluate(ac, pc);
        CHECK(s.mae == doctest::Approx(c * r.mae).epsilon(1e-12));
        CHECK(s.rmse == doctest::Approx(c * r.rmse).epsilon(1e-12));
        CHECK(s.mse == doctest::Approx(c * c * r.mse).epsilon(1e-12));
        CHECK(s.mape_percent == doctest::Approx(r.mape_percent).epsilon(1e-12));
        CHECK(*s.nrmse_mean == doctest::Approx(*r.nrmse_mean).epsilon(1e-12));
        CHECK(r.rmse >= r.mae);
    }
}

TEST_CASE("report serialization") {
    EvaluationReport r = evaluate(std::vector<double>{1, 2, 4}, std::vector<double>{2, 2, 2});
    r.model_name = "esn";
    const auto j = to_json(r);
    std::vector<std::string> keys;
    for (const auto& item : j.items()) {
        keys.push_back(item.key());
    }
    CHECK(keys == std::vector<std::string>{"mae", "mse", "rmse", "mape_percent", "nrmse_mean", "n",
                                           "runtime_seconds", "model_name", "scale"});
    CHECK(j["scale"] == "raw");
    CHECK(j["runtime_seconds"].is_null());
    r.runtime_seconds = 0.5;
    CHECK(to_csv_row(r) ==
          "1,1.6666666666666667,1.2909944487358056,50,0.5532833351724881,3,0.5,esn,raw");
}

TEST_CASE("describe") {
    const DescriptiveStats flat = describe(std::vector<double>{1, 1, 1, 1});
    CHECK(flat.std == 0.0);
    CHECK_FALSE(flat.skewness.has_value());
    CHECK_FALSE(flat.kurtosis.has_value());
    CHECK_FALSE(flat.jarque_bera_p.has_value());

    const DescriptiveStats s = describe(std::vector<double>{1, 2, 3, 4, 5});
    CHECK(s.mean == 3.0);
    CHECK(s.median == 3.0);
    CHECK(s.std == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
    CHECK(std::abs(*s.skewness) <= 1e-15);
    CHECK(s.min == 1.0);
    CHECK(s.max == 5.0);

    // Reference values from an independent statistics package.
    const DescriptiveStats t = describe(std::vector<double>{1, 2, 3, 4, 10});
    CHECK(t.std == doctest::Approx(3.5355339059327378).epsilon(1e-14));
    CHECK(*t.skewness == doctest::Approx(1.1384199576606167).epsilon(1e-12));
    CHECK(*t.kurtosis == doctest::Approx(-0.212).epsilon(1e-12));
    CHECK(*t.jarque_bera_statistic == doctest::Approx(1.0893633333333337).epsilon(1e-12));
    CHECK(*t.jarque_bera_p == doctest::Approx(0.5800263956901164).epsilon(1e-12));
    CHECK(t.median == 3.0);
    CHECK(describe(std::vector<double>{4, 1, 3, 2}).median == 2.5);
}

TEST_CASE("Jarque-Bera accepts seeded normal draws") {
    Rng rng(20240101);
    std::vector<double> v(1000);
    for (double& x : v) {
        x = rng.normal();
    }
    CHECK(*describe(v).jarque_bera_p > 0.01);
}

TEST_CASE("welch_t_test") {
    const std::vector<double> a{1, 2, 3};
    const WelchResult same = welch_t_test(a, a);
    CHECK(same.t == 0.0);
    CHECK(same.p == 1.0);

    const WelchResult shifted = welch_t_test(a, std::vector<double>{11, 12, 13});
    CHECK(shifted.t < -10.0);
    CHECK(shifted.p < 0.01);

    // Reference statistics package, unequal-variance two-sided test.
    const WelchResult r = welch_t_test(std::vector<double>{2.1, 2.5, 1.9, 2.3},
                                       std::vector<double>{2.0, 2.6, 2.2, 2.4});
    CHECK(std::abs(r.t - -0.5477225575051642) <= 1e-6);
    CHECK(std::abs(r.p - 0.6036450565101377) <= 1e-6);
    CHECK(std::abs(r.df - 6.0) <= 1e-6);
}

TEST_CASE("welch_t_test degenerate inputs") {
    CHECK_THROWS_AS(welch_t_test(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(welch_t_test(std::vector<double>{1, 1}, std::vector<double>{2, 2}), Error);
}
