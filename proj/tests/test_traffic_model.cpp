#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "flowsentry/traffic_model.hpp"
#include "oracle_normal.hpp"

using namespace flowsentry;

namespace {

IntervalSample sample_of(std::uint64_t n, double load) {
    IntervalSample s;
    s.window_start = 0;
    s.window_len = 300'000;
    s.active_flows = n;
    s.load_bps = load;
    return s;
}

std::vector<IntervalSample> linear_samples() {
    return {sample_of(100, 1000.0), sample_of(200, 2000.0), sample_of(400, 4000.0)};
}

}  // namespace

TEST_CASE("normal_quantile hits the landmark values") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_quantile(0.025) == doctest::Approx(-1.959964).epsilon(1e-6));
}

TEST_CASE("normal_quantile is antisymmetric") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> p_dist(1e-9, 0.5);
    for (int i = 0; i < 200; ++i) {
        const double p = p_dist(rng);
        CHECK(normal_quantile(1.0 - p) == doctest::Approx(-normal_quantile(p)).epsilon(1e-9));
    }
}

TEST_CASE("normal_quantile rejects arguments outside (0,1)") {
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(-0.1), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.1), std::domain_error);
}

TEST_CASE("normal_quantile agrees with the series-based oracle") {
    // The oracle itself first, against tabulated values.
    CHECK(oracle::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(oracle::normal_cdf(-6.0) == doctest::Approx(9.865876450377018e-10).epsilon(1e-9));
    CHECK(oracle::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));

    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        // Mix uniform draws with deep-tail probabilities.
        double p = i % 3 == 0 ? std::pow(10.0, -1.0 - 8.0 * uniform(rng)) : uniform(rng);
        if (p <= 0.0 || p >= 1.0) continue;
        if (i % 2 == 0) p = 1.0 - p;
        const double got = normal_quantile(p);
        const double want = oracle::normal_quantile(p);
        worst = std::max(worst, std::fabs(got - want));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("normal_quantile is strictly increasing") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> p_dist(1e-9, 1.0 - 1e-9);
    for (int i = 0; i < 300; ++i) {
        double a = p_dist(rng);
        double b = p_dist(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        CHECK(normal_quantile(a) < normal_quantile(b));
    }
}

TEST_CASE("round trip through the oracle CDF recovers p") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> p_dist(1e-6, 1.0 - 1e-6);
    for (int i = 0; i < 300; ++i) {
        const double p = p_dist(rng);
        CHECK(std::fabs(oracle::normal_cdf(normal_quantile(p)) - p) < 1e-6);
    }
}

TEST_CASE("exactly linear samples fit with zero dispersion") {
    const auto samples = linear_samples();
    const auto model = fit_model(samples, 0.05, 3);
    CHECK(model.b == 10.0);
    CHECK(model.k == 0.0);
    CHECK(model.fitted_on == 3);
    CHECK(model.quantile == doctest::Approx(1.959964).epsilon(1e-6));
}

TEST_CASE("fit errors distinguish empty from degenerate input") {
    std::vector<IntervalSample> empty_n(30, sample_of(0, 0.0));
    try {
        fit_model(empty_n, 0.05);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(e.kind() == FitError::Kind::DegenerateFit);
    }

    const auto few = linear_samples();
    try {
        fit_model(few, 0.05, 24);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(e.kind() == FitError::Kind::InsufficientData);
    }
}

TEST_CASE("band evaluates the confidence limits") {
    TrafficModel model;
    model.b = 10.0;
    model.k = 0.5;
    model.epsilon = 0.05;
    model.quantile = normal_quantile(1.0 - 0.05 / 2.0);

    SUBCASE("collapses at N = 0") {
        const auto limits = band(model, 0);
        CHECK(limits.lower == 0.0);
        CHECK(limits.upper == 0.0);
    }
    SUBCASE("collapses to the line for k = 0") {
        model.k = 0.0;
        const auto limits = band(model, 1234);
        CHECK(limits.lower == doctest::Approx(12340.0));
        CHECK(limits.upper == doctest::Approx(12340.0));
    }
    SUBCASE("matches the hand-computed value at N = 10000") {
        const auto limits = band(model, 10'000);
        CHECK(limits.upper == doctest::Approx(100'980.0).epsilon(1e-6));
        CHECK(limits.lower == doctest::Approx(99'020.018).epsilon(1e-6));
    }
    SUBCASE("upper limit grows strictly with N") {
        std::mt19937_64 rng(47);
        for (int i = 0; i < 200; ++i) {
            const std::uint64_t n = rng() % 100'000;
            CHECK(band(model, n).upper < band(model, n + 1).upper);
        }
    }
}

TEST_CASE("detect_anomalies finds maximal runs of at least m") {
    TrafficModel model;
    model.b = 10.0;
    model.k = 0.5;
    model.epsilon = 0.05;
    model.quantile = normal_quantile(0.975);
    const std::uint64_t n = 10'000;
    const double inside = 10.0 * n;
    const auto above = band(model, n).upper + 1.0;
    const auto below = band(model, n).lower - 1.0;

    SUBCASE("all inside, no events") {
        std::vector<IntervalSample> samples(10, sample_of(n, inside));
        CHECK(detect_anomalies(model, samples, 3).empty());
    }
    SUBCASE("a run of m-1 does not fire") {
        std::vector<IntervalSample> samples{sample_of(n, inside), sample_of(n, above),
                                            sample_of(n, above), sample_of(n, inside)};
        CHECK(detect_anomalies(model, samples, 3).empty());
    }
    SUBCASE("a run of m fires once with the first sample's direction") {
        std::vector<IntervalSample> samples{sample_of(n, inside), sample_of(n, below),
                                            sample_of(n, above), sample_of(n, below),
                                            sample_of(n, inside)};
        for (std::size_t i = 0; i < samples.size(); ++i)
            samples[i].window_start = static_cast<TimestampMs>(i) * 300'000;
        const auto events = detect_anomalies(model, samples, 3);
        REQUIRE(events.size() == 1);
        CHECK(events[0].run_length == 3);
        CHECK(events[0].direction == AnomalyDirection::Below);
        CHECK(events[0].window_start == 300'000);
        CHECK(events[0].samples.size() == 3);
    }
    SUBCASE("a run closed by the end of input still fires") {
        std::vector<IntervalSample> samples{sample_of(n, inside), sample_of(n, above),
                                            sample_of(n, above), sample_of(n, above)};
        const auto events = detect_anomalies(model, samples, 3);
        REQUIRE(events.size() == 1);
        CHECK(events[0].direction == AnomalyDirection::Above);
    }
}

TEST_CASE("band coverage converges to epsilon on model-true data") {
    // Samples drawn exactly from the fitted model's assumptions.
    const double b = 2000.0;
    const double k = 0.3;
    std::mt19937_64 rng(53);
    std::uniform_int_distribution<std::uint64_t> n_dist(20'000, 70'000);
    std::normal_distribution<double> z;
    std::vector<IntervalSample> samples;
    for (int i = 0; i < 4000; ++i) {
        const auto n = n_dist(rng);
        const double load =
            b * (static_cast<double>(n) + k * z(rng) * std::sqrt(static_cast<double>(n)));
        samples.push_back(sample_of(n, load));
    }
    const auto model = fit_model(samples, 0.05);
    std::size_t outside = 0;
    for (const auto& s : samples)
        if (outside_band(band(model, s.active_flows), s.load_bps)) ++outside;
    const double fraction = static_cast<double>(outside) / static_cast<double>(samples.size());
    CHECK(fraction > 0.03);
    CHECK(fraction < 0.07);
}

TEST_CASE("model text persistence round-trips") {
    const auto samples = linear_samples();
    auto model = fit_model(samples, 0.05, 3);
    model.fitted_at = 1'304'251'200'000;

    const auto parsed = parse_model(serialize_model(model));
    REQUIRE(parsed.has_value());
    CHECK(parsed->b == model.b);
    CHECK(parsed->k == model.k);
    CHECK(parsed->epsilon == model.epsilon);
    CHECK(parsed->quantile == model.quantile);
    CHECK(parsed->fitted_on == model.fitted_on);
    CHECK(parsed->fitted_at == model.fitted_at);

    CHECK(!parse_model("b gibberish\n"));
    CHECK(!parse_model(""));

    const std::string path = "test_model_roundtrip.txt";
    save_model(path, model);
    const auto loaded = load_model(path);
    REQUIRE(loaded.has_value());
    CHECK(loaded->b == model.b);
    std::remove(path.c_str());
}
