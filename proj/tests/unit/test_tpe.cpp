#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "haabsa/haabsa.hpp"

using namespace haabsa;

namespace {

SearchSpace unit_interval() { return {{{"x", 0.0, 1.0, Scale::Linear}}}; }

Trial ok(double x, double objective) { return {{x}, objective, TrialStatus::Ok}; }

/// Kolmogorov-Smirnov distance between a sample and Uniform[lo, hi].
double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = (xs[i] - lo) / (hi - lo);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

double integrate(const ParzenEstimator& p, double lo, double hi) {
    // Composite Simpson; kernels are at least 1% of the range wide.
    const std::size_t n = 200000;
    const double h = (hi - lo) / static_cast<double>(n);
    double acc = p.pdf(lo) + p.pdf(hi);
    for (std::size_t i = 1; i < n; ++i)
        acc += (i % 2 ? 4.0 : 2.0) * p.pdf(lo + h * static_cast<double>(i));
    return acc * h / 3.0;
}

} // namespace

TEST(Suggest, EmptyHistoryStaysInBounds) {
    const SearchSpace space = SearchSpace::training_defaults();
    Rng rng(1);
    for (int i = 0; i < 200; ++i)
        EXPECT_TRUE(space.contains(suggest(space, {}, TpeConfig{}, rng)));
}

TEST(Suggest, LogScaleStartupIsUniformInExponent) {
    const SearchSpace space{{{"lr", 1e-4, 1e-1, Scale::Log}}};
    Rng rng(2);
    std::vector<double> exponents, raw;
    for (int i = 0; i < 1000; ++i) {
        const double x = suggest(space, {}, TpeConfig{}, rng)[0];
        exponents.push_back(std::log10(x));
        raw.push_back(x);
    }
    // 1.95/sqrt(n) is the 0.1% critical value.
    EXPECT_LT(ks_uniform(exponents, -4.0, -1.0), 1.95 / std::sqrt(1000.0));
    EXPECT_GT(ks_uniform(raw, 1e-4, 1e-1), 1.95 / std::sqrt(1000.0));
}

TEST(Suggest, FollowsTheGoodCluster) {
    const SearchSpace space = unit_interval();
    History h;
    Rng setup(3);
    std::normal_distribution<double> jitter(0.0, 0.03);
    for (int i = 0; i < 5; ++i)
        observe(h, space, ok(std::clamp(0.2 + jitter(setup), 0.0, 1.0), 1.0));
    for (int i = 0; i < 15; ++i)
        observe(h, space, ok(std::clamp(0.8 + jitter(setup), 0.0, 1.0), 0.0));
    int closer = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const double x = suggest(space, h, TpeConfig{}, rng)[0];
        closer += std::abs(x - 0.2) < std::abs(x - 0.8);
    }
    EXPECT_GE(closer, 90);
}

TEST(Suggest, DeterministicGivenHistoryAndSeed) {
    const SearchSpace space = SearchSpace::training_defaults();
    History h;
    Rng fill(4);
    for (int i = 0; i < 12; ++i)
        observe(h, space, {sample_uniform(space, fill), static_cast<double>(i % 5), TrialStatus::Ok});
    Rng a(9), b(9);
    EXPECT_EQ(suggest(space, h, TpeConfig{}, a), suggest(space, h, TpeConfig{}, b));
}

TEST(Suggest, InvalidSpaceOrConfigIsConfigError) {
    Rng rng(1);
    EXPECT_THROW(suggest(SearchSpace{}, {}, TpeConfig{}, rng), ConfigError);
    EXPECT_THROW(suggest(SearchSpace{{{"x", 1.0, 1.0, Scale::Linear}}}, {}, TpeConfig{}, rng), ConfigError);
    EXPECT_THROW(suggest(SearchSpace{{{"x", 0.0, 1.0, Scale::Log}}}, {}, TpeConfig{}, rng), ConfigError);
    TpeConfig bad;
    bad.gamma = 1.0;
    EXPECT_THROW(suggest(unit_interval(), {}, bad, rng), ConfigError);
    bad = TpeConfig{};
    bad.startup_trials = 1;
    EXPECT_THROW(suggest(unit_interval(), {}, bad, rng), ConfigError);
}

TEST(SplitHistory, SizesAreCeilGammaN) {
    for (std::size_t n : {1u, 4u, 7u, 10u, 13u, 40u}) {
        for (double gamma : {0.1, 0.25, 0.5, 0.9}) {
            History h;
            for (std::size_t i = 0; i < n; ++i)
                h.push_back(ok(0.5, static_cast<double>((i * 7) % n)));
            h.push_back({{0.5}, 0.0, TrialStatus::Failed});
            const auto s = split_history(h, gamma);
            const auto expect = static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(n) - 1e-9));
            EXPECT_EQ(s.good.size(), expect) << "n=" << n << " gamma=" << gamma;
            EXPECT_EQ(s.bad.size(), n - expect);
            for (const Trial* g : s.good)
                for (const Trial* b : s.bad)
                    EXPECT_GE(g->objective, b->objective);
        }
    }
}

TEST(ParzenEstimator, IntegratesToOne) {
    const std::vector<std::vector<double>> cases{
        {}, {0.5}, {0.0, 1.0}, {0.2, 0.21, 0.22, 0.9}, {0.999, 0.001, 0.5, 0.5}};
    for (const auto& centers : cases) {
        const ParzenEstimator p(centers, 0.0, 1.0, 0.01);
        EXPECT_NEAR(integrate(p, 0.0, 1.0), 1.0, 1e-6);
    }
    const ParzenEstimator logp({std::log(1e-3), std::log(5e-2)}, std::log(1e-4), std::log(1e-1), 0.01);
    EXPECT_NEAR(integrate(logp, std::log(1e-4), std::log(1e-1)), 1.0, 1e-6);
}

TEST(ParzenEstimator, BandwidthIsWiderAdjacentGapWithFloor) {
    const ParzenEstimator p({0.1, 0.3, 0.35}, 0.0, 1.0, 0.01);
    EXPECT_DOUBLE_EQ(p.bandwidth(0), 0.2);
    EXPECT_DOUBLE_EQ(p.bandwidth(1), 0.2);
    EXPECT_DOUBLE_EQ(p.bandwidth(2), 0.65);
    const ParzenEstimator tight({0.5, 0.5, 0.5}, 0.0, 1.0, 0.01);
    EXPECT_DOUBLE_EQ(tight.bandwidth(1), 0.01);
}

TEST(ParzenEstimator, SamplesStayInsideBounds) {
    const ParzenEstimator p({0.0, 0.01}, 0.0, 1.0, 0.01);
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double x = p.sample(rng);
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
    }
}

TEST(Observe, AppendsAndAllowsDuplicates) {
    History h;
    observe(h, unit_interval(), ok(0.4, 1.0));
    EXPECT_EQ(h.size(), 1u);
    observe(h, unit_interval(), ok(0.4, 1.0));
    EXPECT_EQ(h.size(), 2u);
}

TEST(Observe, OutOfBoundsIsContractError) {
    History h;
    EXPECT_THROW(observe(h, unit_interval(), ok(1.5, 0.0)), ContractError);
    EXPECT_TRUE(h.empty());
}

TEST(Observe, BestReflectsNewOptimum) {
    History h;
    observe(h, unit_interval(), ok(0.1, 0.3));
    EXPECT_EQ(best_trial(h), 0u);
    observe(h, unit_interval(), {{0.2}, 0.9, TrialStatus::Failed});
    EXPECT_EQ(best_trial(h), 0u);
    observe(h, unit_interval(), ok(0.3, 0.7));
    EXPECT_EQ(best_trial(h), 2u);
}

TEST(Tune, BudgetOneRunsOneTrial) {
    int calls = 0;
    const auto r = tune(unit_interval(), [&](const Point&) { return ++calls, 0.5; }, 1, TpeConfig{}, 7);
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(r.history.size(), 1u);
    EXPECT_EQ(r.best, 0u);
    EXPECT_THROW(tune(unit_interval(), [](const Point&) { return 0.0; }, 0, TpeConfig{}, 7), ConfigError);
}

TEST(Tune, FailingObjectiveIsRecordedAndLoopContinues) {
    int calls = 0;
    const auto r = tune(
        unit_interval(),
        [&](const Point& p) -> double {
            ++calls;
            if (calls % 3 == 0)
                throw std::runtime_error("boom");
            if (calls % 5 == 0)
                return std::nan("");
            return -p[0];
        },
        15, TpeConfig{}, 8);
    EXPECT_EQ(r.history.size(), 15u);
    std::size_t failed = 0;
    for (const Trial& t : r.history)
        failed += t.status == TrialStatus::Failed;
    EXPECT_EQ(failed, 7u); // throws at 3,6,9,12,15; NaN at 5,10
}

TEST(Tune, DeterministicPerSeed) {
    auto f = [](const Point& p) { return -(p[0] - 0.3) * (p[0] - 0.3); };
    const auto a = tune(unit_interval(), f, 25, TpeConfig{}, 11);
    const auto b = tune(unit_interval(), f, 25, TpeConfig{}, 11);
    for (std::size_t i = 0; i < 25; ++i)
        EXPECT_EQ(a.history[i].point, b.history[i].point);
}

TEST(Tune, FindsOneDimensionalOptimum) {
    auto f = [](const Point& p) { return -(p[0] - 0.3) * (p[0] - 0.3); };
    const auto r = tune(unit_interval(), f, 60, TpeConfig{}, 12);
    EXPECT_NEAR(r.history[*r.best].point[0], 0.3, 0.05);
}

TEST(History, JsonLinesRoundTripAndResumeReplaysRun) {
    const SearchSpace space = SearchSpace::training_defaults();
    auto f = [](const Point& p) { return -std::abs(std::log10(p[0]) + 2.0) - p[3]; };
    const auto full = tune(space, f, 14, TpeConfig{}, 21);

    std::stringstream saved;
    const auto partial = tune(space, f, 9, TpeConfig{}, 21, {}, [&](const Trial& t, std::size_t i) {
        saved << trial_to_json(space, t, i).dump() << '\n';
    });
    const History loaded = load_history(saved, space);
    ASSERT_EQ(loaded.size(), 9u);
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_EQ(loaded[i].point, partial.history[i].point);
        EXPECT_EQ(loaded[i].objective, partial.history[i].objective);
    }
    const auto resumed = tune(space, f, 14, TpeConfig{}, 21, loaded);
    for (std::size_t i = 0; i < 14; ++i)
        EXPECT_EQ(resumed.history[i].point, full.history[i].point);
}

TEST(History, FailedTrialsPersistWithNullObjective) {
    const SearchSpace space = unit_interval();
    const auto j = trial_to_json(space, {{0.25}, 0.0, TrialStatus::Failed}, 3);
    EXPECT_TRUE(j["objective"].is_null());
    std::stringstream in(j.dump() + "\n");
    EXPECT_EQ(load_history(in, space)[0].status, TrialStatus::Failed);
}

TEST(History, MalformedOrOutOfSpaceLinesAreLocated) {
    const SearchSpace space = unit_interval();
    std::stringstream bad(trial_to_json(space, ok(0.5, 1.0), 0).dump() +
                          "\n{\"trial\":1,\"point\":{\"x\":2.0},\"objective\":1,\"status\":\"ok\"}\n");
    try {
        load_history(bad, space, "h.jsonl");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}
