#include <gtest/gtest.h>

#include <numeric>

#include "haabsa/haabsa.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace haabsa;

namespace {

std::vector<oracle::Vec> inputs(const Embedder& e, const std::vector<std::string>& tokens) {
    std::vector<oracle::Vec> out;
    for (const auto& t : tokens)
        out.push_back(fixtures::values(e.word_store()->lookup(t)));
    return out;
}

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

} // namespace

TEST(Encode, EmptyLeftContextGivesEmptySequence) {
    const auto split = fixtures::split(0, 2, 1);
    const auto e = fixtures::random_embedder({split}, 3, 1);
    const LcrRotModel m = fixtures::random_model(fixtures::config(3, 2, 1, 0), 2);
    Tape t;
    const EncodedSentence enc = encode(t, split, *e, m);
    EXPECT_TRUE(enc.left.empty());
    EXPECT_EQ(enc.target.size(), 2u);
    EXPECT_EQ(enc.right.size(), 1u);
    EXPECT_EQ(enc.target[0].value().size(), 4u);
}

TEST(Encode, ZeroParametersGiveZeroHiddenStates) {
    const auto split = fixtures::split(2, 2, 2);
    const auto e = fixtures::random_embedder({split}, 3, 1);
    const LcrRotModel m(fixtures::config(3, 2, 1, 0));
    Tape t;
    const EncodedSentence enc = encode(t, split, *e, m);
    for (const auto* part : {&enc.left, &enc.target, &enc.right})
        for (Var h : *part)
            EXPECT_EQ(h.value(), Tensor(4));
}

TEST(Encode, SingleTokenTargetMatchesCellOracle) {
    const auto split = fixtures::split(0, 1, 0);
    const auto e = fixtures::random_embedder({split}, 3, 4);
    const LcrRotModel m = fixtures::random_model(fixtures::config(3, 2, 1, 0), 5);
    Tape t;
    const EncodedSentence enc = encode(t, split, *e, m);
    const auto expect = oracle::bilstm(oracle::Weights(m), "target_lstm", inputs(*e, split.target));
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_NEAR(enc.target[0].value()[k], expect[0][k], 1e-12);
}

TEST(Encode, DimensionMismatchIsConfigError) {
    const auto split = fixtures::split(1, 1, 1);
    const auto e = fixtures::random_embedder({split}, 3, 1);
    const LcrRotModel m(fixtures::config(4, 2, 1, 0));
    Tape t;
    EXPECT_THROW(encode(t, split, *e, m), ConfigError);
}

TEST(Attend, SingletonGetsFullWeight) {
    Tape t;
    AttentionHead head("h", 2);
    head.weight.value = Tensor::matrix(2, 2, {0.3, -1, 2, 0.5});
    const std::vector<Var> hs{t.constant(Tensor::vector({0.4, -0.2}))};
    const auto a = attend(t, hs, t.constant(Tensor::vector({1, 1})), head);
    ASSERT_TRUE(a);
    EXPECT_EQ(a->scores.value(), Tensor::vector({1.0}));
    EXPECT_EQ(a->pooled.value(), hs[0].value());
}

TEST(Attend, IdenticalStatesSplitEvenly) {
    Tape t;
    AttentionHead head("h", 2);
    head.weight.value = Tensor::matrix(2, 2, {0.3, -1, 2, 0.5});
    const Tensor h = Tensor::vector({0.4, -0.2});
    const std::vector<Var> hs{t.constant(h), t.constant(h)};
    const auto a = attend(t, hs, t.constant(Tensor::vector({1, -1})), head);
    EXPECT_EQ(a->scores.value(), Tensor::vector({0.5, 0.5}));
    for (std::size_t k = 0; k < 2; ++k)
        EXPECT_NEAR(a->pooled.value()[k], h[k], 1e-15);
}

TEST(Attend, HandComputedTwoStates) {
    // One hidden unit per direction: states and query are 2-vectors.
    Tape t;
    AttentionHead head("h", 2);
    head.weight.value = Tensor::matrix(2, 2, {0.5, -0.25, 1.0, 2.0});
    head.bias.value = Tensor::vector({0.1});
    const std::vector<Var> hs{t.constant(Tensor::vector({1.0, 0.5})), t.constant(Tensor::vector({-0.5, 0.25}))};
    const Tensor q = Tensor::vector({0.2, -0.4});
    // W q = [0.5*0.2 + -0.25*-0.4, 1.0*0.2 + 2.0*-0.4] = [0.2, -0.6]
    const double f1 = std::tanh(1.0 * 0.2 + 0.5 * -0.6 + 0.1);  // tanh(0.0)
    const double f2 = std::tanh(-0.5 * 0.2 + 0.25 * -0.6 + 0.1); // tanh(-0.15)
    const double a1 = std::exp(f1) / (std::exp(f1) + std::exp(f2));
    const auto a = attend(t, hs, t.constant(q), head);
    EXPECT_NEAR(a->scores.value()[0], a1, 1e-12);
    EXPECT_NEAR(a->pooled.value()[0], a1 * 1.0 + (1 - a1) * -0.5, 1e-12);
    EXPECT_NEAR(a->pooled.value()[1], a1 * 0.5 + (1 - a1) * 0.25, 1e-12);
}

TEST(Attend, EmptySequenceSignalsAbsence) {
    Tape t;
    AttentionHead head("h", 2);
    EXPECT_FALSE(attend(t, {}, t.constant(Tensor(2)), head).has_value());
}

TEST(RotatoryHop, EmptyLeftGivesZeroVectorButTargetStillAttends) {
    const auto split = fixtures::split(0, 2, 2);
    const auto e = fixtures::random_embedder({split}, 2, 3);
    const LcrRotModel m = fixtures::random_model(fixtures::config(2, 1, 1, 0), 4);
    Tape t;
    const EncodedSentence enc = encode(t, split, *e, m);
    const Var q = mean_pool(enc.target);
    HopTrace trace;
    const FourVectors v = rotatory_hop(t, enc, q, q, m.rotatory, &trace);
    EXPECT_EQ(v[kLeft].value(), Tensor(2));
    EXPECT_TRUE(trace.left.empty());
    EXPECT_EQ(trace.target_left.size(), 2u);
    EXPECT_NEAR(total(trace.target_left), 1.0, 1e-12);
}

TEST(MultiHop, SingleHopMethodZeroEqualsOneRotatoryHopBitwise) {
    const auto split = fixtures::split(2, 2, 3);
    const auto e = fixtures::random_embedder({split}, 3, 7);
    const LcrRotModel m = fixtures::random_model(fixtures::config(3, 2, 1, 0), 8);
    Tape t;
    const EncodedSentence enc = encode(t, split, *e, m);
    const Var q = mean_pool(enc.target);
    const FourVectors once = rotatory_hop(t, enc, q, q, m.rotatory);
    const FourVectors looped = multi_hop(t, enc, m);
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_EQ(once[i].value(), looped[i].value());
}

TEST(MultiHop, TwoHopsEqualManualChain) {
    const auto split = fixtures::split(2, 1, 2);
    const auto e = fixtures::random_embedder({split}, 2, 9);
    const LcrRotModel m = fixtures::random_model(fixtures::config(2, 1, 2, 0), 10);
    Tape t;
    const EncodedSentence enc = encode(t, split, *e, m);
    const Var q = mean_pool(enc.target);
    const FourVectors h1 = rotatory_hop(t, enc, q, q, m.rotatory);
    const FourVectors h2 = rotatory_hop(t, enc, h1[kTargetLeft], h1[kTargetRight], m.rotatory);
    const FourVectors looped = multi_hop(t, enc, m);
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_EQ(h2[i].value(), looped[i].value());
}

TEST(HierarchicalRescale, MethodZeroIsIdentity) {
    Tape t;
    const FourVectors v{t.constant(Tensor::vector({1, 2})), t.constant(Tensor::vector({3, 4})),
                        t.constant(Tensor::vector({5, 6})), t.constant(Tensor::vector({7, 8}))};
    const FourVectors out = hierarchical_rescale(t, v, HierarchyMethod::None, HierarchicalParams{});
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_EQ(out[i].id, v[i].id);
}

TEST(HierarchicalRescale, AllIdenticalUnderMethodOneQuarterEach) {
    Rng rng(3);
    HierarchicalParams p(HierarchyMethod::FinalAll, 3);
    p.groups[0].weight.value.fill_uniform(1.0, rng);
    p.groups[0].bias.value.fill_uniform(1.0, rng);
    Tape t;
    const Tensor h = Tensor::vector({0.7, -0.1, 0.4});
    const FourVectors v{t.constant(h), t.constant(h), t.constant(h), t.constant(h)};
    std::vector<double> alphas;
    const FourVectors out = hierarchical_rescale(t, v, HierarchyMethod::FinalAll, p, &alphas);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(alphas[i], 0.25, 1e-12);
        for (std::size_t k = 0; k < 3; ++k)
            EXPECT_NEAR(out[i].value()[k], 0.25 * h[k], 1e-12);
    }
}

TEST(HierarchicalRescale, IdenticalPairsUnderMethodThreeHalfEach) {
    Rng rng(4);
    HierarchicalParams p(HierarchyMethod::FinalPairs, 2);
    for (auto& g : p.groups) {
        g.weight.value.fill_uniform(1.0, rng);
        g.bias.value.fill_uniform(1.0, rng);
    }
    Tape t;
    const Tensor c = Tensor::vector({0.2, 0.9}), g = Tensor::vector({-0.6, 0.3});
    const FourVectors v{t.constant(c), t.constant(c), t.constant(g), t.constant(g)};
    std::vector<double> alphas;
    hierarchical_rescale(t, v, HierarchyMethod::FinalPairs, p, &alphas);
    for (double a : alphas)
        EXPECT_NEAR(a, 0.5, 1e-12);
}

TEST(HierarchicalRescale, WrongGroupCountIsConfigError) {
    Tape t;
    const Tensor h = Tensor::vector({1.0});
    const FourVectors v{t.constant(h), t.constant(h), t.constant(h), t.constant(h)};
    EXPECT_THROW(hierarchical_rescale(t, v, HierarchyMethod::FinalPairs, HierarchicalParams(HierarchyMethod::FinalAll, 1)),
                 ConfigError);
}

TEST(Forward, ZeroHeadGivesUniform) {
    const auto split = fixtures::split(2, 1, 2);
    const auto e = fixtures::random_embedder({split}, 3, 1);
    LcrRotModel m = fixtures::random_model(fixtures::config(3, 2, 2, 4), 2);
    m.head.weight.value.set_zero();
    m.head.bias.value.set_zero();
    const Tensor p = predict_proba(split, *e, m);
    for (double x : p.values())
        EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
    EXPECT_EQ(predict(split, *e, m), 0u);
}

TEST(Forward, MatchesOracleForEveryMethod) {
    const auto split = fixtures::split(3, 2, 1);
    const auto e = fixtures::random_embedder({split}, 3, 11);
    for (int method = 0; method <= 4; ++method) {
        for (std::size_t hops : {1u, 3u}) {
            const LcrRotModel m = fixtures::random_model(fixtures::config(3, 2, hops, method), 20 + method);
            const Tensor got = predict_proba(split, *e, m);
            const auto want =
                oracle::forward(m, inputs(*e, split.left), inputs(*e, split.target), inputs(*e, split.right));
            EXPECT_NEAR(std::accumulate(got.values().begin(), got.values().end(), 0.0), 1.0, 1e-12);
            for (std::size_t k = 0; k < 3; ++k)
                EXPECT_NEAR(got[k], want[k], 1e-12) << "method " << method << " hops " << hops;
        }
    }
}

TEST(Forward, HeadBiasShiftKeepsArgmax) {
    const auto split = fixtures::split(2, 2, 2);
    const auto e = fixtures::random_embedder({split}, 3, 12);
    LcrRotModel m = fixtures::random_model(fixtures::config(3, 2, 2, 3), 13);
    const std::size_t before = predict(split, *e, m);
    for (double& b : m.head.bias.value.values())
        b += 5.0;
    EXPECT_EQ(predict(split, *e, m), before);
}

TEST(Forward, MethodZeroIgnoresHierarchicalParameters) {
    const auto split = fixtures::split(2, 2, 2);
    const auto e = fixtures::random_embedder({split}, 3, 14);
    LcrRotModel m = fixtures::random_model(fixtures::config(3, 2, 3, 0), 15);
    const Tensor before = predict_proba(split, *e, m);
    Rng rng(16);
    m.hierarchical = HierarchicalParams(HierarchyMethod::EachHopPairs, m.width());
    for (auto& g : m.hierarchical.groups) {
        g.weight.value.fill_uniform(5.0, rng);
        g.bias.value.fill_uniform(5.0, rng);
    }
    EXPECT_EQ(predict_proba(split, *e, m), before);
}

TEST(Forward, TrainingModeWithoutDropoutMatchesInference) {
    const auto split = fixtures::split(1, 2, 1);
    const auto e = fixtures::random_embedder({split}, 3, 17);
    const LcrRotModel m = fixtures::random_model(fixtures::config(3, 2, 2, 2), 18);
    Tape t;
    Rng rng(1);
    ForwardOptions opts;
    opts.mode = Mode::Train;
    opts.rng = &rng;
    EXPECT_EQ(forward(t, split, *e, m, opts).value(), predict_proba(split, *e, m));
}

TEST(GradientCheck, FullModelMethodFourTinyDims) {
    const auto split = fixtures::split(2, 2, 2);
    const auto e = fixtures::random_embedder({split}, 2, 19);
    LcrRotModel m = fixtures::random_model(fixtures::config(2, 2, 2, 4), 20, 0.5);
    const auto params = m.parameters();
    const std::vector<const Parameter*> cparams(params.begin(), params.end());
    auto build = [&](Tape& t) { return loss(t, forward(t, split, *e, m), 1, cparams, 1e-3); };
    EXPECT_LE(gradient_check(build, params).max_relative_error, 1e-4);
}

TEST(GradientCheck, ElmoMixingWeightsInsideModel) {
    Corpus c;
    c.sentences.push_back(fixtures::sentence("s", "a b c d", 1, 3));
    auto store = std::make_shared<ContextualStore>(3, 2);
    Rng rng(21);
    for (std::size_t tok = 0; tok < 4; ++tok) {
        std::vector<Tensor> layers(3, Tensor(2));
        for (auto& l : layers)
            l.fill_uniform(1.0, rng);
        store->insert("s", tok, layers);
    }
    const Embedder e = Embedder::contextual(store, Combiner::Elmo);
    auto cfg = fixtures::config(2, 1, 1, 1);
    cfg.elmo_layers = 3;
    LcrRotModel m = fixtures::random_model(cfg, 22, 0.7);
    const SplitSentence split = split_around_target(c.sentences[0]);
    const auto params = m.parameters();
    const std::vector<const Parameter*> cparams(params.begin(), params.end());
    auto build = [&](Tape& t) { return loss(t, forward(t, split, e, m), 2, cparams, 0.0); };
    const auto report = gradient_check(build, params);
    EXPECT_LE(report.max_relative_error, 1e-4);
    EXPECT_EQ(report.parameters.back().name, "elmo.gamma");
}

TEST(AttentionTrace, SingleContextTokenScoresOne) {
    const auto split = fixtures::split(1, 2, 0);
    const auto e = fixtures::random_embedder({split}, 2, 23);
    const LcrRotModel m = fixtures::random_model(fixtures::config(2, 1, 2, 0), 24);
    const AttentionTrace tr = attention_trace(split, *e, m);
    for (const HopTrace& h : tr.hops)
        EXPECT_EQ(h.left, (std::vector<double>{1.0}));
}

TEST(AttentionTrace, StructureFollowsSplitAndMethod) {
    const auto split = fixtures::split(3, 2, 4);
    const auto e = fixtures::random_embedder({split}, 2, 25);
    for (int method = 0; method <= 4; ++method) {
        const LcrRotModel m = fixtures::random_model(fixtures::config(2, 2, 3, method), 26);
        const AttentionTrace tr = attention_trace(split, *e, m);
        ASSERT_EQ(tr.hops.size(), 3u);
        for (const HopTrace& h : tr.hops) {
            EXPECT_EQ(h.left.size(), 3u);
            EXPECT_EQ(h.target_left.size(), 2u);
            EXPECT_EQ(h.target_right.size(), 2u);
            EXPECT_EQ(h.right.size(), 4u);
            for (const auto* s : {&h.left, &h.right, &h.target_left, &h.target_right})
                EXPECT_NEAR(total(*s), 1.0, 1e-12);
            EXPECT_EQ(h.hierarchical.size(), method == 2 || method == 4 ? 4u : 0u);
        }
        EXPECT_EQ(tr.final_hierarchical.size(), method == 1 || method == 3 ? 4u : 0u);
    }
}

TEST(ModelConfig, Validation) {
    auto c = fixtures::config(2, 2, 0, 0);
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(hierarchy_method(5), ConfigError);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
    const auto split = fixtures::split(2, 1, 2);
    const auto e = fixtures::random_embedder({split}, 3, 27);
    const LcrRotModel m = fixtures::random_model(fixtures::config(3, 2, 2, 3), 28);
    const LcrRotModel back = checkpoint_from_json(nlohmann::json::parse(checkpoint_to_json(m).dump()));
    EXPECT_EQ(predict_proba(split, *e, back), predict_proba(split, *e, m));
}

TEST(Checkpoint, MissingParameterIsValidationError) {
    const LcrRotModel m(fixtures::config(2, 1, 1, 1));
    auto j = checkpoint_to_json(m);
    j["parameters"].erase("hier.0.W");
    EXPECT_THROW(checkpoint_from_json(j), ValidationError);
}
