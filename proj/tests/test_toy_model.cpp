#include <gtest/gtest.h>

#include <sstream>

#include "vrjp/toy_model.hpp"

using namespace vrjp;

TEST(Chain, PsiIsTheProductOfTheMixingVariables) {
    Stream rng(1, 0);
    for (int ell = 0; ell <= 8; ++ell)
        for (int r = 0; r < 200; ++r) {
            const ChainIdentity c = chain_partition_identity(ell, 0.5, 1.0, rng);
            ASSERT_EQ(c.A.size(), static_cast<std::size_t>(ell + 1));
            ASSERT_EQ(c.beta.size(), static_cast<std::size_t>(ell + 1));
            EXPECT_LT(c.relative_difference, 1e-12) << ell;
        }
}

TEST(Chain, EliminationMatchesTheGenericSolve) {
    const WeightedGraph g = build_chain_graph(4, 0.7, 1.3);
    Stream rng(2, 0);
    for (int r = 0; r < 20; ++r) {
        const BetaField b = sample_beta(g, rng);
        const std::vector<double> field(b.beta.begin(), b.beta.begin() + 5);
        const double direct = solve_psi(g, b.beta, g.free_vertices())(0);
        EXPECT_NEAR(chain_psi0(field, 0.7, 1.3), direct, 1e-12 * direct);
    }
    EXPECT_THROW(build_chain_graph(-1, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(build_chain_graph(2, 0.0, 1.0), std::invalid_argument);
}

TEST(ToyMoments, ClosedForm) {
    ToyMomentSpec s;
    s.p = 2;
    s.k = 2;
    s.m = 1;
    s.epsilon = 0.5;
    s.eta0 = 1.0;
    EXPECT_EQ(s.chain_length(), 6);
    EXPECT_NEAR(s.closed_form(), std::pow(3.0, 6) * 2.0, 1e-9);
    s.p = 3;
    s.k = 1;
    s.m = 0;
    EXPECT_NEAR(s.closed_form(), 19.0 * 7.0, 1e-10);
}

TEST(ToyMoments, MonteCarloAgreesWithClosedForm) {
    ToyMomentSpec s;
    s.p = 2;
    s.k = 1;
    s.m = 0;
    s.epsilon = 1.0;
    s.eta0 = 1.0;
    const ToyMomentResult r = toy_moment_check(s, 200000, 3);
    EXPECT_DOUBLE_EQ(r.closed_form, 4.0);
    EXPECT_TRUE(within_policy(r.z)) << r.estimate;
    const ToyMomentResult mom = toy_moment_check(s, 200000, 3, 1, kToyBuckets);
    EXPECT_TRUE(mom.median_of_means);
    EXPECT_EQ(mom.buckets, kToyBuckets);
    EXPECT_TRUE(within_policy(mom.z)) << mom.estimate;
}

TEST(WeightSampler, FormsAndErrors) {
    Stream rng(4, 0);
    EXPECT_EQ(WeightSampler::point(2.5)(rng), 2.5);
    const auto u = WeightSampler::uniform(1.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng);
        EXPECT_GE(x, 1.0);
        EXPECT_LT(x, 2.0);
    }
    std::istringstream ok("# weights\n0.5\n\n2\n");
    const auto e = WeightSampler::empirical(ok);
    EXPECT_EQ(e.values, (std::vector<double>{0.5, 2.0}));
    std::istringstream bad("1\n-2\n");
    EXPECT_THROW(WeightSampler::empirical(bad), ConfigError);
    EXPECT_THROW(WeightSampler::point(0.0), std::invalid_argument);
    EXPECT_THROW(WeightSampler::uniform(2.0, 1.0), std::invalid_argument);
}

TEST(UniformBound, LargeSideWeightsStopAtOnce) {
    // Every side weight is at least eta0, so K = 0 on every draw.
    const auto t = toy_uniform_bound_experiment({2, 4}, 0, 1.0, WeightSampler::point(2.0), 1.0,
                                                toy_epsilon0(2, 0, 1.0), 2, 4000, 6);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_DOUBLE_EQ(t.c1, 2.0);
    EXPECT_DOUBLE_EQ(t.bound, 4.0);
    EXPECT_EQ(t.small_mass, 0.0);
    EXPECT_TRUE(t.assertable);
    EXPECT_TRUE(t.below_bound);
    for (const auto& row : t.rows) {
        EXPECT_DOUBLE_EQ(row.k_tail.at(0).mean, 1.0);
        if (row.k_tail.size() > 1) { EXPECT_DOUBLE_EQ(row.k_tail.at(1).mean, 0.0); }
    }
    EXPECT_DOUBLE_EQ(toy_epsilon0(2, 0, 1.0), 0.25);
    EXPECT_THROW(toy_uniform_bound_experiment({}, 0, 1.0, WeightSampler::point(2.0), 1.0, 0.25, 2, 10, 1),
                 std::invalid_argument);
}

TEST(ComparisonChain, NeverRaisesAConductance) {
    const ComparisonChain c = build_comparison_chain(2, 3, 1, 2.0, 0.5);
    ASSERT_EQ(c.stages.size(), 4u);
    const int n0 = static_cast<int>(c.stages[0].size());
    EXPECT_EQ(c.stages[2].size(), c.stages[0].size() + 7);
    for (std::size_t j = 0; j + 1 < c.stages.size(); ++j)
        for (int u = 0; u < n0; ++u)
            for (int v = 0; v < n0; ++v)
                EXPECT_LE(c.stages[j + 1].conductance(u, v), c.stages[j].conductance(u, v) + 1e-15) << j;
    EXPECT_THROW(build_comparison_chain(1, 3, 1, 2.0, 0.5), std::invalid_argument);
    EXPECT_THROW(build_comparison_chain(2, 3, 1, 1.0, 0.5), std::invalid_argument);
}

TEST(ConvexOrder, SmallChainIsMonotone) {
    const auto res = convex_order_chain_test(2, 3, 1, 2.0, 0.5, {ConvexFunction::square, ConvexFunction::identity},
                                             2000, 7, 2);
    ASSERT_EQ(res.size(), 2u);
    for (const auto& r : res) {
        EXPECT_TRUE(r.monotone()) << to_string(r.f);
        ASSERT_EQ(r.stage.size(), 4u);
        for (const auto& s : r.stage) EXPECT_EQ(s.n, 2000u);
    }
    // psi has mean one on every stage.
    for (const auto& s : res[1].stage) EXPECT_TRUE(within_policy(z_score(s, 1.0)));
}
