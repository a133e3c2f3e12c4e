#include <gtest/gtest.h>

#include "vrjp/beta_field.hpp"
#include "vrjp/experiments.hpp"
#include "vrjp/stats.hpp"

using namespace vrjp;

namespace {

WeightedGraph one_vertex(double eta, double w_self) {
    WeightedGraph g;
    g.add_vertex(VertexClass::plain, eta);
    if (w_self > 0.0) g.set_conductance(0, 0, w_self);
    return g;
}

WeightedGraph two_vertex() {
    WeightedGraph g;
    g.add_vertex(VertexClass::plain, 0.5);
    g.add_vertex(VertexClass::plain, 0.3);
    g.set_conductance(0, 1, 0.8);
    return g;
}

}  // namespace

// Reference values by adaptive quadrature of the IG density (mpmath, 30 digits).
TEST(InverseGaussian, MomentsMatchQuadrature) {
    EXPECT_NEAR(ig_moment(2, 1.0), 2.0, 1e-14);
    EXPECT_NEAR(ig_moment(3, 0.5), 19.0, 1e-13);
    EXPECT_NEAR(ig_moment(2, 0.5), 3.0, 1e-14);
    EXPECT_NEAR(ig_moment(3, 1.0), 7.0, 1e-14);
    EXPECT_NEAR(ig_moment(4, 0.7), 83.91545189504374453, 1e-11);
    EXPECT_EQ(ig_moment(1, 0.3), 1.0);
}

TEST(InverseGaussian, SamplerMeanAndVariance) {
    Stream rng(11, 0);
    for (double lambda : {0.5, 2.0}) {
        EstimatorSummary s, s2;
        for (int i = 0; i < 200000; ++i) {
            const double y = sample_ig(1.0, lambda, rng);
            ASSERT_GT(y, 0.0);
            s.add(y);
            s2.add((y - 1.0) * (y - 1.0));
        }
        EXPECT_TRUE(within_policy(z_score(s, 1.0))) << lambda;
        EXPECT_TRUE(within_policy(z_score(s2, 1.0 / lambda))) << lambda;
    }
}

// One-vertex law beta = w + x with x of density (2 pi x)^{-1/2} exp(-x/2 + eta - eta^2/(2x)).
TEST(LaplaceAnalytic, OneVertexMatchesQuadrature) {
    EXPECT_NEAR(laplace_analytic(one_vertex(0.7, 0.3), {0.4}), 0.70013137152186701671, 1e-14);
    EXPECT_NEAR(laplace_analytic(one_vertex(1.5, 0.0), {1.0}), 0.37988225336662371131, 1e-14);
    EXPECT_NEAR(laplace_analytic(one_vertex(0.0, 0.5), {0.8}), 0.61024587305065418525, 1e-14);
}

// Two-dimensional quadrature of the normalized density (scipy nquad).
TEST(LaplaceAnalytic, TwoVertexMatchesQuadrature) {
    EXPECT_NEAR(laplace_analytic(two_vertex(), {0.3, 0.6}), 0.4191521129922016, 1e-10);
}

TEST(LaplaceAnalytic, MarginalLawIsTheLaplaceWithZeros) {
    const WeightedGraph g = random_test_graph(6, 5, 0);
    const std::vector<int> A{0, 2, 3, 5};
    const WeightedGraph gA = marginal_params(g, A);
    Stream rng(5, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        std::vector<double> lam(g.size(), 0.0), lamA;
        for (int a : A) {
            lam[static_cast<std::size_t>(a)] = u(rng);
            lamA.push_back(lam[static_cast<std::size_t>(a)]);
        }
        EXPECT_NEAR(log_laplace_analytic(g, lam), log_laplace_analytic(gA, lamA), 1e-12);
    }
}

TEST(LogDensity, IntegratesToOneOnOneVertex) {
    // Trapezoid on x = beta - w under the substitution x = t^2.
    const WeightedGraph g = one_vertex(0.9, 0.2);
    double sum = 0.0;
    const double h = 1e-4;
    for (double t = h / 2; t < 12.0; t += h) {
        const double beta = 0.2 + t * t;
        sum += std::exp(log_density(g, {beta})) * 2.0 * t * h;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
    EXPECT_EQ(log_density(g, {0.1}), -std::numeric_limits<double>::infinity());
}

TEST(BetaSampler, OneVertexLawMatchesLaplace) {
    const WeightedGraph g = one_vertex(0.7, 0.3);
    EstimatorSummary s;
    Stream rng(3, 0);
    for (int i = 0; i < 100000; ++i) s.add(std::exp(-0.5 * 0.4 * sample_beta(g, rng).beta[0]));
    EXPECT_TRUE(within_policy(z_score(s, 0.70013137152186701671)));
}

TEST(BetaSampler, TwoVertexLawMatchesLaplace) {
    const WeightedGraph g = two_vertex();
    EstimatorSummary s;
    Stream rng(3, 1);
    for (int i = 0; i < 100000; ++i) {
        const auto b = sample_beta(g, rng).beta;
        s.add(std::exp(-0.5 * (0.3 * b[0] + 0.6 * b[1])));
    }
    EXPECT_TRUE(within_policy(z_score(s, 0.4191521129922016)));
}

TEST(BetaSampler, OrderDoesNotChangeTheLaw) {
    const WeightedGraph g = random_test_graph(6, 9, 3);
    std::vector<double> lam(g.size(), 0.0);
    for (int v : g.free_vertices()) lam[static_cast<std::size_t>(v)] = 0.1 * (v + 1);
    const double exact = laplace_analytic(g, lam);
    for (const std::vector<int>& order : {std::vector<int>{0, 1, 2, 3, 4, 5}, std::vector<int>{5, 3, 1, 0, 4, 2}}) {
        EstimatorSummary s;
        Stream rng(17, order[0]);
        for (int i = 0; i < 50000; ++i) {
            const auto b = sample_beta(g, rng, order).beta;
            double x = 0.0;
            for (int v : g.free_vertices()) x += lam[static_cast<std::size_t>(v)] * b[static_cast<std::size_t>(v)];
            s.add(std::exp(-0.5 * x));
        }
        EXPECT_TRUE(within_policy(z_score(s, exact))) << order[0];
    }
}

TEST(BetaSampler, InverseMeanIsOneOverEffectiveField) {
    // E[1/beta_i] = 1 / (eta_i + sum_j W_ij) for every vertex.
    const WeightedGraph g = build_box_lattice(2, 1, 1.0);
    BetaSampler sampler(g);
    std::vector<EstimatorSummary> s(sampler.vertices().size());
    Stream rng(23, 0);
    for (int i = 0; i < 50000; ++i) {
        const auto& b = sampler.sample_local(rng);
        for (std::size_t k = 0; k < b.size(); ++k) s[k].add(1.0 / b[k]);
    }
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_TRUE(within_policy(z_score(s[k], 1.0 / 4.0))) << k;
}

TEST(BetaSampler, PositiveDefiniteAndReproducible) {
    const WeightedGraph g = build_box_lattice(2, 2, 0.5);
    const auto V = g.free_vertices();
    for (int r = 0; r < 20; ++r) {
        Stream a(99, static_cast<std::uint64_t>(r)), b(99, static_cast<std::uint64_t>(r));
        const BetaField fa = sample_beta(g, a), fb = sample_beta(g, b);
        EXPECT_EQ(fa.beta.size(), g.size());
        for (int v : V) EXPECT_EQ(fa[v], fb[v]);
        EXPECT_FALSE(fa.has(*g.cemetery()));
        EXPECT_EQ(h_block(g, fa.beta, V).llt().info(), Eigen::Success);
        EXPECT_EQ(fa.seed_info.replicate, static_cast<std::uint64_t>(r));
    }
}

TEST(Conditioning, MatchesSchurComplementAndRestriction) {
    const WeightedGraph g = random_test_graph(7, 13, 0);
    Stream rng(13, 0);
    const BetaField beta = sample_beta(g, rng);
    const std::vector<int> U{1, 4};
    const auto spec = condition_params(g, beta.beta, U);
    EXPECT_EQ(spec.support, (std::vector<int>{0, 2, 3, 5, 6}));
    // Direct Schur complement of H on the support.
    const auto V = g.free_vertices();
    const Mat H = h_block(g, beta.beta, V);
    const Mat Huu = h_block(g, beta.beta, U);
    const Mat Wsu = w_block(g, spec.support, U);
    const Mat Wss = w_block(g, spec.support, spec.support);
    const Mat expect = Wss + Wsu * Huu.inverse() * Wsu.transpose();
    EXPECT_LT((spec.w_check - expect).cwiseAbs().maxCoeff(), 1e-12);
    (void)H;

    // Conditioning the marginal on a superset agrees with the full conditional.
    const std::vector<int> A{0, 1, 3, 4, 6};
    const auto posA = index_in(A, g.size());
    const auto viaA = condition_params(marginal_params(g, A), restrict_beta(beta.beta, A), {posA[1], posA[4]});
    std::vector<int> S;
    for (int s : viaA.support) S.push_back(A[static_cast<std::size_t>(s)]);
    const auto direct = marginal(spec, S);
    EXPECT_LT((viaA.w_check - direct.w_check).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((viaA.eta_check - direct.eta_check).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Conditioning, ResampleOutsideKeepsU) {
    const WeightedGraph g = build_box_lattice(2, 1, 1.0);
    Stream rng(31, 0);
    const BetaField beta = sample_beta(g, rng);
    const std::vector<int> U{0, 4, 8};
    Stream r2(31, 1);
    const BetaField b2 = resample_outside(g, beta, U, r2);
    for (int u : U) EXPECT_EQ(b2[u], beta[u]);
    for (int v : g.free_vertices()) EXPECT_TRUE(b2.has(v));
    EXPECT_EQ(h_block(g, b2.beta, g.free_vertices()).llt().info(), Eigen::Success);
}

TEST(BetaSampler, RejectsBadInput) {
    Stream rng(1, 0);
    EXPECT_THROW(sample_beta_single(-1.0, 1.0, rng), std::invalid_argument);
    const WeightedGraph g = build_box_lattice(1, 1, 1.0);
    EXPECT_THROW(sample_beta(g, rng, std::vector<int>{0, 0, 1}), std::invalid_argument);
    EXPECT_THROW(sample_beta(g, rng, std::vector<int>{0, 1, 3}), std::invalid_argument);
    EXPECT_THROW(laplace_analytic(g, {1.0}), std::invalid_argument);
}
