#include <gtest/gtest.h>

#include <functional>

#include "vrjp/beta_field.hpp"
#include "vrjp/experiments.hpp"
#include "vrjp/schrodinger.hpp"
#include "vrjp/stats.hpp"

using namespace vrjp;

namespace {

// Explicit depth-first enumeration of the weighted paths. Every visited vertex
// of U contributes 1/beta, every step its conductance.
double enumerate_exit_paths(const WeightedGraph& g, const std::vector<double>& beta, const std::vector<int>& U, int x,
                            int max_steps) {
    const auto pos = index_in(U, g.size());
    std::function<double(int, int)> walk = [&](int v, int steps) {
        const double inv = 1.0 / beta[static_cast<std::size_t>(v)];
        double out = g.eta(v);
        for (const auto& nb : g.neighbors(v))
            if (pos[nb.v] < 0) out += nb.w;
        out *= inv;
        if (steps < max_steps) {
            if (g.self_loop(v) > 0.0) out += inv * g.self_loop(v) * walk(v, steps + 1);
            for (const auto& nb : g.neighbors(v))
                if (pos[nb.v] >= 0) out += inv * nb.w * walk(nb.v, steps + 1);
        }
        return out;
    };
    return walk(x, 0);
}

double enumerate_green_paths(const WeightedGraph& g, const std::vector<double>& beta, const std::vector<int>& U, int x,
                             int y, int max_steps) {
    const auto pos = index_in(U, g.size());
    std::function<double(int, int)> walk = [&](int v, int steps) {
        const double inv = 1.0 / beta[static_cast<std::size_t>(v)];
        double out = v == y ? inv : 0.0;
        if (steps < max_steps) {
            for (const auto& nb : g.neighbors(v))
                if (pos[nb.v] >= 0) out += inv * nb.w * walk(nb.v, steps + 1);
        }
        return out;
    };
    return walk(x, 0);
}

}  // namespace

TEST(Green, TwoByTwoClosedForm) {
    WeightedGraph g;
    g.add_vertex(VertexClass::plain, 0.5);
    g.add_vertex(VertexClass::plain, 0.3);
    g.set_conductance(0, 1, 0.8);
    const std::vector<double> beta{1.7, 2.1};
    const Mat G = green(g, beta, {0, 1});
    const double det = 1.7 * 2.1 - 0.64;
    EXPECT_NEAR(G(0, 0), 2.1 / det, 1e-15);
    EXPECT_NEAR(G(1, 1), 1.7 / det, 1e-15);
    EXPECT_NEAR(G(0, 1), 0.8 / det, 1e-15);
    EXPECT_EQ(G(0, 1), G(1, 0));
    // psi = G eta_hat, eta_hat = eta on a graph without exterior.
    const Vec p = solve_psi(g, beta, {0, 1});
    EXPECT_NEAR(p(0), (2.1 * 0.5 + 0.8 * 0.3) / det, 1e-15);
    EXPECT_NEAR(p(1), (0.8 * 0.5 + 1.7 * 0.3) / det, 1e-15);
}

TEST(Green, SingularBlockIsDegenerate) {
    WeightedGraph g;
    g.add_vertex(VertexClass::plain);
    g.add_vertex(VertexClass::plain);
    g.set_conductance(0, 1, 1.0);
    EXPECT_THROW(green(g, {1.0, 1.0}, {0, 1}), DegenerateError);
    try {
        green(g, {1.0, 1.0 + 1e-14}, {0, 1});
        FAIL() << "expected a pivot failure";
    } catch (const DegenerateError& e) {
        EXPECT_EQ(e.vertex(), 1);
    }
}

TEST(PathSum, MatchesExplicitEnumeration) {
    const WeightedGraph g = build_box_lattice(2, 1, 1.0);
    Stream rng(7, 0);
    BetaField beta = sample_beta(g, rng);
    const std::vector<int> U{*g.find({0, 0}), *g.find({1, 0}), *g.find({1, 1}), *g.find({0, 1})};
    const int x = U[0];
    for (int L : {1, 2, 5, 8}) {
        const PathSum p = path_sum_oracle(g, beta, U, x, PathTarget::exterior(), L);
        EXPECT_NEAR(p.value, enumerate_exit_paths(g, beta.beta, U, x, L - 1), 1e-13) << L;
        const PathSum q = path_sum_oracle(g, beta, U, x, PathTarget::at_vertex(U[2]), L);
        EXPECT_NEAR(q.value, enumerate_green_paths(g, beta.beta, U, x, U[2], L), 1e-13) << L;
    }
}

TEST(PathSum, ConvergesToPsiAndGreenWithinTailBound) {
    const WeightedGraph g = random_test_graph(6, 21, 0);
    Stream rng(21, 0);
    const BetaField beta = sample_beta(g, rng);
    const std::vector<int> U{0, 1, 2, 4};
    const PolymerSolve s = psi(g, beta, U);
    const auto pos = index_in(U, g.size());
    for (int x : U) {
        const PathSum p = path_sum_oracle(g, beta, U, x, PathTarget::exterior(), 400);
        if (p.spectral_radius > 0.95) continue;
        EXPECT_LE(std::abs(p.value - s.psi[static_cast<std::size_t>(x)]), p.tail_bound + 1e-12);
        EXPECT_NEAR(p.value, s.psi[static_cast<std::size_t>(x)], 1e-10);
        const PathSum q = path_sum_oracle(g, beta, U, x, PathTarget::at_vertex(4), 400);
        EXPECT_NEAR(q.value, s.green(pos[x], pos[4]), 1e-10);
    }
    EXPECT_THROW(path_sum_oracle(g, beta, U, 0, PathTarget::exterior(), -1), std::invalid_argument);
}

TEST(PathSum, RefusesLargeDomains) {
    const WeightedGraph g = build_box_lattice(2, 2, 1.0);
    Stream rng(1, 0);
    const BetaField beta = sample_beta(g, rng);
    EXPECT_THROW(path_sum_oracle(g, beta, g.free_vertices(), *g.root(), PathTarget::exterior(), 5), OracleInapplicable);
    EXPECT_NO_THROW(path_sum_oracle(g, beta, g.free_vertices(), *g.root(), PathTarget::exterior(), 5, true));
}

TEST(Psi, BoundaryMassSplitsPsi) {
    const WeightedGraph g = build_halfspace_box(2, 3, 2, 1.0);
    Stream rng(5, 0);
    const BetaField beta = sample_beta(g, rng);
    const auto U = g.free_vertices();
    const PolymerSolve s = psi(g, beta, U);
    const auto split = boundary_split(g, beta, U);
    EXPECT_NEAR(split.at(VertexClass::top) + split.at(VertexClass::side), s.psi[static_cast<std::size_t>(*g.root())],
                1e-12);
    EXPECT_LT(s.residual, 1e-10);
    for (int v : U) EXPECT_GT(s.psi[static_cast<std::size_t>(v)], 0.0);
    for (int v : g.vertices_of(VertexClass::top)) EXPECT_EQ(s.psi[static_cast<std::size_t>(v)], 1.0);
    // By class path sums agree with the split.
    const std::vector<int> small{*g.root(), *g.find({1, 0}), *g.find({0, 1})};
    const PolymerSolve t = psi(g, beta, small);
    double total = 0.0;
    for (VertexClass c : {VertexClass::top, VertexClass::side, VertexClass::interior}) {
        const PathSum p = path_sum_oracle(g, beta, small, *g.root(), PathTarget::of_class(c), 600);
        const double expect = t.boundary_mass.count(c) ? t.boundary_mass.at(c) : 0.0;
        EXPECT_NEAR(p.value, expect, 1e-9 + p.tail_bound);
        total += p.value;
    }
    EXPECT_NEAR(total, t.psi[static_cast<std::size_t>(*g.root())], 1e-9);
}

TEST(Psi, EmptyDomainIsOne) {
    const WeightedGraph g = build_box_lattice(2, 1, 1.0);
    Stream rng(5, 0);
    const PolymerSolve s = psi(g, sample_beta(g, rng), {});
    for (double v : s.psi) EXPECT_EQ(v, 1.0);
}

TEST(Psi, HasUnitMean) {
    const WeightedGraph g = build_box_lattice(2, 2, 0.7);
    const auto U = g.free_vertices();
    const int root = *g.root();
    const int corner = *g.find({2, 2});
    BetaSampler sampler(g);
    EstimatorSummary at_root, at_corner;
    Stream rng(41, 0);
    for (int i = 0; i < 40000; ++i) {
        const BetaField b = sampler.sample(rng);
        const Vec p = solve_psi(g, b.beta, U);
        const auto pos = index_in(U, g.size());
        at_root.add(p(pos[root]));
        at_corner.add(p(pos[corner]));
    }
    EXPECT_TRUE(within_policy(z_score(at_root, 1.0)));
    EXPECT_TRUE(within_policy(z_score(at_corner, 1.0)));
}
