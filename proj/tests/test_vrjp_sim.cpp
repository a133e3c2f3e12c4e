#include <gtest/gtest.h>

#include <sstream>

#include "vrjp/vrjp_sim.hpp"

using namespace vrjp;

namespace {

WeightedGraph edge(double W) {
    WeightedGraph g;
    g.add_vertex(VertexClass::plain);
    g.add_vertex(VertexClass::plain);
    g.set_conductance(0, 1, W);
    g.set_root(0);
    return g;
}

}  // namespace

// The first sojourn is Exp(W); the second has rate W (1 + T1), so its mean is
// e^W E1(W).
TEST(Vrjp, SojournsOnAnEdge) {
    for (const auto& [W, second] : {std::pair{1.0, 0.59634736232319407434}, std::pair{2.0, 0.3613286168882225847}}) {
        const WeightedGraph g = edge(W);
        StopRule stop;
        stop.jump_budget = 2;
        EstimatorSummary first, next;
        Stream rng(4, static_cast<std::uint64_t>(W));
        for (int i = 0; i < 100000; ++i) {
            const Trajectory t = simulate_vrjp(g, 0, stop, rng);
            ASSERT_EQ(t.events.size(), 2u);
            ASSERT_TRUE(t.truncated);
            EXPECT_EQ(t.events[0].vertex, 1);
            EXPECT_EQ(t.events[1].vertex, 0);
            first.add(t.events[0].time);
            next.add(t.events[1].time - t.events[0].time);
        }
        EXPECT_TRUE(within_policy(z_score(first, 1.0 / W))) << W;
        EXPECT_TRUE(within_policy(z_score(next, second))) << W;
    }
}

TEST(Vrjp, LocalTimesAddUpToTheClock) {
    const WeightedGraph g = build_box_lattice(2, 2, 1.0);
    Stream rng(6, 0);
    StopRule stop;
    stop.horizon = 5.0;
    for (int i = 0; i < 50; ++i) {
        const Trajectory t = simulate_vrjp(g, *g.root(), stop, rng);
        double s = 0.0;
        for (double x : t.local_time) s += x;
        EXPECT_NEAR(s, t.clock, 1e-12);
        for (std::size_t k = 1; k < t.events.size(); ++k) EXPECT_GE(t.events[k].time, t.events[k - 1].time);
        if (t.exit_class) EXPECT_EQ(*t.exit_class, VertexClass::cemetery);
        else EXPECT_EQ(t.clock, 5.0);
    }
}

TEST(Vrjp, HorizonAndBudget) {
    const WeightedGraph g = edge(1.0);
    Stream rng(9, 0);
    StopRule stop;
    stop.horizon = 0.0;
    const Trajectory t0 = simulate_vrjp(g, 0, stop, rng);
    EXPECT_TRUE(t0.events.empty());
    EXPECT_EQ(t0.clock, 0.0);
    stop.horizon = std::numeric_limits<double>::infinity();
    stop.jump_budget = 10;
    const Trajectory t1 = simulate_vrjp(g, 0, stop, rng);
    EXPECT_EQ(t1.events.size(), 10u);
    EXPECT_TRUE(t1.truncated);
    stop.horizon = -1.0;
    EXPECT_THROW(simulate_vrjp(g, 0, stop, rng), std::invalid_argument);
    stop.horizon = 1.0;
    EXPECT_THROW(simulate_vrjp(g, 5, stop, rng), std::out_of_range);
}

TEST(Vrjp, SameStreamSameTrajectory) {
    const WeightedGraph g = build_halfspace_box(2, 3, 2, 1.0);
    StopRule stop;
    Stream a(77, 3), b(77, 3);
    const Trajectory ta = simulate_vrjp(g, *g.root(), stop, a);
    const Trajectory tb = simulate_vrjp(g, *g.root(), stop, b);
    ASSERT_EQ(ta.events.size(), tb.events.size());
    for (std::size_t i = 0; i < ta.events.size(); ++i) {
        EXPECT_EQ(ta.events[i].vertex, tb.events[i].vertex);
        EXPECT_EQ(ta.events[i].time, tb.events[i].time);
    }
}

TEST(Quenched, SkeletonRowsAreStochastic) {
    const WeightedGraph g = build_halfspace_box(2, 3, 2, 0.8);
    Stream rng(10, 0);
    const BetaField beta = sample_beta(g, rng);
    const auto q = quenched_rates(g, beta, *g.root(), sample_gamma(rng));
    const Skeleton s = quenched_skeleton(g, q);
    for (Eigen::Index i = 0; i < s.P.rows(); ++i) {
        double row = s.P.row(i).sum();
        for (const auto& [c, e] : s.exit_step) row += e(i);
        EXPECT_NEAR(row, 1.0, 1e-13);
    }
    double total = 0.0;
    for (const auto& [c, p] : skeleton_exit_distribution(s, *g.root(), g.size())) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_THROW(quenched_rates(g, beta, *g.root(), 0.0), std::invalid_argument);
}

TEST(Quenched, SimulationMatchesSkeleton) {
    const WeightedGraph g = build_halfspace_box(2, 3, 2, 1.0);
    Stream rng(12, 0);
    const BetaField beta = sample_beta(g, rng);
    const auto q = quenched_rates(g, beta, *g.root(), 0.7);
    const double exact = skeleton_exit_distribution(quenched_skeleton(g, q), *g.root(), g.size()).at(VertexClass::side);
    EstimatorSummary side;
    StopRule stop;
    for (int i = 0; i < 40000; ++i) {
        const Trajectory t = simulate_quenched(g, q, *g.root(), stop, rng);
        ASSERT_TRUE(t.exit_class);
        side.add(*t.exit_class == VertexClass::side ? 1.0 : 0.0);
    }
    EXPECT_TRUE(within_policy(z_score(side, exact)));
}

TEST(ExitProbability, ThreeEstimatorsAgree) {
    const WeightedGraph g = build_halfspace_box(2, 2, 3, 1.0);
    const auto r = exit_probability_annealed(g, 4000, 5, 2);
    EXPECT_TRUE(within_policy(r.z));
    EXPECT_TRUE(within_policy(r.z_quenched));
    EXPECT_EQ(r.truncated, 0u);
    EXPECT_GT(r.ratio.mean, 0.0);
    EXPECT_LT(r.ratio.mean, 1.0);
}

TEST(TrajectoryCsv, OneRowPerEvent) {
    Trajectory t;
    t.events = {{1, 0.5}, {kFieldExit, 1.25}};
    std::ostringstream os;
    write_trajectory_csv_header(os);
    write_trajectory_csv(os, 3, t);
    EXPECT_EQ(os.str(), "replicate,event,vertex,time\n3,0,1,0.5\n3,1,-1,1.25\n");
}
