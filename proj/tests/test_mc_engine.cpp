#include <gtest/gtest.h>

#include <cstring>

#include "vrjp/mc_engine.hpp"

using namespace vrjp;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const EstimatorSummary& a, const EstimatorSummary& b) {
    return a.n == b.n && same_bits(a.mean, b.mean) && same_bits(a.m2, b.m2) && same_bits(a.min, b.min) &&
           same_bits(a.max, b.max);
}

}  // namespace

TEST(Stream, DistinctReplicatesAndSubstreams) {
    Stream a(1, 0), b(1, 1), c(2, 0);
    const auto x = a(), y = b(), z = c();
    EXPECT_NE(x, y);
    EXPECT_NE(x, z);
    Stream s(1, 0);
    Stream s0 = s.substream(0), s1 = s.substream(1);
    EXPECT_NE(s0(), s1());
    Stream again(1, 0);
    EXPECT_EQ(again(), x);
    EXPECT_EQ(again.draws(), 1u);
}

TEST(RunReplicates, BitwiseIndependentOfWorkers) {
    auto exp = [](Stream& rng) {
        std::normal_distribution<double> n01;
        const double x = n01(rng);
        return std::vector<double>{x, x * x, std::exp(x)};
    };
    const RunResult one = run_replicates(exp, 5000, 42, 1);
    const RunResult four = run_replicates(exp, 5000, 42, 4);
    ASSERT_EQ(one.total.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(same_bits(one.total[i], four.total[i])) << i;
    EXPECT_EQ(one.blocks.size(), 5u);
    EXPECT_TRUE(within_policy(z_score(one.total[0], 0.0)));
    EXPECT_TRUE(within_policy(z_score(one.total[1], 1.0)));
    const RunResult other = run_replicates(exp, 5000, 43, 1);
    EXPECT_FALSE(same_bits(one.total[0], other.total[0]));
}

TEST(RunReplicates, BucketsCoverEveryReplicate) {
    auto exp = [](Stream& rng) { return std::vector<double>{std::uniform_real_distribution<double>()(rng)}; };
    const RunResult r = run_replicates(exp, 10000, 1, 1, 100);
    const auto b = r.buckets(0, 15);
    ASSERT_EQ(b.size(), 15u);
    std::size_t total = 0;
    EstimatorSummary merged;
    for (const auto& s : b) {
        total += s.n;
        merged = EstimatorSummary::merge(merged, s);
    }
    EXPECT_EQ(total, 10000u);
    EXPECT_NEAR(merged.mean, r.total[0].mean, 1e-14);
}

TEST(RunReplicates, DegeneracyBudget) {
    // One replicate in 500 is degenerate: over the 1e-3 budget.
    auto bad = [](Stream& rng) -> std::vector<double> {
        if (rng.replicate() % 500 == 0) throw DegenerateError("forced");
        return {1.0};
    };
    EXPECT_THROW(run_replicates(bad, 5000, 1, 2), DegeneracyBudgetExceeded);
    // One in 2000 stays within it and is reported.
    auto rare = [](Stream& rng) -> std::vector<double> {
        if (rng.replicate() % 2000 == 0) throw DegenerateError("forced");
        return {1.0};
    };
    const RunResult r = run_replicates(rare, 4000, 1, 2);
    EXPECT_EQ(r.aborted, 2u);
    EXPECT_EQ(r.total[0].n, 3998u);
    auto broken = [](Stream&) -> std::vector<double> { throw std::runtime_error("boom"); };
    EXPECT_THROW(run_replicates(broken, 10, 1, 1), std::runtime_error);
}

TEST(EstimatorSummary, MergeMatchesSequential) {
    std::vector<double> xs;
    Stream rng(5, 0);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 999; ++i) xs.push_back(3.0 + n01(rng));
    const EstimatorSummary all = summarize(xs);
    EstimatorSummary a, b, c;
    for (int i = 0; i < 999; ++i) (i < 100 ? a : i < 600 ? b : c).add(xs[static_cast<std::size_t>(i)]);
    const auto left = EstimatorSummary::merge(EstimatorSummary::merge(a, b), c);
    const auto right = EstimatorSummary::merge(a, EstimatorSummary::merge(b, c));
    for (const auto& m : {left, right}) {
        EXPECT_EQ(m.n, all.n);
        EXPECT_NEAR(m.mean, all.mean, 1e-13);
        EXPECT_NEAR(m.variance(), all.variance(), 1e-12);
        EXPECT_EQ(m.min, all.min);
        EXPECT_EQ(m.max, all.max);
    }
}

TEST(EstimatorSummary, SingleSampleHasNoInterval) {
    EstimatorSummary s;
    s.add(2.0);
    EXPECT_FALSE(s.has_ci());
    EXPECT_TRUE(std::isnan(s.std_error()));
    EXPECT_EQ(s.mean, 2.0);
    EXPECT_EQ(z_score(1.0, 0.0, 1.0), 0.0);
    EXPECT_TRUE(std::isinf(z_score(1.5, 0.0, 1.0)));
}

TEST(MedianOfMeans, RobustCenter) {
    std::vector<EstimatorSummary> b(5);
    const double means[] = {1.0, 2.0, 100.0, 3.0, 2.5};
    for (int i = 0; i < 5; ++i) {
        b[static_cast<std::size_t>(i)].add(means[i]);
        b[static_cast<std::size_t>(i)].add(means[i]);
    }
    EXPECT_EQ(median_of_means(b).estimate, 2.5);
    EXPECT_THROW(median_of_means({b[0], b[1]}), std::invalid_argument);
}

TEST(FitSlope, ExactLine) {
    const auto f = fit_slope({1, 2, 3, 4}, {1.5, 3.5, 5.5, 7.5});
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.std_error, 0.0, 1e-12);
    EXPECT_THROW(fit_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST(DeriveSeed, Separates) {
    EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
    EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(MomentSuite, UnitMeanAndIdentity) {
    auto family = [](double W) { return build_box_lattice(2, 1, W); };
    const auto rows = moment_suite(family, {0.5, 2.0}, {1, 2, -2}, 20000, 9, 2);
    ASSERT_EQ(rows.size(), 6u);
    for (const auto& r : rows) {
        if (r.p == 1) { EXPECT_TRUE(within_policy(z_score(r.summary, 1.0))) << r.W; }
        if (r.p == 2) { EXPECT_GE(r.summary.mean, 1.0); }
        EXPECT_TRUE(within_policy(r.identity_z)) << r.W;
    }
    EXPECT_THROW(moment_suite(family, {1.0}, {4}, 10, 1), std::invalid_argument);
}

TEST(PhaseScan, RowsPerWeightAndWidthCheck) {
    const auto scan = phase_scan(2, ScanFamily::slab, {1, 2}, {0.5, 1.0, 2.0}, 200, 3, 2, 3);
    ASSERT_EQ(scan.rows.size(), 3u);
    for (const auto& r : scan.rows) EXPECT_EQ(r.mean_log.size(), 2u);
    EXPECT_FALSE(scan.crossover_status.empty());
    EXPECT_THROW(phase_scan(2, ScanFamily::slab, {1, 2}, {1.0}, 10, 1, 1, 4), std::invalid_argument);
    EXPECT_THROW(phase_scan(2, ScanFamily::box, {1}, {1.0}, 10, 1), std::invalid_argument);
}

TEST(TailSuite, MaximalInequality) {
    const WeightedGraph g = build_halfspace_box(2, 4, 2, 1.0);
    const auto rows = tail_suite(g, {1.0, 2.0, 4.0}, 5000, 4, 2);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].exceed.mean, 1.0);  // M_0 = 1
    for (const auto& r : rows) EXPECT_TRUE(r.ok) << r.t;
}
