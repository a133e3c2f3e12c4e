#pragma once

// The one-dimensional toy model: the inverse Gaussian product identity on a
// chain, the closed-form chain moments, the uniform-in-n moment bound on the
// random-weight toy graph, and the comparison chain G0 -> G3 on a box.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrjp/beta_field.hpp"
#include "vrjp/errors.hpp"
#include "vrjp/graph.hpp"
#include "vrjp/inverse_gaussian.hpp"
#include "vrjp/mc_engine.hpp"
#include "vrjp/schrodinger.hpp"
#include "vrjp/stats.hpp"

namespace vrjp {

// Chain 0 - 1 - ... - ell with conductance epsilon and an edge (ell, *) of
// weight eta0. Root 0.
inline WeightedGraph build_chain_graph(int ell, double epsilon, double eta0) {
    if (ell < 0) throw std::invalid_argument("chain length must be >= 0");
    if (!(epsilon > 0.0) || !(eta0 > 0.0)) throw std::invalid_argument("epsilon and eta0 must be positive");
    WeightedGraph g;
    for (int i = 0; i <= ell; ++i) g.add_vertex(VertexClass::interior, 0.0, Coord{i});
    const int star = g.add_vertex(VertexClass::cemetery);
    for (int i = 0; i < ell; ++i) g.set_conductance(i, i + 1, epsilon);
    g.set_conductance(ell, star, eta0);
    g.set_root(0);
    return g;
}

// psi(0) on the chain by a tridiagonal elimination from the far end.
template <class Real>
Real chain_psi0(const std::vector<Real>& beta, Real epsilon, Real eta0) {
    const std::size_t L = beta.size() - 1;
    // Invariant: d psi_i = rhs + eps psi_{i-1} at the current i.
    Real d = beta[L], rhs = eta0;
    for (std::size_t i = L; i > 0; --i) {
        const Real c = epsilon / d;
        const Real r = rhs / d;
        d = beta[i - 1] - epsilon * c;
        rhs = epsilon * r;
    }
    return rhs / d;
}

struct ChainIdentity {
    double mc_estimate = 0.0;          // psi(0) by a linear solve on the chain
    double product_estimate = 0.0;     // prod A_i
    double relative_difference = 0.0;
    std::vector<double> beta;          // the constructed field, per chain vertex
    std::vector<double> A;
};

// Draws A_i ~ IG(1, epsilon) for i < ell and A_ell ~ IG(1, eta0), builds the
// field beta_0 = eps/A_0, beta_i = eps A_{i-1} + eps/A_i, beta_ell =
// eps A_{ell-1} + eta0/A_ell, and evaluates psi(0) both ways. Both run in
// quad precision: psi(0) is ill-conditioned in the field for long chains,
// and rounding the field to double or long double can exceed 1e-12 at ell = 8.
template <class Rng>
ChainIdentity chain_partition_identity(int ell, double epsilon, double eta0, Rng& rng) {
    if (ell < 0) throw std::invalid_argument("chain length must be >= 0");
    if (!(epsilon > 0.0) || !(eta0 > 0.0)) throw std::invalid_argument("epsilon and eta0 must be positive");
    using Real = __float128;
    ChainIdentity out;
    out.A.resize(static_cast<std::size_t>(ell) + 1);
    for (int i = 0; i < ell; ++i) out.A[static_cast<std::size_t>(i)] = sample_ig(1.0, epsilon, rng);
    out.A[static_cast<std::size_t>(ell)] = sample_ig(1.0, eta0, rng);
    const Real eps = epsilon, e0 = eta0;
    std::vector<Real> beta(out.A.size());
    Real prod = 1;
    for (int i = 0; i <= ell; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const Real in = i == 0 ? Real(0) : eps * static_cast<Real>(out.A[k - 1]);
        beta[k] = in + (i == ell ? e0 : eps) / static_cast<Real>(out.A[k]);
        prod *= static_cast<Real>(out.A[k]);
    }
    const Real solved = chain_psi0(beta, eps, e0);
    out.mc_estimate = static_cast<double>(solved);
    out.product_estimate = static_cast<double>(prod);
    out.relative_difference = static_cast<double>((solved > prod ? solved - prod : prod - solved) / prod);
    out.beta.assign(beta.begin(), beta.end());
    return out;
}

// ---------------------------------------------------------------- toy moments

struct ToyMomentSpec {
    int p = 2;
    int k = 1;
    int m = 0;
    double epsilon = 1.0;
    double eta0 = 1.0;

    int chain_length() const { return (2 * m + 1) * k; }

    // ig_moment(p, epsilon)^((2m+1)k) ig_moment(p, eta0); +inf on overflow.
    double closed_form() const { return closed_form_at(p); }

    double closed_form_at(int q) const {
        const double a = ig_moment(q, epsilon), b = ig_moment(q, eta0);
        const double logv = chain_length() * std::log(a) + std::log(b);
        return logv > std::log(std::numeric_limits<double>::max()) ? std::numeric_limits<double>::infinity()
                                                                   : std::exp(logv);
    }

    void validate() const {
        if (p < 1) throw std::invalid_argument("toy moment: p must be >= 1");
        if (k < 0 || m < 0) throw std::invalid_argument("toy moment: k and m must be >= 0");
        if (!(epsilon > 0.0) || !(eta0 > 0.0)) throw std::invalid_argument("toy moment: epsilon and eta0 must be positive");
        if (!std::isfinite(closed_form())) throw std::invalid_argument("toy moment: closed form overflows");
    }
};

struct ToyMomentResult {
    ToyMomentSpec spec;
    double closed_form = 0.0;
    EstimatorSummary plain;
    bool median_of_means = false;
    std::size_t buckets = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double predicted_relative_error = 0.0;  // sqrt((E[M^2p]/E[M^p]^2 - 1) / n)
    bool heavy_tail = false;
};

inline constexpr std::size_t kToyBuckets = 15;

// MC estimate of E[psi(0)^p] on the chain with beta drawn by the generic
// sampler, against the closed form. mom_buckets > 0 selects a median-of-means
// estimate over that many contiguous buckets.
inline ToyMomentResult toy_moment_check(const ToyMomentSpec& spec, std::size_t n, std::uint64_t seed,
                                        unsigned workers = 1, std::size_t mom_buckets = 0) {
    spec.validate();
    const WeightedGraph g = build_chain_graph(spec.chain_length(), spec.epsilon, spec.eta0);
    BetaSampler sampler(g);
    std::vector<int> order(sampler.vertices().size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    sampler.set_order(order);
    const double eps = spec.epsilon, eta0 = spec.eta0;
    const int p = spec.p;
    auto exp = [sampler, eps, eta0, p](Stream& rng) mutable {
        const auto& b = sampler.sample_local(rng);
        return std::vector<double>{std::pow(chain_psi0(b, eps, eta0), p)};
    };
    const auto res = run_replicates(exp, n, seed, workers);
    ToyMomentResult out;
    out.spec = spec;
    out.closed_form = spec.closed_form();
    out.plain = res.total.at(0);
    if (mom_buckets > 0) {
        const auto mom = median_of_means(res.buckets(0, mom_buckets));
        out.median_of_means = true;
        out.buckets = mom.buckets;
        out.estimate = mom.estimate;
        out.std_error = mom.std_error;
    } else {
        out.estimate = out.plain.mean;
        out.std_error = out.plain.std_error();
    }
    out.z = z_score(out.estimate, out.std_error, out.closed_form);
    const double rel_var = spec.closed_form_at(2 * p) / (out.closed_form * out.closed_form) - 1.0;
    out.predicted_relative_error = std::sqrt(rel_var / static_cast<double>(std::max<std::size_t>(n, 1)));
    out.heavy_tail = !(out.predicted_relative_error <= 0.1);
    return out;
}

// ---------------------------------------------------------------- uniform bound

// Law mu0 of the random side weights.
struct WeightSampler {
    enum class Kind { point, uniform, empirical };
    Kind kind = Kind::point;
    double a = 1.0;  // point value, or lower end
    double b = 1.0;  // upper end
    std::vector<double> values;

    static WeightSampler point(double x) {
        if (!(x > 0.0)) throw std::invalid_argument("point weight must be positive");
        return {Kind::point, x, x, {}};
    }
    static WeightSampler uniform(double lo, double hi) {
        if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("uniform weights need 0 < lo < hi");
        return {Kind::uniform, lo, hi, {}};
    }
    // One positive decimal per line; blank lines and lines starting with '#'
    // are skipped.
    static WeightSampler empirical(std::istream& is) {
        WeightSampler s;
        s.kind = Kind::empirical;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            const auto last = line.find_last_not_of(" \t\r");
            double x = 0.0;
            try {
                x = detail::parse_double(line.substr(first, last - first + 1));
            } catch (const std::invalid_argument&) {
                throw ConfigError("weight file line " + std::to_string(lineno) + ": not a number");
            }
            if (!(x > 0.0) || !std::isfinite(x))
                throw ConfigError("weight file line " + std::to_string(lineno) + ": weight must be positive");
            s.values.push_back(x);
        }
        if (s.values.empty()) throw ConfigError("weight file has no values");
        return s;
    }
    static WeightSampler from_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open weight file '" + path + "'");
        return empirical(is);
    }

    template <class Rng>
    double operator()(Rng& rng) const {
        switch (kind) {
            case Kind::point: return a;
            case Kind::uniform: return std::uniform_real_distribution<double>(a, b)(rng);
            case Kind::empirical:
                return values[std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng)];
        }
        return a;
    }
};

struct UniformBoundRow {
    int n = 0;
    EstimatorSummary moment;  // E[M~^p]
    std::vector<EstimatorSummary> k_tail;  // P(K >= k), k = 0, 1, ...
};

struct UniformBoundTable {
    std::vector<UniformBoundRow> rows;
    double C0 = 0.0;               // ig_moment(p, eps)^(2m+1)
    double c1 = 0.0;               // ig_moment(p, eta0)
    double bound = 0.0;            // 2 c1
    double small_mass = 0.0;       // mu0((0, eta0)), pooled over all drawn weights
    double small_mass_se = 0.0;
    bool mass_condition = false;   // small_mass below epsilon0 at the policy level
    bool eta0_below_epsilon = false;
    bool assertable = false;       // both conditions hold
    SlopeFit trend;                // moment against n
    bool no_upward_trend = true;
    std::vector<bool> k_tail_ok;   // P(K >= k) <= epsilon0^k, per k on the largest n
    bool below_bound = true;       // every row at most 2 c1 (policy level)
};

inline double toy_epsilon0(int p, int m, double epsilon) {
    return 0.5 / std::pow(ig_moment(p, epsilon), 2 * m + 1);
}

// E[M~^p] on the random-weight toy graph across n_grid. K is the first j >= 0
// with side weight at (2m+1)j at least eta0, or the number of eligible j >= 0
// if there is none.
inline UniformBoundTable toy_uniform_bound_experiment(const std::vector<int>& n_grid, int m, double epsilon,
                                                      const WeightSampler& mu0, double eta0, double epsilon0, int p,
                                                      std::size_t replicates, std::uint64_t seed, unsigned workers = 1) {
    if (n_grid.empty()) throw std::invalid_argument("uniform bound: empty n grid");
    if (p < 1) throw std::invalid_argument("uniform bound: p must be >= 1");
    if (!(epsilon0 > 0.0 && epsilon0 < 1.0)) throw std::invalid_argument("uniform bound: epsilon0 must be in (0,1)");
    UniformBoundTable t;
    t.C0 = std::pow(ig_moment(p, epsilon), 2 * m + 1);
    t.c1 = ig_moment(p, eta0);
    t.bound = 2.0 * t.c1;
    t.eta0_below_epsilon = eta0 <= epsilon;
    const int nmax = *std::max_element(n_grid.begin(), n_grid.end());
    int kcount = 0;
    for (int i : toy_eligible_indices(nmax, m))
        if (i >= 0) ++kcount;

    double small_hits = 0.0, drawn = 0.0;
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const int n = n_grid[gi];
        const auto eligible = toy_eligible_indices(n, m);
        auto exp = [n, m, epsilon, &mu0, eta0, p, &eligible, kcount](Stream& rng) {
            std::map<int, double> w;
            for (int i : eligible) w[i] = mu0(rng);
            int K = 0, small = 0;
            for (const auto& [i, x] : w) small += x < eta0 ? 1 : 0;
            int nonneg = 0;
            for (int i : eligible)
                if (i >= 0) ++nonneg;
            K = nonneg;
            for (int i : eligible) {
                if (i < 0) continue;
                if (w[i] >= eta0) {
                    K = i / (2 * m + 1);
                    break;
                }
            }
            const WeightedGraph g = build_toy_graph(n, m, epsilon, w);
            Stream field = rng.substream(0);
            const BetaField beta = sample_beta(g, field);
            const auto U = g.free_vertices();
            const double x = solve_psi(g, beta.beta, U)(g.root().value());
            std::vector<double> out{std::pow(x, p), static_cast<double>(small), static_cast<double>(w.size())};
            for (int k = 0; k <= kcount; ++k) out.push_back(K >= k ? 1.0 : 0.0);
            return out;
        };
        const auto res = run_replicates(exp, replicates, derive_seed(seed, static_cast<std::uint64_t>(gi)), workers);
        UniformBoundRow row;
        row.n = n;
        row.moment = res.total.at(0);
        row.k_tail.assign(res.total.begin() + 3, res.total.end());
        t.rows.push_back(row);
        small_hits += res.total.at(1).mean * static_cast<double>(res.total.at(1).n);
        drawn += res.total.at(2).mean * static_cast<double>(res.total.at(2).n);
    }
    // Every drawn weight is an independent mu0 sample.
    if (drawn > 0.0) {
        t.small_mass = small_hits / drawn;
        t.small_mass_se = std::sqrt(t.small_mass * (1.0 - t.small_mass) / drawn);
    }
    t.mass_condition = t.small_mass + kSigmaPolicy * t.small_mass_se < epsilon0;
    t.assertable = t.mass_condition && t.eta0_below_epsilon;

    std::vector<double> xs, ys;
    for (const auto& r : t.rows) {
        xs.push_back(r.n);
        ys.push_back(r.moment.mean);
        if (!below_policy(r.moment, t.bound)) t.below_bound = false;
    }
    if (xs.size() >= 2) {
        t.trend = fit_slope(xs, ys);
        // Standard error of the slope propagated from the per-n standard errors.
        double mx = 0.0;
        for (double x : xs) mx += x;
        mx /= static_cast<double>(xs.size());
        double sxx = 0.0, var = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            const double se = t.rows[i].moment.std_error();
            var += (xs[i] - mx) * (xs[i] - mx) * se * se;
        }
        t.trend.std_error = std::sqrt(var) / sxx;
        t.no_upward_trend = t.trend.slope - kSigmaPolicy * t.trend.std_error <= 0.0;
    }
    const auto& last = t.rows.back();
    for (std::size_t k = 0; k < last.k_tail.size(); ++k)
        t.k_tail_ok.push_back(below_policy(last.k_tail[k], std::pow(epsilon0, static_cast<double>(k))));
    return t;
}

// ---------------------------------------------------------------- comparison chain

struct ComparisonChain {
    std::vector<WeightedGraph> stages;  // G0, G1, G2, G3
};

// G0: the box [-n,n]^d with conductance W. G1 keeps vertical edges only
// inside slabs {|x_d - c| <= m}, c in (2m+1)Z, and along the line
// L = {0}^(d-1) x [-n,n]. G2 duplicates L: L edges drop to W - eps, the copy
// carries eps, cross edges 1, and eps of the cemetery conductance at each end
// of L moves to the copy. G3 removes L edges between slabs and cross edges
// away from slab centers c with |c| <= n-m-2, and lowers all slab edges,
// lateral cemetery edges included, to W - eps.
inline ComparisonChain build_comparison_chain(int d, int n, int m, double W, double eps) {
    if (d < 2) throw std::invalid_argument("comparison chain: d must be >= 2");
    if (!(eps > 0.0) || !(2.0 * eps < W)) throw std::invalid_argument("comparison chain: need 0 < 2 eps < W");
    const int period = 2 * m + 1;
    auto slab_of = [period](int z) {
        // Index c/(2m+1) of the slab center nearest to z.
        const int q = z >= 0 ? (z + period / 2) / period : -((-z + period / 2) / period);
        return q;
    };
    ComparisonChain out;
    const WeightedGraph g0 = build_box_lattice(d, n, W);
    out.stages.push_back(g0);
    const int star = g0.cemetery().value();

    auto on_line = [d](const Coord& c) {
        for (int i = 0; i + 1 < d; ++i)
            if (c[static_cast<std::size_t>(i)] != 0) return false;
        return true;
    };

    // G1
    ComparisonParams p1;
    for (int v = 0; v < star; ++v) {
        for (const auto& nb : g0.neighbors(v)) {
            if (nb.v <= v || nb.v == star) continue;
            const Coord& a = g0.coord(v);
            const Coord& b = g0.coord(nb.v);
            if (a.back() == b.back()) continue;
            if (slab_of(a.back()) != slab_of(b.back()) && !on_line(a)) p1.edges.emplace_back(v, nb.v);
        }
    }
    const WeightedGraph g1 = transform_comparison_step(g0, ComparisonStep::remove_edges, p1);
    out.stages.push_back(g1);

    // G2
    ComparisonParams p2;
    for (int z = -n; z <= n; ++z) {
        Coord c(static_cast<std::size_t>(d), 0);
        c.back() = z;
        p2.line.push_back(g1.find(c).value());
    }
    p2.epsilon = eps;
    p2.line_weight = W - eps;
    p2.cross_weight = 1.0;
    p2.end_cemetery_share = eps;
    const WeightedGraph g2 = transform_comparison_step(g1, ComparisonStep::duplicate_line, p2);
    out.stages.push_back(g2);

    // G3
    std::vector<int> copy;
    for (std::size_t i = 0; i < p2.line.size(); ++i) copy.push_back(static_cast<int>(g1.size() + i));
    ComparisonParams rm;
    for (std::size_t i = 0; i + 1 < p2.line.size(); ++i) {
        const int a = p2.line[i], b = p2.line[i + 1];
        if (slab_of(g2.coord(a).back()) != slab_of(g2.coord(b).back())) rm.edges.emplace_back(a, b);
    }
    for (std::size_t i = 0; i < p2.line.size(); ++i) {
        const int z = g2.coord(p2.line[i]).back();
        const bool center = z % period == 0 && std::abs(z) <= n - m - 2;
        if (!center) rm.edges.emplace_back(p2.line[i], copy[i]);
    }
    WeightedGraph g3 = transform_comparison_step(g2, ComparisonStep::remove_edges, rm);
    ComparisonParams lower;
    std::vector<char> is_copy(g3.size(), 0);
    for (int c : copy) is_copy[static_cast<std::size_t>(c)] = 1;
    for (int v = 0; v < static_cast<int>(g3.size()); ++v) {
        if (v == star || is_copy[static_cast<std::size_t>(v)]) continue;
        for (const auto& nb : g3.neighbors(v)) {
            if (is_copy[static_cast<std::size_t>(nb.v)]) continue;
            if (nb.v == star) {
                // eps less per lateral exit; exits through the bottom and top faces keep W.
                const Coord& a = g3.coord(v);
                int lateral = 0;
                for (int i = 0; i + 1 < d; ++i)
                    if (std::abs(a[static_cast<std::size_t>(i)]) == n) ++lateral;
                if (lateral > 0) {
                    lower.edges.emplace_back(v, nb.v);
                    lower.weights.push_back(nb.w - eps * lateral);
                }
            } else if (nb.v > v && nb.w > W - eps) {
                lower.edges.emplace_back(v, nb.v);
                lower.weights.push_back(W - eps);
            }
        }
    }
    if (!lower.edges.empty()) g3 = transform_comparison_step(g3, ComparisonStep::lower_weights, lower);
    out.stages.push_back(g3);
    return out;
}

enum class ConvexFunction { square, cube, centered_square, identity };

inline double apply(ConvexFunction f, double x) {
    switch (f) {
        case ConvexFunction::square: return x * x;
        case ConvexFunction::cube: return x * x * x;
        case ConvexFunction::centered_square: return (x - 1.0) * (x - 1.0);
        case ConvexFunction::identity: return x;
    }
    return x;
}

inline const char* to_string(ConvexFunction f) {
    switch (f) {
        case ConvexFunction::square: return "x^2";
        case ConvexFunction::cube: return "x^3";
        case ConvexFunction::centered_square: return "(x-1)^2";
        case ConvexFunction::identity: return "x";
    }
    return "?";
}

struct ConvexOrderResult {
    ConvexFunction f = ConvexFunction::square;
    std::vector<EstimatorSummary> stage;  // E[f(M^(j))], j = 0..3
    std::vector<EstimatorSummary> step;   // paired f(M^(j+1)) - f(M^(j))
    std::vector<bool> step_ok;            // step not significantly negative
    EstimatorSummary plain_w;             // E[f(psi^W)] on G0
    EstimatorSummary plain_w_delta;       // E[f(psi^(W+delta))] on G0 at W + delta
    EstimatorSummary plain_step;          // paired f(psi^(W+delta)) - f(psi^W)
    bool plain_ok = true;                 // plain_step not significantly positive
    bool monotone() const {
        return plain_ok && std::all_of(step_ok.begin(), step_ok.end(), [](bool b) { return b; });
    }
};

// Every stage of a replicate reuses the same substream (common random
// numbers); the paired per-replicate differences carry the test.
inline std::vector<ConvexOrderResult> convex_order_chain_test(int d, int n, int m, double W, double eps,
                                                              const std::vector<ConvexFunction>& f_set,
                                                              std::size_t replicates, std::uint64_t seed,
                                                              unsigned workers = 1, double delta = 1.0) {
    const ComparisonChain chain = build_comparison_chain(d, n, m, W, eps);
    std::vector<WeightedGraph> graphs = chain.stages;
    graphs.push_back(build_box_lattice(d, n, W + delta));
    struct Stage {
        const WeightedGraph* g;
        std::vector<int> U;
        int root;
        BetaSampler sampler;
    };
    std::vector<Stage> stages;
    for (const auto& g : graphs) {
        auto U = g.free_vertices();
        const int r = index_in(U, g.size())[g.root().value()];
        BetaSampler sampler(g);
        // Natural order: box vertices share indices across stages, which
        // keeps the common random numbers aligned vertex by vertex.
        std::vector<int> order(U.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        sampler.set_order(order);
        stages.push_back(Stage{&g, U, r, std::move(sampler)});
    }
    auto exp = [stages, &f_set](Stream& rng) mutable {
        std::vector<double> psi;
        for (auto& s : stages) {
            Stream sub = rng.substream(0);
            const auto& b = s.sampler.sample_local(sub);
            std::vector<double> beta(s.g->size(), 0.0);
            for (std::size_t i = 0; i < s.U.size(); ++i) beta[static_cast<std::size_t>(s.U[i])] = b[i];
            psi.push_back(solve_psi(*s.g, beta, s.U)(s.root));
        }
        std::vector<double> out;
        for (ConvexFunction f : f_set) {
            for (int j = 0; j < 4; ++j) out.push_back(apply(f, psi[static_cast<std::size_t>(j)]));
            for (int j = 0; j < 3; ++j)
                out.push_back(apply(f, psi[static_cast<std::size_t>(j + 1)]) - apply(f, psi[static_cast<std::size_t>(j)]));
            out.push_back(apply(f, psi[4]));
            out.push_back(apply(f, psi[4]) - apply(f, psi[0]));
        }
        return out;
    };
    const auto res = run_replicates(exp, replicates, seed, workers);
    std::vector<ConvexOrderResult> out;
    std::size_t c = 0;
    for (ConvexFunction f : f_set) {
        ConvexOrderResult r;
        r.f = f;
        for (int j = 0; j < 4; ++j) r.stage.push_back(res.total[c++]);
        for (int j = 0; j < 3; ++j) {
            r.step.push_back(res.total[c++]);
            const auto& s = r.step.back();
            r.step_ok.push_back(f == ConvexFunction::identity ? within_policy(z_score(s, 0.0))
                                                              : z_score(s, 0.0) >= -kSigmaPolicy);
        }
        r.plain_w = r.stage[0];
        r.plain_w_delta = res.total[c++];
        r.plain_step = res.total[c++];
        r.plain_ok = f == ConvexFunction::identity ? within_policy(z_score(r.plain_step, 0.0))
                                                   : z_score(r.plain_step, 0.0) <= kSigmaPolicy;
        out.push_back(r);
    }
    return out;
}

}  // namespace vrjp
