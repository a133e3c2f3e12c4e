#pragma once

// Continuous-time simulators: the linearly reinforced jump process and the
// quenched Markov jump process of the beta representation.
//
// Absorbing vertices and the explicit boundary field end a trajectory. The
// field acts as an edge to a cemetery with local time 0; its exit is recorded
// with exit_vertex = kFieldExit and class cemetery.

#include <charconv>
#include <cmath>
#include <map>
#include <string_view>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "vrjp/beta_field.hpp"
#include "vrjp/errors.hpp"
#include "vrjp/graph.hpp"
#include "vrjp/linalg.hpp"
#include "vrjp/mc_engine.hpp"
#include "vrjp/renewal.hpp"
#include "vrjp/schrodinger.hpp"
#include "vrjp/stats.hpp"

namespace vrjp {

struct JumpEvent {
    int vertex;
    double time;
};

struct Trajectory {
    int start = -1;
    std::vector<JumpEvent> events;
    std::vector<double> local_time;  // per graph vertex
    std::optional<VertexClass> exit_class;
    int exit_vertex = -2;            // graph vertex, kFieldExit, or -2 if none
    double clock = 0.0;
    bool truncated = false;
};

struct StopRule {
    std::set<VertexClass> exit_classes;  // entering one of these also stops
    double horizon = std::numeric_limits<double>::infinity();
    std::size_t jump_budget = 1000000;
};

namespace detail {

inline void check_start(const WeightedGraph& g, int start, const StopRule& stop) {
    if (start < 0 || static_cast<std::size_t>(start) >= g.size()) throw std::out_of_range("start vertex out of range");
    if (g.absorbing(start)) throw std::invalid_argument("start must not be absorbing");
    if (!(stop.horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
}

// Records the jump to y; returns true when y ends the trajectory.
inline bool arrive(const WeightedGraph& g, const StopRule& stop, Trajectory& t, int y) {
    if (y == kFieldExit) {
        t.events.push_back({kFieldExit, t.clock});
        t.exit_class = VertexClass::cemetery;
        t.exit_vertex = kFieldExit;
        return true;
    }
    t.events.push_back({y, t.clock});
    const VertexClass c = g.vertex_class(y);
    if (is_absorbing(c) || stop.exit_classes.count(c)) {
        t.exit_class = c;
        t.exit_vertex = y;
        return true;
    }
    return false;
}

}  // namespace detail

// Jump rate from x to y is W_xy (1 + L_y). Local times of vertices other than
// the current one are frozen during a sojourn, so each sojourn is a single
// exponential race. Self-loops do not move the walk and are ignored.
template <class Rng>
Trajectory simulate_vrjp(const WeightedGraph& g, int start, const StopRule& stop, Rng& rng) {
    detail::check_start(g, start, stop);
    Trajectory t;
    t.start = start;
    t.local_time.assign(g.size(), 0.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> rates;
    int x = start;
    while (true) {
        const auto& nbrs = g.neighbors(x);
        rates.clear();
        double total = 0.0;
        for (const auto& nb : nbrs) {
            const double r = nb.w * (1.0 + t.local_time[nb.v]);
            rates.push_back(r);
            total += r;
        }
        total += g.eta(x);
        if (!(total > 0.0)) {
            // Isolated vertex: the walk stays put until the horizon.
            if (std::isfinite(stop.horizon)) {
                t.local_time[x] += stop.horizon - t.clock;
                t.clock = stop.horizon;
            }
            return t;
        }
        const double dt = std::exponential_distribution<double>(total)(rng);
        if (t.clock + dt > stop.horizon) {
            t.local_time[x] += stop.horizon - t.clock;
            t.clock = stop.horizon;
            return t;
        }
        t.local_time[x] += dt;
        t.clock += dt;
        double u = unif(rng) * total;
        int y = kFieldExit;
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            if (u < rates[i]) {
                y = nbrs[i].v;
                break;
            }
            u -= rates[i];
        }
        if (y == kFieldExit && !(g.eta(x) > 0.0)) y = nbrs.back().v;  // rounding at the upper end
        if (detail::arrive(g, stop, t, y)) return t;
        x = y;
        if (t.events.size() >= stop.jump_budget) {
            t.truncated = true;
            return t;
        }
    }
}

// ---------------------------------------------------------------- quenched

// Jump rates of the quenched process from i0, W_ij G(i0,j) / G(i0,i).
// G is the Green function of the wired graph: all absorbing vertices and the
// field are contracted into one vertex * with beta_* = W_** + gamma, so
// G(i0,j) = G_hat(i0,j) + psi(i0) psi(j) / gamma and G(i0,*) = psi(i0) / gamma.
struct QuenchedRates {
    std::vector<int> U;            // free vertices
    std::vector<double> g_row;     // G(i0, v) per graph vertex; absorbing vertices hold G(i0,*)
    double gamma = 0.0;
    double g_star = 0.0;
};

inline QuenchedRates quenched_rates(const WeightedGraph& g, const BetaField& beta, int i0, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("quenched_rates: gamma must be positive");
    QuenchedRates q;
    q.U = g.free_vertices();
    q.gamma = gamma;
    const auto pos = index_in(q.U, g.size());
    if (pos.at(i0) < 0) throw std::invalid_argument("quenched_rates: start must be free");
    const Mat G = green(g, beta.beta, q.U);
    const Vec p = solve_psi(g, beta.beta, q.U);
    const double pi0 = p(pos[i0]);
    q.g_star = pi0 / gamma;
    q.g_row.assign(g.size(), q.g_star);
    for (std::size_t i = 0; i < q.U.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        q.g_row[static_cast<std::size_t>(q.U[i])] = G(pos[i0], ii) + pi0 * p(ii) / gamma;
    }
    return q;
}

// Conditional law of gamma given beta on the free vertices: a chi-square with
// one degree of freedom, the cemetery's one-vertex law with no field.
template <class Rng>
double sample_gamma(Rng& rng) {
    return sample_beta_single(0.0, 0.0, rng);
}

template <class Rng>
Trajectory simulate_quenched(const WeightedGraph& g, const QuenchedRates& q, int i0, const StopRule& stop, Rng& rng) {
    detail::check_start(g, i0, stop);
    Trajectory t;
    t.start = i0;
    t.local_time.assign(g.size(), 0.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> rates;
    int x = i0;
    while (true) {
        const auto& nbrs = g.neighbors(x);
        const double gx = q.g_row[static_cast<std::size_t>(x)];
        rates.clear();
        double total = 0.0;
        for (const auto& nb : nbrs) {
            const double r = nb.w * q.g_row[static_cast<std::size_t>(nb.v)] / gx;
            rates.push_back(r);
            total += r;
        }
        const double field = g.eta(x) * q.g_star / gx;
        total += field;
        if (!(total > 0.0)) return t;
        const double dt = std::exponential_distribution<double>(total)(rng);
        if (t.clock + dt > stop.horizon) {
            t.local_time[x] += stop.horizon - t.clock;
            t.clock = stop.horizon;
            return t;
        }
        t.local_time[x] += dt;
        t.clock += dt;
        double u = unif(rng) * total;
        int y = kFieldExit;
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            if (u < rates[i]) {
                y = nbrs[i].v;
                break;
            }
            u -= rates[i];
        }
        if (y == kFieldExit && !(field > 0.0)) y = nbrs.back().v;
        if (detail::arrive(g, stop, t, y)) return t;
        x = y;
        if (t.events.size() >= stop.jump_budget) {
            t.truncated = true;
            return t;
        }
    }
}

// Draws gamma from the stream, then simulates.
template <class Rng>
Trajectory simulate_quenched(const WeightedGraph& g, const BetaField& beta, int i0, const StopRule& stop, Rng& rng) {
    const double gamma = sample_gamma(rng);
    return simulate_quenched(g, quenched_rates(g, beta, i0, gamma), i0, stop, rng);
}

// Transition matrix of the discrete skeleton on the free vertices, plus the
// per-class exit probabilities of one step. Rows sum to one.
struct Skeleton {
    std::vector<int> U;
    Mat P;                                   // free -> free
    std::map<VertexClass, Vec> exit_step;    // free -> class, one step
};

inline Skeleton quenched_skeleton(const WeightedGraph& g, const QuenchedRates& q) {
    Skeleton s;
    s.U = q.U;
    const auto pos = index_in(s.U, g.size());
    const auto n = static_cast<Eigen::Index>(s.U.size());
    s.P = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int x = s.U[static_cast<std::size_t>(i)];
        double total = g.eta(x) * q.g_star;
        for (const auto& nb : g.neighbors(x)) total += nb.w * q.g_row[static_cast<std::size_t>(nb.v)];
        auto add_exit = [&](VertexClass c, double r) {
            auto it = s.exit_step.find(c);
            if (it == s.exit_step.end()) it = s.exit_step.emplace(c, Vec::Zero(n)).first;
            it->second(i) += r / total;
        };
        if (g.eta(x) > 0.0) add_exit(VertexClass::cemetery, g.eta(x) * q.g_star);
        for (const auto& nb : g.neighbors(x)) {
            const double r = nb.w * q.g_row[static_cast<std::size_t>(nb.v)];
            if (pos[nb.v] >= 0)
                s.P(i, pos[nb.v]) = r / total;
            else
                add_exit(g.vertex_class(nb.v), r);
        }
    }
    return s;
}

// Exit-class distribution of the skeleton started at x, by an absorbing-chain
// linear solve.
inline std::map<VertexClass, double> skeleton_exit_distribution(const Skeleton& s, int x, std::size_t graph_size) {
    const auto pos = index_in(s.U, graph_size);
    const auto n = s.P.rows();
    const Mat A = Mat::Identity(n, n) - s.P;
    Eigen::PartialPivLU<Mat> lu(A);
    std::map<VertexClass, double> out;
    for (const auto& [c, e] : s.exit_step) out[c] = lu.solve(e)(pos.at(x));
    return out;
}

// ---------------------------------------------------------------- exit probability

struct ExitProbabilityResult {
    EstimatorSummary ratio;      // (a) M^1 / M, side share of psi at the root
    EstimatorSummary frequency;  // (b) side exits of the reinforced walk
    std::size_t truncated = 0;
    double truncation_rate = 0.0;
    bool frequency_valid = true;  // truncation rate at most 1%
    double z = 0.0;               // joint z-score of (a) - (b)
    EstimatorSummary quenched;    // (c) side-exit probability of the quenched skeleton given (beta, gamma)
    double z_quenched = 0.0;      // joint z-score of (c) - (b)
};

// Estimators of the probability that the reinforced walk from the root leaves
// a half-space box through its side: the annealed ratio (a), the reinforced
// walk itself (b) and the quenched skeleton averaged over the mixing law (c).
// Each uses its own derived seed.
inline ExitProbabilityResult exit_probability_annealed(const WeightedGraph& g, std::size_t n, std::uint64_t seed,
                                                       unsigned workers = 1, std::size_t jump_budget = 1000000) {
    if (g.vertices_of(VertexClass::top).empty()) throw std::invalid_argument("exit_probability_annealed: need a top class");
    const int root = g.root().value();
    const auto U = g.free_vertices();
    const int r = index_in(U, g.size())[root];
    Vec side_field = Vec::Zero(static_cast<Eigen::Index>(U.size()));
    {
        auto ef = exit_fields(g, U);
        if (auto it = ef.find(VertexClass::side); it != ef.end()) side_field = it->second;
    }
    ExitProbabilityResult out;
    BetaSampler sampler(g);
    auto est_a = [&g, &U, r, sampler, side_field](Stream& rng) mutable {
        const auto& b = sampler.sample_local(rng);
        std::vector<double> beta(g.size(), 0.0);
        for (std::size_t i = 0; i < U.size(); ++i) beta[static_cast<std::size_t>(U[i])] = b[i];
        const Mat H = h_block(g, beta, U);
        const auto llt = factor_spd(H, U);
        Vec e = Vec::Zero(H.rows());
        e(r) = 1.0;
        const Vec grow = llt.solve(e);
        const double m1 = grow.dot(side_field);
        const double m = solve_psi(g, beta, U)(r);
        return std::vector<double>{m1 / m};
    };
    out.ratio = run_replicates(est_a, n, derive_seed(seed, 1), workers).total.at(0);

    StopRule stop;
    stop.jump_budget = jump_budget;
    auto est_b = [&g, root, stop](Stream& rng) {
        const Trajectory t = simulate_vrjp(g, root, stop, rng);
        const double side = t.exit_class == VertexClass::side ? 1.0 : 0.0;
        return std::vector<double>{side, t.truncated ? 1.0 : 0.0};
    };
    const auto rb = run_replicates(est_b, n, derive_seed(seed, 2), workers);
    out.frequency = rb.total.at(0);
    out.truncated = static_cast<std::size_t>(std::llround(rb.total.at(1).mean * static_cast<double>(rb.total.at(1).n)));
    out.truncation_rate = rb.total.at(1).mean;
    out.frequency_valid = out.truncation_rate <= 0.01;
    out.z = z_difference(out.ratio, out.frequency);

    auto est_c = [&g, root, sampler](Stream& rng) mutable {
        const BetaField beta = sampler.sample(rng);
        const auto q = quenched_rates(g, beta, root, sample_gamma(rng));
        const auto dist = skeleton_exit_distribution(quenched_skeleton(g, q), root, g.size());
        const auto it = dist.find(VertexClass::side);
        return std::vector<double>{it == dist.end() ? 0.0 : it->second};
    };
    out.quenched = run_replicates(est_c, n, derive_seed(seed, 3), workers).total.at(0);
    out.z_quenched = z_difference(out.quenched, out.frequency);
    return out;
}

// One row per event: replicate, event index, vertex id, time.
inline void write_trajectory_csv_header(std::ostream& os) { os << "replicate,event,vertex,time\n"; }

inline void write_trajectory_csv(std::ostream& os, std::uint64_t replicate, const Trajectory& t) {
    char buf[64];
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        auto r = std::to_chars(buf, buf + sizeof buf, t.events[i].time);
        os << replicate << ',' << i << ',' << t.events[i].vertex << ',' << std::string_view(buf, r.ptr - buf) << '\n';
    }
}

}  // namespace vrjp
