#pragma once

// Replicated Monte Carlo: deterministic parallel execution and the standard
// experiment suites built on it.
//
// Replicate r always runs on Stream(master_seed, r). Replicates are grouped in
// fixed blocks of consecutive indices; each block is summarized sequentially
// and block summaries are merged in index order, so every summary is
// bit-identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "vrjp/beta_field.hpp"
#include "vrjp/errors.hpp"
#include "vrjp/graph.hpp"
#include "vrjp/renewal.hpp"
#include "vrjp/rng.hpp"
#include "vrjp/schrodinger.hpp"
#include "vrjp/stats.hpp"

namespace vrjp {

class DegeneracyBudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kAbortBudget = 1e-3;
inline constexpr std::size_t kBlockSize = 1024;

struct RunResult {
    std::size_t requested = 0;
    std::size_t aborted = 0;
    std::size_t block_size = kBlockSize;
    std::vector<EstimatorSummary> total;               // per coordinate
    std::vector<std::vector<EstimatorSummary>> blocks; // [block][coordinate]

    // Coordinate `c` regrouped into `count` contiguous buckets of blocks.
    std::vector<EstimatorSummary> buckets(std::size_t c, std::size_t count) const {
        count = std::min(count, blocks.size());
        std::vector<EstimatorSummary> out(count);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (blocks[b].empty()) continue;
            const std::size_t k = b * count / blocks.size();
            out[k] = EstimatorSummary::merge(out[k], blocks[b][c]);
        }
        return out;
    }
};

// experiment: (Stream&) -> std::vector<double> of fixed length. Each worker
// runs its own copy of the functor, so captured scratch buffers are private.
// DegenerateError aborts only the replicate; more than kAbortBudget aborted
// replicates fail the run.
template <class F>
RunResult run_replicates(const F& experiment, std::size_t n, std::uint64_t master_seed, unsigned workers = 1,
                         std::size_t block_size = kBlockSize) {
    if (block_size == 0) throw std::invalid_argument("run_replicates: block size must be positive");
    const std::size_t nblocks = (n + block_size - 1) / block_size;
    struct BlockOut {
        std::vector<EstimatorSummary> s;
        std::size_t aborted = 0;
        std::exception_ptr error;
    };
    std::vector<BlockOut> outs(nblocks);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto work = [&]() {
        F local = experiment;
        while (!failed.load()) {
            const std::size_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            auto& out = outs[b];
            try {
                const std::size_t hi = std::min(n, (b + 1) * block_size);
                for (std::size_t r = b * block_size; r < hi; ++r) {
                    Stream rng(master_seed, r);
                    std::vector<double> v;
                    try {
                        v = local(rng);
                    } catch (const DegenerateError&) {
                        ++out.aborted;
                        continue;
                    }
                    if (out.s.empty()) out.s.resize(v.size());
                    if (v.size() != out.s.size()) throw std::logic_error("experiment returned a varying number of values");
                    for (std::size_t i = 0; i < v.size(); ++i) out.s[i].add(v[i]);
                }
            } catch (...) {
                out.error = std::current_exception();
                failed.store(true);
            }
        }
    };

    workers = std::max(1u, workers);
    if (workers == 1 || nblocks <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < std::min<std::size_t>(workers, nblocks); ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    RunResult res;
    res.requested = n;
    res.block_size = block_size;
    std::size_t dim = 0;
    for (auto& o : outs) {
        if (o.error) std::rethrow_exception(o.error);
        res.aborted += o.aborted;
        dim = std::max(dim, o.s.size());
    }
    res.total.assign(dim, EstimatorSummary{});
    for (auto& o : outs) {
        if (!o.s.empty() && o.s.size() != dim) throw std::logic_error("experiment returned a varying number of values");
        for (std::size_t i = 0; i < o.s.size(); ++i) res.total[i] = EstimatorSummary::merge(res.total[i], o.s[i]);
        res.blocks.push_back(std::move(o.s));
    }
    if (static_cast<double>(res.aborted) > kAbortBudget * static_cast<double>(n))
        throw DegeneracyBudgetExceeded(std::to_string(res.aborted) + " of " + std::to_string(n) +
                                       " replicates aborted on degenerate pivots");
    return res;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
    return splitmix64(master ^ splitmix64(tag + 0x5851F42D4C957F2DULL));
}

inline constexpr double kNegativeMomentFloor = 1e-300;

// ---------------------------------------------------------------- moment suite

struct MomentRow {
    double W = 0.0;
    int p = 1;
    EstimatorSummary summary;
    double identity_z = 0.0;  // z-score of E[psi^-2] - E[psi^3] for this W
    bool heavy_tail = false;
};

// E[psi(root)^p] on family(W) for each W; a common master seed across W.
inline std::vector<MomentRow> moment_suite(const std::function<WeightedGraph(double)>& family,
                                           const std::vector<double>& W_grid, const std::vector<int>& p_set,
                                           std::size_t n, std::uint64_t seed, unsigned workers = 1) {
    for (int p : p_set)
        if (p != -2 && (p < 1 || p > 3)) throw std::invalid_argument("moment_suite: p must be in {-2,1,2,3}");
    std::vector<MomentRow> rows;
    for (double W : W_grid) {
        const WeightedGraph g = family(W);
        const auto U = g.free_vertices();
        const int r = index_in(U, g.size())[g.root().value()];
        BetaSampler sampler(g);
        auto exp = [&g, &U, r, sampler, &p_set](Stream& rng) mutable {
            const auto& b = sampler.sample_local(rng);
            std::vector<double> beta(g.size(), 0.0);
            for (std::size_t i = 0; i < U.size(); ++i) beta[U[i]] = b[i];
            const double x = solve_psi(g, beta, U)(r);
            if (!(x > kNegativeMomentFloor)) throw DegenerateError("psi below the negative-moment floor");
            std::vector<double> out;
            for (int p : p_set) out.push_back(std::pow(x, p));
            out.push_back(1.0 / (x * x) - x * x * x);
            return out;
        };
        const auto res = run_replicates(exp, n, seed, workers);
        const double idz = z_score(res.total.back(), 0.0);
        for (std::size_t i = 0; i < p_set.size(); ++i) {
            MomentRow row;
            row.W = W;
            row.p = p_set[i];
            row.summary = res.total[i];
            row.identity_z = idz;
            row.heavy_tail = std::abs(p_set[i]) >= 2 && row.summary.ci95() > 0.1 * std::abs(row.summary.mean);
            rows.push_back(row);
        }
    }
    return rows;
}

// ---------------------------------------------------------------- phase scan

enum class ScanFamily { box, slab };

struct PhaseRow {
    double W = 0.0;
    EstimatorSummary slope;                  // per-replicate slope of log psi_n against n
    std::vector<EstimatorSummary> mean_log;  // E[log psi_n] per n in the grid
    EstimatorSummary below_0p1;              // P(psi_nmax < 0.1)
    EstimatorSummary below_0p01;
    bool monotone_ok = true;                 // slope not significantly below the previous W
};

struct PhaseScan {
    std::vector<int> n_grid;
    std::vector<PhaseRow> rows;
    // [W_lo, W_hi]: last W whose slope is significantly negative and the next
    // W whose slope is not. An empirical, uncertified crossover window.
    std::optional<std::pair<double, double>> crossover;
    std::string crossover_status;
};

inline PhaseScan phase_scan(int d, ScanFamily family, const std::vector<int>& n_grid, const std::vector<double>& W_grid,
                            std::size_t n, std::uint64_t seed, unsigned workers = 1, int slab_width = 3) {
    if (n_grid.size() < 2) throw std::invalid_argument("phase_scan: need at least two sizes");
    if (d < 1 || d > 3) throw std::invalid_argument("phase_scan: d must be in 1..3");
    const int nmax = *std::max_element(n_grid.begin(), n_grid.end());
    if (nmax > 10 || W_grid.size() > 16) throw std::invalid_argument("phase_scan: beyond desk-scale limits");
    if (slab_width < 1 || slab_width % 2 == 0) throw std::invalid_argument("phase_scan: slab width must be odd");
    PhaseScan scan;
    scan.n_grid = n_grid;
    for (double W : W_grid) {
        const WeightedGraph g = family == ScanFamily::box ? build_box_lattice(d, nmax, W)
                                                          : build_halfspace_box(d, nmax, (slab_width + 1) / 2, W);
        // Nested domains, one per grid size.
        std::vector<std::vector<int>> domains;
        for (int k : n_grid) {
            std::vector<int> U;
            for (int v : g.free_vertices()) {
                const auto& c = g.coord(v);
                const bool in = family == ScanFamily::box
                                    ? std::all_of(c.begin(), c.end(), [k](int x) { return std::abs(x) <= k; })
                                    : c.back() < k;
                if (in) U.push_back(v);
            }
            domains.push_back(std::move(U));
        }
        const int root = g.root().value();
        BetaSampler sampler(g);
        std::vector<double> xs(n_grid.begin(), n_grid.end());
        auto exp = [&g, &domains, root, sampler, xs](Stream& rng) mutable {
            const auto& b = sampler.sample_local(rng);
            const auto& V = sampler.vertices();
            std::vector<double> beta(g.size(), 0.0);
            for (std::size_t i = 0; i < V.size(); ++i) beta[V[i]] = b[i];
            std::vector<double> logs;
            double last = 1.0;
            for (const auto& U : domains) {
                const double x = U.empty() ? 1.0 : solve_psi(g, beta, U)(index_in(U, g.size())[root]);
                logs.push_back(std::log(x));
                last = x;
            }
            std::vector<double> out{fit_slope(xs, logs).slope};
            out.insert(out.end(), logs.begin(), logs.end());
            out.push_back(last < 0.1 ? 1.0 : 0.0);
            out.push_back(last < 0.01 ? 1.0 : 0.0);
            return out;
        };
        const auto res = run_replicates(exp, n, seed, workers);
        PhaseRow row;
        row.W = W;
        row.slope = res.total[0];
        row.mean_log.assign(res.total.begin() + 1, res.total.begin() + 1 + static_cast<long>(n_grid.size()));
        row.below_0p1 = res.total[1 + n_grid.size()];
        row.below_0p01 = res.total[2 + n_grid.size()];
        if (!scan.rows.empty()) {
            const auto& prev = scan.rows.back().slope;
            const double se = std::hypot(prev.std_error(), row.slope.std_error());
            row.monotone_ok = row.slope.mean >= prev.mean - kSigmaPolicy * se;
        }
        scan.rows.push_back(row);
    }
    auto negative = [](const EstimatorSummary& s) { return s.mean + kSigmaPolicy * s.std_error() < 0.0; };
    scan.crossover_status = "all slopes significantly negative: crossover above the grid";
    for (std::size_t i = 0; i < scan.rows.size(); ++i) {
        if (!negative(scan.rows[i].slope)) {
            if (i == 0) {
                scan.crossover_status = "no significantly negative slope: crossover below the grid";
            } else {
                scan.crossover = std::make_pair(scan.rows[i - 1].W, scan.rows[i].W);
                scan.crossover_status = "empirical window (not certified)";
            }
            break;
        }
    }
    return scan;
}

// ---------------------------------------------------------------- tail suite

struct TailRow {
    double t = 0.0;
    EstimatorSummary exceed;  // indicator of sup_{n<=N} M_n >= t
    double bound = 0.0;       // 1/t
    bool ok = true;
    double t_times_p = 0.0;
};

inline std::vector<TailRow> tail_suite(const WeightedGraph& g, const std::vector<double>& t_grid, std::size_t n,
                                       std::uint64_t seed, unsigned workers = 1) {
    BetaSampler sampler(g);
    auto exp = [&g, sampler, &t_grid](Stream& rng) mutable {
        const BetaField beta = sampler.sample(rng);
        const auto path = martingale_path(g, beta);
        const double sup = *std::max_element(path.begin(), path.end());
        std::vector<double> out;
        for (double t : t_grid) out.push_back(sup >= t ? 1.0 : 0.0);
        return out;
    };
    const auto res = run_replicates(exp, n, seed, workers);
    std::vector<TailRow> rows;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        TailRow r;
        r.t = t_grid[i];
        r.exceed = res.total[i];
        r.bound = 1.0 / t_grid[i];
        r.ok = below_policy(r.exceed, r.bound);
        r.t_times_p = t_grid[i] * r.exceed.mean;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace vrjp
