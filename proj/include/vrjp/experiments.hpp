#pragma once

// Named identity and statistics checks shared by the CLI validate command and
// the acceptance binary. Each check returns a pass flag, short notes and a
// table for CSV output.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "vrjp/beta_field.hpp"
#include "vrjp/errors.hpp"
#include "vrjp/graph.hpp"
#include "vrjp/mc_engine.hpp"
#include "vrjp/renewal.hpp"
#include "vrjp/schrodinger.hpp"
#include "vrjp/stats.hpp"
#include "vrjp/toy_model.hpp"
#include "vrjp/vrjp_sim.hpp"

namespace vrjp {

// ---------------------------------------------------------------- tables

inline std::string cell(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(long x) { return std::to_string(x); }
inline std::string cell(unsigned x) { return std::to_string(x); }
inline std::string cell(std::size_t x) { return std::to_string(x); }
inline std::string cell(bool b) { return b ? "true" : "false"; }
inline std::string cell(const char* s) { return s; }
inline std::string cell(const std::string& s) { return s; }

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    template <class... Ts>
    void row(const Ts&... xs) {
        rows.push_back({cell(xs)...});
    }

    void write_csv(std::ostream& os) const {
        auto line = [&os](const std::vector<std::string>& v) {
            for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
            os << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
    }
};

struct CheckReport {
    std::string name;
    bool pass = true;
    std::vector<std::string> notes;
    Table table;
    std::string body;  // preformatted CSV written instead of the table when set

    void note(const std::string& s) { notes.push_back(s); }
};

inline std::string fmt(double x, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    return os.str();
}

// ---------------------------------------------------------------- test graphs

// Connected random graph on plain vertices: a path backbone, extra edges with
// probability 0.4, a boundary field on about half the vertices (always on
// vertex 0) and an occasional self-loop.
template <class Rng>
WeightedGraph random_test_graph(int nv, Rng& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    WeightedGraph g;
    for (int i = 0; i < nv; ++i) {
        const bool field = i == 0 || u01(rng) < 0.5;
        g.add_vertex(VertexClass::plain, field ? 0.2 + 0.8 * u01(rng) : 0.0);
    }
    for (int i = 0; i + 1 < nv; ++i) g.set_conductance(i, i + 1, 0.5 + 1.5 * u01(rng));
    for (int i = 0; i < nv; ++i)
        for (int j = i + 2; j < nv; ++j)
            if (u01(rng) < 0.4) g.set_conductance(i, j, 0.2 + 1.8 * u01(rng));
    for (int i = 0; i < nv; ++i)
        if (u01(rng) < 0.3) g.set_conductance(i, i, u01(rng));
    g.set_root(0);
    return g;
}

inline WeightedGraph random_test_graph(int nv, std::uint64_t seed, std::uint64_t index) {
    Stream rng(seed, index, 99);
    return random_test_graph(nv, rng);
}

// beta on the free vertices as a per-vertex vector (0 elsewhere).
inline std::vector<double> scatter(const WeightedGraph& g, const std::vector<int>& V, const std::vector<double>& loc) {
    std::vector<double> beta(g.size(), 0.0);
    for (std::size_t i = 0; i < V.size(); ++i) beta[static_cast<std::size_t>(V[i])] = loc[i];
    return beta;
}

// ---------------------------------------------------------------- 1. Laplace

struct LaplaceParams {
    std::size_t n = 100000;
    int probes = 5;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

// Empirical E[exp(-<lambda,beta>/2)] against the closed form, for random
// lambda in [0,1]^V.
inline void laplace_probe(CheckReport& rep, const std::string& label, const WeightedGraph& g, const LaplaceParams& p,
                          std::uint64_t tag, const std::function<std::vector<double>(const std::vector<double>&)>& view =
                                                 nullptr,
                          const WeightedGraph* law_graph = nullptr) {
    const WeightedGraph& law = law_graph ? *law_graph : g;
    Stream lr(p.seed, tag, 7);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<std::vector<double>> lambdas;
    for (int k = 0; k < p.probes; ++k) {
        std::vector<double> lam(law.size(), 0.0);
        for (int v : law.free_vertices()) lam[static_cast<std::size_t>(v)] = u01(lr);
        lambdas.push_back(lam);
    }
    BetaSampler sampler(g);
    const auto V = sampler.vertices();
    auto exp = [&g, &V, &lambdas, &view, sampler](Stream& rng) mutable {
        std::vector<double> beta = scatter(g, V, sampler.sample_local(rng));
        if (view) beta = view(beta);
        std::vector<double> out;
        for (const auto& lam : lambdas) {
            double s = 0.0;
            for (std::size_t i = 0; i < lam.size(); ++i)
                if (lam[i] > 0.0) s += lam[i] * beta[i];
            out.push_back(std::exp(-0.5 * s));
        }
        return out;
    };
    const auto res = run_replicates(exp, p.n, derive_seed(p.seed, tag), p.workers);
    for (int k = 0; k < p.probes; ++k) {
        const double exact = laplace_analytic(law, lambdas[static_cast<std::size_t>(k)]);
        const auto& s = res.total[static_cast<std::size_t>(k)];
        const double z = z_score(s, exact);
        const bool ok = within_policy(z);
        rep.pass = rep.pass && ok;
        rep.table.row(label, k, exact, s.mean, s.std_error(), z, ok);
    }
}

inline CheckReport check_laplace(const LaplaceParams& p) {
    CheckReport rep;
    rep.name = "laplace";
    rep.table.header = {"graph", "probe", "analytic", "estimate", "std_error", "z", "pass"};
    laplace_probe(rep, "box_d2_3x3", build_box_lattice(2, 1, 1.0), p, 1);
    laplace_probe(rep, "random6_a", random_test_graph(6, p.seed, 1), p, 2);
    laplace_probe(rep, "random6_b", random_test_graph(6, p.seed, 2), p, 3);
    return rep;
}

// ---------------------------------------------------------------- 2. IG marginals

struct MarginalParams {
    std::size_t n = 100000;
    std::vector<double> W_grid{0.5, 1.0, 2.0};
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline CheckReport check_ig_marginals(const MarginalParams& p) {
    CheckReport rep;
    rep.name = "marginals";
    rep.table.header = {"case", "vertex", "expected", "estimate", "std_error", "z", "pass"};
    const WeightedGraph box = build_box_lattice(2, 1, 1.0);
    const auto V = box.free_vertices();
    BetaSampler sampler(box);
    auto exp = [sampler](Stream& rng) mutable {
        const auto& b = sampler.sample_local(rng);
        std::vector<double> out;
        for (double x : b) out.push_back(1.0 / x);
        return out;
    };
    const auto res = run_replicates(exp, p.n, derive_seed(p.seed, 20), p.workers);
    for (std::size_t i = 0; i < V.size(); ++i) {
        const int v = V[i];
        double eta_tilde = box.effective_eta(v);
        for (const auto& nb : box.neighbors(v))
            if (!box.absorbing(nb.v)) eta_tilde += nb.w;
        const double expected = 1.0 / eta_tilde;
        const double z = z_score(res.total[i], expected);
        const bool ok = within_policy(z);
        rep.pass = rep.pass && ok;
        rep.table.row("inverse_mean_box_d2_3x3", v, expected, res.total[i].mean, res.total[i].std_error(), z, ok);
    }
    for (std::size_t k = 0; k < p.W_grid.size(); ++k) {
        const double W = p.W_grid[k];
        WeightedGraph g;
        g.add_vertex(VertexClass::interior);
        g.add_conductance(0, g.add_vertex(VertexClass::cemetery), W);
        BetaSampler s1(g);
        auto e1 = [s1, W](Stream& rng) mutable {
            const double r = W / s1.sample_local(rng)[0];
            return std::vector<double>{r * r};
        };
        const auto r1 = run_replicates(e1, p.n, derive_seed(p.seed, 21 + k), p.workers);
        const double expected = 1.0 + 1.0 / W;
        const double z = z_score(r1.total[0], expected);
        const bool ok = within_policy(z);
        rep.pass = rep.pass && ok;
        rep.table.row("one_edge_second_moment_W=" + cell(W), 0, expected, r1.total[0].mean, r1.total[0].std_error(), z, ok);
    }
    return rep;
}

// ---------------------------------------------------------------- 3. restriction / conditioning

struct RestrictionParams {
    int graphs = 10;
    int vertices = 7;
    double tolerance = 1e-12;
    LaplaceParams laplace{};
};

inline CheckReport check_restriction(const RestrictionParams& p) {
    CheckReport rep;
    rep.name = "restriction";
    rep.table.header = {"graph", "kind", "max_abs_diff", "pass"};
    double worst = 0.0;
    for (int gi = 0; gi < p.graphs; ++gi) {
        const WeightedGraph g = random_test_graph(p.vertices, p.laplace.seed, 100 + static_cast<std::uint64_t>(gi));
        Stream rng(p.laplace.seed, 100 + static_cast<std::uint64_t>(gi), 1);
        const BetaField beta = sample_beta(g, rng);
        // A = restriction set, U = conditioned subset of A.
        std::vector<int> A, U;
        for (int v = 0; v < p.vertices; ++v)
            if (v != 1 && v != p.vertices - 2) A.push_back(v);
        U = {A[0], A[2]};
        const WeightedGraph gA = marginal_params(g, A);
        const auto posA = index_in(A, g.size());
        std::vector<int> U_local;
        for (int u : U) U_local.push_back(posA[u]);
        const auto viaA = condition_params(gA, restrict_beta(beta.beta, A), U_local);
        const auto full = condition_params(g, beta.beta, U);
        std::vector<int> S;
        for (int s : viaA.support) S.push_back(A[static_cast<std::size_t>(s)]);
        const auto direct = marginal(full, S);
        double diff = 0.0;
        const auto n = static_cast<Eigen::Index>(S.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            diff = std::max(diff, std::abs(viaA.eta_check(i) - direct.eta_check(i)) / std::max(1.0, std::abs(direct.eta_check(i))));
            for (Eigen::Index j = 0; j < n; ++j)
                diff = std::max(diff, std::abs(viaA.w_check(i, j) - direct.w_check(i, j)) /
                                          std::max(1.0, std::abs(direct.w_check(i, j))));
        }
        worst = std::max(worst, diff);
        const bool ok = diff <= p.tolerance;
        rep.pass = rep.pass && ok;
        rep.table.row(gi, "condition_after_restrict", diff, ok);
    }
    rep.note("max entrywise difference " + fmt(worst));

    // Distributional restriction: beta_A from the full law against the
    // closed form of the restricted law.
    const WeightedGraph g = random_test_graph(p.vertices, p.laplace.seed, 100);
    std::vector<int> A;
    for (int v = 0; v < p.vertices; ++v)
        if (v != 1 && v != p.vertices - 2) A.push_back(v);
    const WeightedGraph gA = marginal_params(g, A);
    CheckReport lap;
    lap.table.header = rep.table.header;
    auto view = [A](const std::vector<double>& b) { return restrict_beta(b, A); };
    laplace_probe(lap, "restricted", g, p.laplace, 30, view, &gA);
    for (const auto& r : lap.table.rows) rep.table.row("restricted_probe_" + r[1], "laplace_z=" + r[5], std::stod(r[5]), r[6] == "true");
    rep.pass = rep.pass && lap.pass;
    return rep;
}

// ---------------------------------------------------------------- 4. martingale

struct MartingaleParams {
    int d = 3;
    int inner = 1;  // U = [-inner, inner]^d
    int outer = 2;  // U' = [-outer, outer]^d
    double W = 1.0;
    int draws = 20;
    std::size_t resamples = 2000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline CheckReport check_martingale(const MartingaleParams& p) {
    CheckReport rep;
    rep.name = "martingale";
    rep.table.header = {"draw", "psi_U", "mean_psi_Uprime", "std_error", "z", "pass"};
    const WeightedGraph g = build_box_lattice(p.d, p.outer, p.W);
    std::vector<int> U;
    for (int v : g.free_vertices()) {
        const auto& c = g.coord(v);
        if (std::all_of(c.begin(), c.end(), [&](int x) { return std::abs(x) <= p.inner; })) U.push_back(v);
    }
    const auto Uall = g.free_vertices();
    const int root = g.root().value();
    const int rU = index_in(U, g.size())[root];
    const int rAll = index_in(Uall, g.size())[root];
    for (int k = 0; k < p.draws; ++k) {
        Stream rng(p.seed, static_cast<std::uint64_t>(k), 40);
        const BetaField field = sample_beta(g, rng);
        const double psiU = solve_psi(g, field.beta, U)(rU);
        const auto spec = condition_params(g, field.beta, U);
        BetaSampler inner(spec, g.size());
        auto exp = [&g, &Uall, rAll, inner, field](Stream& r) mutable {
            const auto& loc = inner.sample_local(r);
            std::vector<double> beta = field.beta;
            for (std::size_t i = 0; i < inner.vertices().size(); ++i)
                beta[static_cast<std::size_t>(inner.vertices()[i])] = loc[i];
            return std::vector<double>{solve_psi(g, beta, Uall)(rAll)};
        };
        const auto res = run_replicates(exp, p.resamples, derive_seed(p.seed, 400 + static_cast<std::uint64_t>(k)), p.workers);
        const double z = z_score(res.total[0], psiU);
        const bool ok = within_policy(z);
        rep.pass = rep.pass && ok;
        rep.table.row(k, psiU, res.total[0].mean, res.total[0].std_error(), z, ok);
    }
    return rep;
}

// ---------------------------------------------------------------- 5. renewal

struct RenewalParams {
    int d = 2;
    int width = 3;   // |x_i| <= (width-1)/2 laterally
    int height = 6;
    double W = 1.0;
    std::vector<std::pair<int, int>> cuts{{1, 1}, {2, 2}, {2, 3}};
    std::size_t replicates = 100;
    std::uint64_t seed = 1;
};

inline CheckReport check_renewal(const RenewalParams& p) {
    CheckReport rep;
    rep.name = "renewal";
    rep.table.header = {"replicate", "k", "ell", "product", "direct", "relative_error", "pass"};
    if (p.width % 2 != 1) throw ConfigError("renewal: width must be odd");
    const WeightedGraph g = build_halfspace_box(p.d, p.height, (p.width + 1) / 2, p.W);
    double worst = 0.0;
    for (std::size_t r = 0; r < p.replicates; ++r) {
        Stream rng(p.seed, r, 50);
        const BetaField beta = sample_beta(g, rng);
        for (auto [k, ell] : p.cuts) {
            try {
                const auto dec = renewal_decompose(g, beta, k, ell);
                worst = std::max(worst, dec.relative_error);
                rep.table.row(r, k, ell, dec.product_value, dec.direct_value, dec.relative_error, true);
            } catch (const IdentityViolation& e) {
                rep.pass = false;
                rep.note(e.what());
                rep.table.row(r, k, ell, 0.0, 0.0, 1.0, false);
            }
        }
    }
    rep.note("max relative error " + fmt(worst));
    return rep;
}

// ---------------------------------------------------------------- 6. oracle

struct OracleParams {
    int draws = 20;
    int Lmax = 80;
    double tolerance = 1e-8;
    std::uint64_t seed = 1;
};

inline std::vector<std::pair<std::string, WeightedGraph>> oracle_graphs(std::uint64_t seed) {
    std::vector<std::pair<std::string, WeightedGraph>> gs;
    gs.emplace_back("random6_a", random_test_graph(6, seed, 1));
    gs.emplace_back("random6_b", random_test_graph(6, seed, 2));
    gs.emplace_back("halfspace_d2_B22", build_halfspace_box(2, 2, 2, 1.0));
    gs.emplace_back("chain_5", build_chain_graph(5, 1.0, 1.0));
    gs.emplace_back("toy_n2_m0", build_toy_graph(2, 0, 1.0, {{0, 1.0}}));
    return gs;
}

inline CheckReport check_oracle(const OracleParams& p) {
    CheckReport rep;
    rep.name = "oracle";
    rep.table.header = {"graph", "draw", "target", "spectral_radius", "max_abs_error", "max_tail_bound", "pass"};
    double worst = 0.0, worst_rho = 0.0;
    std::size_t inapplicable = 0;
    for (const auto& [name, g] : oracle_graphs(p.seed)) {
        const auto U = g.free_vertices();
        const auto pos = index_in(U, g.size());
        for (int k = 0; k < p.draws; ++k) {
            Stream rng(p.seed, static_cast<std::uint64_t>(k), 60);
            const BetaField beta = sample_beta(g, rng);
            const auto sol = psi(g, beta, U);
            auto record = [&](const std::string& target, double err, double bound, double rho) {
                // The tail bound is exact arithmetic; allow rounding at the last few ulps.
                const bool ok = err <= bound + 1e-13 && err < p.tolerance;
                rep.pass = rep.pass && ok;
                worst = std::max(worst, err);
                worst_rho = std::max(worst_rho, rho);
                rep.table.row(name, k, target, rho, err, bound, ok);
            };
            try {
                double err = 0.0, bound = 0.0, rho = 0.0;
                for (int x : U) {
                    const auto ps = path_sum_oracle(g, beta, U, x, PathTarget::exterior(), p.Lmax);
                    err = std::max(err, std::abs(ps.value - sol.psi[static_cast<std::size_t>(x)]));
                    bound = std::max(bound, ps.tail_bound);
                    rho = ps.spectral_radius;
                }
                record("psi", err, bound, rho);
                err = bound = 0.0;
                for (int x : U)
                    for (int y : U) {
                        const auto ps = path_sum_oracle(g, beta, U, x, PathTarget::at_vertex(y), p.Lmax);
                        err = std::max(err, std::abs(ps.value - sol.green(pos[x], pos[y])));
                        bound = std::max(bound, ps.tail_bound);
                    }
                record("green", err, bound, rho);
                if (g.root()) {
                    for (const auto& [cls, mass] : sol.boundary_mass) {
                        const auto ps = path_sum_oracle(g, beta, U, *g.root(), PathTarget::of_class(cls), p.Lmax);
                        record(std::string("class_") + to_string(cls), std::abs(ps.value - mass), ps.tail_bound, rho);
                    }
                }
            } catch (const OracleInapplicable& e) {
                ++inapplicable;
                rep.pass = false;
                rep.table.row(name, k, "inapplicable", 1.0, 0.0, 0.0, false);
            }
        }
    }
    rep.note("max abs error " + fmt(worst) + ", max spectral radius " + fmt(worst_rho) + ", inapplicable " +
             std::to_string(inapplicable));
    return rep;
}

// ---------------------------------------------------------------- 7. exit probability

struct ExitProbParams {
    int d = 2;
    int height = 2;
    int half_width = 3;  // B_{height, half_width}
    std::vector<double> W_grid{0.5, 1.0, 2.0};
    std::size_t n = 20000;
    double sigma = 3.0;
    std::size_t jump_budget = 1000000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline CheckReport check_exitprob(const ExitProbParams& p) {
    CheckReport rep;
    rep.name = "exitprob";
    rep.table.header = {"W", "ratio_estimate", "ratio_se", "vrjp_frequency", "vrjp_se", "truncation_rate", "z",
                        "quenched_estimate", "quenched_se", "z_quenched", "pass"};
    for (std::size_t i = 0; i < p.W_grid.size(); ++i) {
        const double W = p.W_grid[i];
        const WeightedGraph g = build_halfspace_box(p.d, p.height, p.half_width, W);
        const auto r = exit_probability_annealed(g, p.n, derive_seed(p.seed, 70 + i), p.workers, p.jump_budget);
        const bool ok = r.frequency_valid && within_policy(r.z, p.sigma) && within_policy(r.z_quenched);
        rep.pass = rep.pass && ok;
        rep.table.row(W, r.ratio.mean, r.ratio.std_error(), r.frequency.mean, r.frequency.std_error(), r.truncation_rate,
                      r.z, r.quenched.mean, r.quenched.std_error(), r.z_quenched, ok);
    }
    return rep;
}

// ---------------------------------------------------------------- 8. chain identity and toy moments

struct ToyCase {
    ToyMomentSpec spec;
    std::size_t n = 100000;
    std::size_t mom_buckets = 0;
};

struct ToyParams {
    std::vector<ToyCase> cases{{{2, 1, 0, 1.0, 1.0}, 1000000, 0},
                               {{2, 2, 1, 0.5, 1.0}, 50000000, 0},
                               {{3, 1, 0, 1.0, 1.0}, 2000000, kToyBuckets}};
    int ell_max = 8;
    std::size_t chain_replicates = 1000;
    double chain_epsilon = 0.5;
    double chain_eta0 = 1.0;
    double tolerance = 1e-12;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline CheckReport check_chain_identity(const ToyParams& p) {
    CheckReport rep;
    rep.name = "chain";
    rep.table.header = {"ell", "replicates", "max_relative_difference", "pass"};
    for (int ell = 0; ell <= p.ell_max; ++ell) {
        double worst = 0.0;
        for (std::size_t r = 0; r < p.chain_replicates; ++r) {
            Stream rng(p.seed, r, 80 + static_cast<std::uint64_t>(ell));
            const auto c = chain_partition_identity(ell, p.chain_epsilon, p.chain_eta0, rng);
            worst = std::max(worst, c.relative_difference);
        }
        const bool ok = worst <= p.tolerance;
        rep.pass = rep.pass && ok;
        rep.table.row(ell, p.chain_replicates, worst, ok);
    }
    return rep;
}

inline CheckReport check_toy_moments(const ToyParams& p) {
    CheckReport rep;
    rep.name = "toy";
    rep.table.header = {"p", "k", "m", "epsilon", "eta0", "replicates", "closed_form", "estimator", "estimate",
                        "std_error", "z", "heavy_tail_warning", "pass"};
    for (std::size_t i = 0; i < p.cases.size(); ++i) {
        const auto& c = p.cases[i];
        const auto r = toy_moment_check(c.spec, c.n, derive_seed(p.seed, 90 + i), p.workers, c.mom_buckets);
        const bool ok = within_policy(r.z);
        rep.pass = rep.pass && ok;
        if (r.heavy_tail) rep.note("heavy-tail warning for case " + std::to_string(i));
        rep.table.row(c.spec.p, c.spec.k, c.spec.m, c.spec.epsilon, c.spec.eta0, c.n, r.closed_form,
                      r.median_of_means ? "median_of_means" : "mean", r.estimate, r.std_error, r.z, r.heavy_tail, ok);
    }
    return rep;
}

// ---------------------------------------------------------------- 9. negative-moment identity

struct RapenneParams {
    int d = 2;
    int n = 2;  // box [-n,n]^d
    double W = 1.0;
    std::size_t replicates = 200000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline CheckReport check_rapenne(const RapenneParams& p) {
    CheckReport rep;
    rep.name = "rapenne";
    rep.table.header = {"W", "p", "estimate", "std_error", "identity_z", "pass"};
    const int d = p.d, n = p.n;
    const auto rows = moment_suite([d, n](double W) { return build_box_lattice(d, n, W); }, {p.W}, {1, -2, 3},
                                   p.replicates, derive_seed(p.seed, 110), p.workers);
    for (const auto& r : rows) {
        const bool ok = within_policy(r.identity_z);
        rep.pass = rep.pass && ok;
        rep.table.row(r.W, r.p, r.summary.mean, r.summary.std_error(), r.identity_z, ok);
    }
    return rep;
}

// ---------------------------------------------------------------- 10. convex order

struct ConvexParams {
    int box_d = 3;
    int box_n = 1;
    std::vector<double> W_grid{0.5, 1.0, 2.0, 4.0};
    std::size_t box_replicates = 100000;
    int chain_d = 3;
    int chain_n = 3;
    int chain_m = 1;
    double chain_W = 2.0;
    double chain_epsilon = 0.5;
    std::size_t chain_replicates = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline CheckReport check_convex(const ConvexParams& p) {
    CheckReport rep;
    rep.name = "convex";
    rep.table.header = {"test", "label", "estimate", "std_error", "z_step", "pass"};
    const int d = p.box_d, n = p.box_n;
    const auto rows = moment_suite([d, n](double W) { return build_box_lattice(d, n, W); }, p.W_grid, {2},
                                   p.box_replicates, derive_seed(p.seed, 120), p.workers);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double z = 0.0;
        bool ok = true;
        if (i > 0) {
            z = z_difference(rows[i].summary, rows[i - 1].summary);
            ok = z <= kSigmaPolicy;
        }
        rep.pass = rep.pass && ok;
        rep.table.row("box_second_moment", "W=" + cell(rows[i].W), rows[i].summary.mean, rows[i].summary.std_error(), z, ok);
    }
    const auto chain = convex_order_chain_test(p.chain_d, p.chain_n, p.chain_m, p.chain_W, p.chain_epsilon,
                                               {ConvexFunction::square}, p.chain_replicates,
                                               derive_seed(p.seed, 121), p.workers);
    for (const auto& r : chain) {
        for (std::size_t j = 0; j < r.stage.size(); ++j) {
            double z = 0.0;
            bool ok = true;
            if (j > 0) {
                z = z_score(r.step[j - 1], 0.0);
                ok = r.step_ok[j - 1];
            }
            rep.pass = rep.pass && ok;
            rep.table.row(std::string("chain_") + to_string(r.f), "G" + std::to_string(j), r.stage[j].mean,
                          r.stage[j].std_error(), z, ok);
        }
    }
    return rep;
}

// ---------------------------------------------------------------- 11. tail bound

struct TailParams {
    int d = 2;
    int width = 3;
    int levels = 6;
    std::vector<double> W_grid{0.5, 2.0};
    std::vector<double> t_grid{2.0, 4.0, 8.0};
    std::size_t replicates = 20000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline CheckReport check_tail(const TailParams& p) {
    CheckReport rep;
    rep.name = "tail";
    rep.table.header = {"W", "t", "probability", "std_error", "bound", "t_times_p", "pass"};
    for (std::size_t i = 0; i < p.W_grid.size(); ++i) {
        const WeightedGraph g = build_halfspace_box(p.d, p.levels, (p.width + 1) / 2, p.W_grid[i]);
        const auto rows = tail_suite(g, p.t_grid, p.replicates, derive_seed(p.seed, 130 + i), p.workers);
        for (const auto& r : rows) {
            rep.pass = rep.pass && r.ok;
            rep.table.row(p.W_grid[i], r.t, r.exceed.mean, r.exceed.std_error(), r.bound, r.t_times_p, r.ok);
        }
    }
    return rep;
}

// ---------------------------------------------------------------- 12. overshoot machinery

struct OvershootParams {
    int d = 2;
    int width = 3;
    int height = 4;
    int cut = 1;
    double W = 1.0;
    std::size_t replicates = 100;
    int configurations = 5;
    std::size_t resamples = 20000;
    double tolerance = 1e-12;
    double lambda0 = 0.5;
    std::vector<double> lambdas{0.5, 1.0, 2.0};
    std::vector<double> A_grid{2.0, 4.0, 8.0};
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline CheckReport check_overshoot(const OvershootParams& p) {
    CheckReport rep;
    rep.name = "overshoot";
    rep.table.header = {"test", "label", "value", "reference", "z_or_residual", "pass"};
    const WeightedGraph g = build_halfspace_box(p.d, p.height, (p.width + 1) / 2, p.W);
    const auto cut = cut_vertices(g, p.cut);

    // Tower identity R_{n-1} = X_{n-1} + Y_{n-1} along the enumeration.
    double worst = 0.0;
    for (std::size_t r = 0; r < p.replicates; ++r) {
        Stream rng(p.seed, r, 140);
        const BetaField beta = sample_beta(g, rng);
        const auto tr = overshoot_trace(g, beta, 2.0, 2.0, p.cut);
        for (std::size_t i = 0; i < tr.tower_residual.size(); ++i) {
            worst = std::max(worst, tr.tower_residual[i] / tr.r_sequence[i]);
            worst = std::max(worst, tr.decomposition_residual[i] / tr.r_sequence[i + 1]);
        }
    }
    {
        const bool ok = worst <= p.tolerance;
        rep.pass = rep.pass && ok;
        rep.table.row("tower", "max_relative_residual", worst, p.tolerance, worst, ok);
    }

    // Conditional law of Z_n given beta on Lambda_{n-1}, and the second moment
    // of M_check_1 at the next cut vertex given beta on Lambda_n.
    for (int c = 0; c < p.configurations; ++c) {
        Stream rng(p.seed, static_cast<std::uint64_t>(c), 141);
        const BetaField beta = sample_beta(g, rng);
        const int n = 1 + c % static_cast<int>(cut.size());
        const auto Lp = lambda_set(g, p.cut, cut, n - 1);
        const int zn = cut[static_cast<std::size_t>(n - 1)];
        const auto spec = marginal(condition_params(g, beta.beta, Lp), {zn});
        const double w_self = spec.w_check(0, 0), eta_check = spec.eta_check(0);
        auto Ln = Lp;
        Ln.push_back(zn);
        const int zpos = static_cast<int>(Ln.size()) - 1;
        auto ez = [&g, &Ln, zpos, zn, w_self, eta_check, beta](Stream& r) {
            std::vector<double> b = beta.beta;
            b[static_cast<std::size_t>(zn)] = sample_beta_single(w_self, eta_check, r);
            const double Z = solve_psi(g, b, Ln)(zpos);
            return std::vector<double>{Z, Z * Z};
        };
        const auto rz = run_replicates(ez, p.resamples, derive_seed(p.seed, 1410 + static_cast<std::uint64_t>(c)), p.workers);
        const double z1 = z_score(rz.total[0], 1.0);
        const double z2 = z_score(rz.total[1], 1.0 + 1.0 / eta_check);
        const bool ok1 = within_policy(z1), ok2 = within_policy(z2);
        rep.pass = rep.pass && ok1 && ok2;
        const std::string label = "config" + std::to_string(c) + "_n" + std::to_string(n);
        rep.table.row("Z_mean", label, rz.total[0].mean, 1.0, z1, ok1);
        rep.table.row("Z_second_moment", label, rz.total[1].mean, 1.0 + 1.0 / eta_check, z2, ok2);

        if (static_cast<std::size_t>(n) < cut.size()) {
            const int w = cut[static_cast<std::size_t>(n)];
            const auto rest = condition_params(g, beta.beta, Ln);
            BetaSampler outer(rest, g.size());
            const int k = p.cut;
            auto em = [&g, outer, beta, w, k](Stream& r) mutable {
                const auto& loc = outer.sample_local(r);
                BetaField b = beta;
                for (std::size_t i = 0; i < outer.vertices().size(); ++i)
                    b.beta[static_cast<std::size_t>(outer.vertices()[i])] = loc[i];
                const auto dec = renewal_decompose(g, b, k, 1);
                const double m = dec.m_check.at(w);
                return std::vector<double>{m * m};
            };
            const auto rm = run_replicates(em, p.resamples, derive_seed(p.seed, 1420 + static_cast<std::uint64_t>(c)), p.workers);
            const double bound = 1.0 + 1.0 / p.W;
            const bool ok = below_policy(rm.total[0], bound);
            rep.pass = rep.pass && ok;
            rep.table.row("Mcheck_second_moment", label, rm.total[0].mean, bound,
                          z_score(rm.total[0], bound), ok);
        }
    }

    for (const auto& r : ig_tail_check(p.lambda0, p.lambdas, p.A_grid)) {
        rep.pass = rep.pass && r.within_bound;
        rep.table.row("ig_tail", "lambda=" + cell(r.lambda) + "_A=" + cell(r.A), r.ratio, r.bound, r.ratio, r.within_bound);
    }
    return rep;
}

// ---------------------------------------------------------------- IG tail lemma alone

inline CheckReport check_igtail(const OvershootParams& p) {
    CheckReport rep;
    rep.name = "igtail";
    rep.table.header = {"lambda", "A", "tail_probability", "ratio", "bound", "pass"};
    for (const auto& r : ig_tail_check(p.lambda0, p.lambdas, p.A_grid)) {
        rep.pass = rep.pass && r.within_bound;
        rep.table.row(r.lambda, r.A, r.tail_probability, r.ratio, r.bound, r.within_bound);
    }
    return rep;
}

}  // namespace vrjp
