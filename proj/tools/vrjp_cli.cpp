// vrjp_cli: validate, scan, simulate, toy, renewal, exitprob.
//
// Exit codes: 0 pass, 1 assertion failure, 2 config error, 3 degeneracy budget
// exceeded.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vrjp/config.hpp"
#include "vrjp/experiments.hpp"

#ifndef VRJP_VERSION
#define VRJP_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace vrjp;

namespace {

enum ExitCode { kPass = 0, kFail = 1, kConfig = 2, kDegenerate = 3 };

struct ScanParams {
    std::vector<int> d_grid{2};
    ScanFamily family = ScanFamily::slab;
    std::vector<int> n_grid{1, 2, 3, 4};
    std::vector<double> W_grid{0.25, 0.5, 1.0, 2.0, 4.0};
    std::size_t replicates = 2000;
    int slab_width = 3;
    std::vector<int> p_set{1, 2, 3, -2};
    std::vector<double> t_grid{1.0, 2.0, 4.0, 8.0};
    int levels = 6;
};

struct SimulateParams {
    std::string graph = "halfspace";
    std::string graph_file;
    int d = 2, n = 2, m = 3;
    double W = 1.0;
    std::string process = "vrjp";
    std::size_t replicates = 10;
    double horizon = std::numeric_limits<double>::infinity();
    std::size_t jump_budget = 1000000;
    int start = -1;
};

struct UniformParams {
    std::vector<int> n_grid{2, 4, 6, 8};
    int m = 0;
    double epsilon = 1.0;
    std::string mu0 = "uniform 0.5 3";
    WeightSampler sampler;
    double eta0 = 1.0;
    double epsilon0 = 0.0;  // 0: derived from p, m, epsilon
    int p = 2;
    std::size_t replicates = 20000;
};

struct Settings {
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string out = "vrjp_out";
    LaplaceParams laplace;
    MarginalParams marginals;
    RestrictionParams restriction;
    MartingaleParams martingale;
    RenewalParams renewal;
    OracleParams oracle;
    ExitProbParams exitprob;
    ToyParams toy;
    RapenneParams rapenne;
    ConvexParams convex;
    TailParams tail;
    OvershootParams overshoot;
    ScanParams scan;
    SimulateParams simulate;
    UniformParams uniform;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    unsigned workers = 1;
};

std::size_t count(Config& c, const std::string& s, const std::string& k, std::size_t def) {
    return static_cast<std::size_t>(c.integer(s, k, static_cast<long long>(def), Config::at_least(1)));
}

int small(Config& c, const std::string& s, const std::string& k, int def, int lo, int hi) {
    return static_cast<int>(c.integer(s, k, def, Config::between(lo, hi)));
}

int odd(Config& c, const std::string& s, const std::string& k, int def, int hi) {
    const int w = small(c, s, k, def, 1, hi);
    if (w % 2 == 0) c.fail(s, k, "must be odd");
    return w;
}

std::vector<int> ints(Config& c, const std::string& s, const std::string& k, const std::vector<int>& def,
                      const Config::Check& check) {
    std::vector<long long> d(def.begin(), def.end());
    const auto v = c.integers(s, k, d, check);
    return {v.begin(), v.end()};
}

WeightSampler parse_mu0(Config& c, const std::string& spec) {
    std::istringstream ss(spec);
    std::string kind;
    ss >> kind;
    try {
        if (kind == "point") {
            double x;
            if (ss >> x) return WeightSampler::point(x);
        } else if (kind == "uniform") {
            double a, b;
            if (ss >> a >> b) return WeightSampler::uniform(a, b);
        } else if (kind == "file") {
            std::string path;
            if (ss >> path) return WeightSampler::from_file(path);
        }
    } catch (const std::invalid_argument& e) {
        c.fail("toy_uniform", "mu0", e.what());
    }
    c.fail("toy_uniform", "mu0", "expected 'point X', 'uniform A B' or 'file PATH'");
}

// Every key of every section is resolved and validated here, before any
// computation, whichever command runs.
Settings resolve(Config& c, const Overrides& o) {
    Settings st;
    const auto pos = Config::positive();
    st.seed = c.u64("run", "seed", 1);
    if (o.seed) {
        st.seed = *o.seed;
        c.set_resolved("run.seed", std::to_string(*o.seed));
    }
    st.out = c.text("run", "out", "vrjp_out");
    if (o.out) st.out = *o.out;
    c.forget("run.out");
    st.workers = o.workers;

    auto fixed = [&c](const std::string& key, double built_in) {
        const double x = c.real("tolerances", key, built_in, Config::positive());
        if (x != built_in) c.fail("tolerances", key, "fixed at build time to " + Config::format(built_in));
    };
    fixed("algebraic", kRenewalTolerance);
    fixed("sigma", kSigmaPolicy);
    fixed("pivot_floor", kPivotFloor);

    auto& la = st.laplace;
    la.n = count(c, "laplace", "n", la.n);
    la.probes = small(c, "laplace", "probes", la.probes, 1, 100);

    auto& mg = st.marginals;
    mg.n = count(c, "marginals", "n", mg.n);
    mg.W_grid = c.reals("marginals", "W_grid", mg.W_grid, pos);

    auto& rs = st.restriction;
    rs.graphs = small(c, "restriction", "graphs", rs.graphs, 1, 1000);
    rs.vertices = small(c, "restriction", "vertices", rs.vertices, 5, 200);
    rs.tolerance = c.real("restriction", "tolerance", rs.tolerance, pos);
    rs.laplace.n = count(c, "restriction", "n", la.n);
    rs.laplace.probes = small(c, "restriction", "probes", la.probes, 1, 100);

    auto& ma = st.martingale;
    ma.d = small(c, "martingale", "d", ma.d, 1, 3);
    ma.inner = small(c, "martingale", "inner", ma.inner, 0, 10);
    ma.outer = small(c, "martingale", "outer", ma.outer, 1, 10);
    if (ma.outer <= ma.inner) c.fail("martingale", "outer", "must exceed inner");
    ma.W = c.real("martingale", "W", ma.W, pos);
    ma.draws = small(c, "martingale", "draws", ma.draws, 1, 100000);
    ma.resamples = count(c, "martingale", "resamples", ma.resamples);

    auto& re = st.renewal;
    re.d = small(c, "renewal", "d", re.d, 2, 3);
    re.width = odd(c, "renewal", "width", re.width, 21);
    re.height = small(c, "renewal", "height", re.height, 2, 100);
    re.W = c.real("renewal", "W", re.W, pos);
    {
        std::string def;
        for (auto [k, l] : re.cuts) def += (def.empty() ? "" : ",") + std::to_string(k) + " " + std::to_string(l);
        re.cuts.clear();
        for (const auto& r : c.records("renewal", "cuts", def, 2)) {
            const int k = static_cast<int>(r[0]), l = static_cast<int>(r[1]);
            if (k < 1 || l < 1 || k != r[0] || l != r[1]) c.fail("renewal", "cuts", "cut levels must be positive integers");
            if (k + l > re.height) c.fail("renewal", "cuts", "k + ell must not exceed the height");
            re.cuts.emplace_back(k, l);
        }
    }
    re.replicates = count(c, "renewal", "replicates", re.replicates);

    auto& orc = st.oracle;
    orc.draws = small(c, "oracle", "draws", orc.draws, 1, 100000);
    orc.Lmax = small(c, "oracle", "Lmax", orc.Lmax, 1, 10000);
    orc.tolerance = c.real("oracle", "tolerance", orc.tolerance, pos);

    auto& ex = st.exitprob;
    ex.d = small(c, "exitprob", "d", ex.d, 2, 3);
    ex.height = small(c, "exitprob", "height", ex.height, 1, 50);
    ex.half_width = small(c, "exitprob", "half_width", ex.half_width, 1, 50);
    ex.W_grid = c.reals("exitprob", "W_grid", ex.W_grid, pos);
    ex.n = count(c, "exitprob", "n", ex.n);
    ex.sigma = c.real("exitprob", "sigma", ex.sigma, pos);
    ex.jump_budget = count(c, "exitprob", "jump_budget", ex.jump_budget);

    auto& ty = st.toy;
    ty.ell_max = small(c, "chain", "ell_max", ty.ell_max, 0, 1000);
    ty.chain_replicates = count(c, "chain", "replicates", ty.chain_replicates);
    ty.chain_epsilon = c.real("chain", "epsilon", ty.chain_epsilon, pos);
    ty.chain_eta0 = c.real("chain", "eta0", ty.chain_eta0, pos);
    ty.tolerance = c.real("chain", "tolerance", ty.tolerance, pos);
    {
        std::string def;
        for (const auto& tc : ty.cases) {
            const auto& s = tc.spec;
            def += (def.empty() ? "" : ",") + std::to_string(s.p) + " " + std::to_string(s.k) + " " + std::to_string(s.m) +
                   " " + Config::format(s.epsilon) + " " + Config::format(s.eta0) + " " + std::to_string(tc.n) + " " +
                   std::to_string(tc.mom_buckets);
        }
        ty.cases.clear();
        for (const auto& r : c.records("toy", "cases", def, 7)) {
            ToyCase tc;
            tc.spec = {static_cast<int>(r[0]), static_cast<int>(r[1]), static_cast<int>(r[2]), r[3], r[4]};
            if (r[5] < 1 || r[6] < 0) c.fail("toy", "cases", "replicates must be >= 1 and buckets >= 0");
            tc.n = static_cast<std::size_t>(r[5]);
            tc.mom_buckets = static_cast<std::size_t>(r[6]);
            try {
                tc.spec.validate();
            } catch (const std::invalid_argument& e) {
                c.fail("toy", "cases", e.what());
            }
            ty.cases.push_back(tc);
        }
    }

    auto& rp = st.rapenne;
    rp.d = small(c, "rapenne", "d", rp.d, 1, 3);
    rp.n = small(c, "rapenne", "n", rp.n, 1, 10);
    rp.W = c.real("rapenne", "W", rp.W, pos);
    rp.replicates = count(c, "rapenne", "replicates", rp.replicates);

    auto& cv = st.convex;
    cv.box_d = small(c, "convex", "box_d", cv.box_d, 1, 3);
    cv.box_n = small(c, "convex", "box_n", cv.box_n, 1, 10);
    cv.W_grid = c.reals("convex", "W_grid", cv.W_grid, pos);
    cv.box_replicates = count(c, "convex", "box_replicates", cv.box_replicates);
    cv.chain_d = small(c, "convex", "chain_d", cv.chain_d, 2, 3);
    cv.chain_n = small(c, "convex", "chain_n", cv.chain_n, 1, 10);
    cv.chain_m = small(c, "convex", "chain_m", cv.chain_m, 0, 10);
    cv.chain_W = c.real("convex", "chain_W", cv.chain_W, pos);
    cv.chain_epsilon = c.real("convex", "chain_epsilon", cv.chain_epsilon, pos);
    if (!(2.0 * cv.chain_epsilon < cv.chain_W)) c.fail("convex", "chain_epsilon", "need 2 epsilon < chain_W");
    cv.chain_replicates = count(c, "convex", "chain_replicates", cv.chain_replicates);

    auto& tl = st.tail;
    tl.d = small(c, "tail", "d", tl.d, 2, 3);
    tl.width = odd(c, "tail", "width", tl.width, 21);
    tl.levels = small(c, "tail", "levels", tl.levels, 1, 100);
    tl.W_grid = c.reals("tail", "W_grid", tl.W_grid, pos);
    tl.t_grid = c.reals("tail", "t_grid", tl.t_grid, pos);
    tl.replicates = count(c, "tail", "replicates", tl.replicates);

    auto& ov = st.overshoot;
    ov.d = small(c, "overshoot", "d", ov.d, 2, 3);
    ov.width = odd(c, "overshoot", "width", ov.width, 21);
    ov.height = small(c, "overshoot", "height", ov.height, 3, 100);
    ov.cut = small(c, "overshoot", "cut", ov.cut, 1, 100);
    if (ov.cut >= ov.height - 1) c.fail("overshoot", "cut", "cut spacing must leave at least two cuts below the height");
    ov.W = c.real("overshoot", "W", ov.W, pos);
    ov.replicates = count(c, "overshoot", "replicates", ov.replicates);
    ov.configurations = small(c, "overshoot", "configurations", ov.configurations, 1, 10000);
    ov.resamples = count(c, "overshoot", "resamples", ov.resamples);
    ov.tolerance = c.real("overshoot", "tolerance", ov.tolerance, pos);
    ov.lambda0 = c.real("overshoot", "lambda0", ov.lambda0, pos);
    ov.lambdas = c.reals("overshoot", "lambdas", ov.lambdas, pos);
    for (double l : ov.lambdas)
        if (l < ov.lambda0) c.fail("overshoot", "lambdas", "every lambda must be at least lambda0");
    ov.A_grid = c.reals("overshoot", "A_grid", ov.A_grid, Config::at_least(2.0));

    auto& sc = st.scan;
    sc.d_grid = ints(c, "scan", "d_grid", sc.d_grid, Config::between(1, 3));
    sc.family = c.text("scan", "family", "slab", {"box", "slab"}) == "box" ? ScanFamily::box : ScanFamily::slab;
    sc.n_grid = ints(c, "scan", "n_grid", sc.n_grid, Config::between(1, 10));
    if (sc.n_grid.size() < 2) c.fail("scan", "n_grid", "need at least two sizes");
    sc.W_grid = c.reals("scan", "W_grid", sc.W_grid, pos);
    if (sc.W_grid.size() > 16) c.fail("scan", "W_grid", "at most 16 values");
    sc.replicates = count(c, "scan", "replicates", sc.replicates);
    sc.slab_width = odd(c, "scan", "slab_width", sc.slab_width, 21);
    sc.p_set = ints(c, "scan", "p_set", sc.p_set, [](double p) {
        return p == -2 || p == 1 || p == 2 || p == 3 ? "" : "p must be in {-2, 1, 2, 3}";
    });
    sc.t_grid = c.reals("scan", "t_grid", sc.t_grid, pos);
    sc.levels = small(c, "scan", "levels", sc.levels, 1, 100);

    auto& si = st.simulate;
    si.graph = c.text("simulate", "graph", si.graph, {"box", "halfspace", "file"});
    si.graph_file = c.text("simulate", "graph_file", "");
    if (si.graph == "file" && si.graph_file.empty()) c.fail("simulate", "graph_file", "required when graph = file");
    si.d = small(c, "simulate", "d", si.d, 1, 3);
    si.n = small(c, "simulate", "n", si.n, 1, 50);
    si.m = small(c, "simulate", "m", si.m, 1, 50);
    si.W = c.real("simulate", "W", si.W, pos);
    si.process = c.text("simulate", "process", si.process, {"vrjp", "quenched"});
    si.replicates = count(c, "simulate", "replicates", si.replicates);
    si.horizon = c.real("simulate", "horizon", si.horizon, Config::nonnegative());
    si.jump_budget = count(c, "simulate", "jump_budget", si.jump_budget);
    si.start = static_cast<int>(c.integer("simulate", "start", si.start, Config::at_least(-1)));

    auto& un = st.uniform;
    un.n_grid = ints(c, "toy_uniform", "n_grid", un.n_grid, Config::between(0, 200));
    un.m = small(c, "toy_uniform", "m", un.m, 0, 20);
    un.epsilon = c.real("toy_uniform", "epsilon", un.epsilon, pos);
    un.mu0 = c.text("toy_uniform", "mu0", un.mu0);
    un.sampler = parse_mu0(c, un.mu0);
    un.eta0 = c.real("toy_uniform", "eta0", un.eta0, pos);
    un.epsilon0 = c.real("toy_uniform", "epsilon0", un.epsilon0, Config::between(0.0, 0.999999));
    un.p = small(c, "toy_uniform", "p", un.p, 1, 6);
    un.replicates = count(c, "toy_uniform", "replicates", un.replicates);

    c.reject_unknown();

    // Master seed and pool size flow into every experiment.
    for (std::uint64_t* s : {&la.seed, &mg.seed, &rs.laplace.seed, &ma.seed, &re.seed, &orc.seed, &ex.seed, &ty.seed,
                             &rp.seed, &cv.seed, &tl.seed, &ov.seed})
        *s = st.seed;
    for (unsigned* w : {&la.workers, &mg.workers, &rs.laplace.workers, &ma.workers, &ex.workers, &ty.workers,
                        &rp.workers, &cv.workers, &tl.workers, &ov.workers})
        *w = st.workers;
    return st;
}

// ---------------------------------------------------------------- members

using Member = std::pair<std::string, std::function<std::vector<CheckReport>()>>;

std::vector<Member> validate_members(const Settings& s) {
    auto one = [](auto f) { return [f] { return std::vector<CheckReport>{f()}; }; };
    return {
        {"laplace", one([&s] { return check_laplace(s.laplace); })},
        {"marginals", one([&s] { return check_ig_marginals(s.marginals); })},
        {"restriction", one([&s] { return check_restriction(s.restriction); })},
        {"martingale", one([&s] { return check_martingale(s.martingale); })},
        {"renewal", one([&s] { return check_renewal(s.renewal); })},
        {"oracle", one([&s] { return check_oracle(s.oracle); })},
        {"exitprob", one([&s] { return check_exitprob(s.exitprob); })},
        {"chain", one([&s] { return check_chain_identity(s.toy); })},
        {"toy", one([&s] { return check_toy_moments(s.toy); })},
        {"rapenne", one([&s] { return check_rapenne(s.rapenne); })},
        {"convex", one([&s] { return check_convex(s.convex); })},
        {"tail", one([&s] { return check_tail(s.tail); })},
        {"overshoot", one([&s] { return check_overshoot(s.overshoot); })},
        {"igtail", one([&s] { return check_igtail(s.overshoot); })},
    };
}

WeightedGraph scan_graph(const ScanParams& p, int d, int n, double W) {
    return p.family == ScanFamily::box ? build_box_lattice(d, n, W) : build_halfspace_box(d, n, (p.slab_width + 1) / 2, W);
}

std::vector<Member> scan_members(const Settings& s) {
    const ScanParams& p = s.scan;
    const char* family = p.family == ScanFamily::box ? "box" : "slab";
    auto phase = [&s, &p, family] {
        CheckReport rep, cross;
        rep.name = "scan";
        cross.name = "scan_crossover";
        rep.table.header = {"d", "family", "W", "slope_mean", "slope_se"};
        for (int n : p.n_grid) {
            rep.table.header.push_back("mean_log_psi_n" + std::to_string(n));
            rep.table.header.push_back("se_log_psi_n" + std::to_string(n));
        }
        for (const char* h : {"p_psi_below_0.1", "p_psi_below_0.01", "monotone_ok"}) rep.table.header.push_back(h);
        cross.table.header = {"d", "family", "status", "W_lo", "W_hi"};
        for (std::size_t i = 0; i < p.d_grid.size(); ++i) {
            const int d = p.d_grid[i];
            const auto sc = phase_scan(d, p.family, p.n_grid, p.W_grid, p.replicates, derive_seed(s.seed, 300 + i),
                                       s.workers, p.slab_width);
            for (const auto& r : sc.rows) {
                std::vector<std::string> row{cell(d), family, cell(r.W), cell(r.slope.mean), cell(r.slope.std_error())};
                for (const auto& m : r.mean_log) {
                    row.push_back(cell(m.mean));
                    row.push_back(cell(m.std_error()));
                }
                row.push_back(cell(r.below_0p1.mean));
                row.push_back(cell(r.below_0p01.mean));
                row.push_back(cell(r.monotone_ok));
                rep.table.rows.push_back(row);
            }
            if (sc.crossover)
                cross.table.row(d, family, sc.crossover_status, sc.crossover->first, sc.crossover->second);
            else
                cross.table.row(d, family, sc.crossover_status, "", "");
        }
        return std::vector<CheckReport>{rep, cross};
    };
    auto moments = [&s, &p] {
        CheckReport rep;
        rep.name = "moments";
        rep.table.header = {"d", "n", "W", "p", "mean", "std_error", "identity_z", "heavy_tail_warning"};
        const int n = *std::max_element(p.n_grid.begin(), p.n_grid.end());
        for (std::size_t i = 0; i < p.d_grid.size(); ++i) {
            const int d = p.d_grid[i];
            const auto rows = moment_suite([&p, d, n](double W) { return scan_graph(p, d, n, W); }, p.W_grid, p.p_set,
                                           p.replicates, derive_seed(s.seed, 310 + i), s.workers);
            for (const auto& r : rows)
                rep.table.row(d, n, r.W, r.p, r.summary.mean, r.summary.std_error(), r.identity_z, r.heavy_tail);
        }
        return std::vector<CheckReport>{rep};
    };
    auto tail = [&s, &p] {
        CheckReport rep;
        rep.name = "tail";
        rep.table.header = {"d", "levels", "W", "t", "probability", "std_error", "bound", "t_times_p", "pass"};
        std::uint64_t tag = 320;
        for (int d : p.d_grid) {
            for (double W : p.W_grid) {
                const WeightedGraph g = build_halfspace_box(d, p.levels, (p.slab_width + 1) / 2, W);
                for (const auto& r : tail_suite(g, p.t_grid, p.replicates, derive_seed(s.seed, tag++), s.workers)) {
                    rep.pass = rep.pass && r.ok;
                    rep.table.row(d, p.levels, W, r.t, r.exceed.mean, r.exceed.std_error(), r.bound, r.t_times_p, r.ok);
                }
            }
        }
        return std::vector<CheckReport>{rep};
    };
    return {{"phase", phase}, {"moments", moments}, {"tail", tail}};
}

std::vector<Member> simulate_members(const Settings& s) {
    auto run = [&s] {
        const SimulateParams& p = s.simulate;
        WeightedGraph g;
        if (p.graph == "file") {
            std::ifstream is(p.graph_file);
            if (!is) throw ConfigError("cannot open graph file '" + p.graph_file + "'");
            try {
                g = read_graph(is);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(p.graph_file + ": " + e.what());
            }
        } else if (p.graph == "box") {
            g = build_box_lattice(p.d, p.n, p.W);
        } else {
            g = build_halfspace_box(p.d, p.n, p.m, p.W);
        }
        int start = p.start;
        if (start < 0) {
            if (!g.root()) throw ConfigError("simulate: graph has no root; set simulate.start");
            start = *g.root();
        }
        if (static_cast<std::size_t>(start) >= g.size() || g.absorbing(start))
            throw ConfigError("simulate: start must be a non-absorbing vertex");
        StopRule stop;
        stop.horizon = p.horizon;
        stop.jump_budget = p.jump_budget;
        CheckReport traj, exits;
        traj.name = "trajectories";
        exits.name = "exits";
        exits.table.header = {"replicate", "events", "exit_class", "exit_vertex", "clock", "truncated"};
        std::ostringstream csv;
        write_trajectory_csv_header(csv);
        const std::uint64_t seed = derive_seed(s.seed, 200);
        for (std::size_t r = 0; r < p.replicates; ++r) {
            Stream rng(seed, r);
            Trajectory t;
            if (p.process == "vrjp") {
                t = simulate_vrjp(g, start, stop, rng);
            } else {
                Stream field = rng.substream(0);
                const BetaField beta = sample_beta(g, field);
                t = simulate_quenched(g, beta, start, stop, rng);
            }
            write_trajectory_csv(csv, r, t);
            exits.table.row(r, t.events.size(), t.exit_class ? to_string(*t.exit_class) : "none", t.exit_vertex, t.clock,
                            t.truncated);
        }
        traj.body = csv.str();
        return std::vector<CheckReport>{traj, exits};
    };
    return {{"simulate", run}};
}

std::vector<Member> toy_members(const Settings& s) {
    auto uniform = [&s] {
        const UniformParams& p = s.uniform;
        const WeightSampler& mu0 = p.sampler;
        const double e0 = p.epsilon0 > 0.0 ? p.epsilon0 : toy_epsilon0(p.p, p.m, p.epsilon);
        const auto t = toy_uniform_bound_experiment(p.n_grid, p.m, p.epsilon, mu0, p.eta0, e0, p.p, p.replicates,
                                                    derive_seed(s.seed, 330), s.workers);
        CheckReport rep, tail;
        rep.name = "toy_uniform";
        tail.name = "toy_uniform_k_tail";
        rep.table.header = {"n", "moment", "std_error", "bound_2c1", "C0", "c1", "epsilon0", "small_mass",
                            "small_mass_se", "assertable", "trend_slope", "trend_se"};
        for (const auto& r : t.rows)
            rep.table.row(r.n, r.moment.mean, r.moment.std_error(), t.bound, t.C0, t.c1, e0, t.small_mass, t.small_mass_se,
                          t.assertable, t.trend.slope, t.trend.std_error);
        tail.table.header = {"k", "p_K_at_least_k", "std_error", "epsilon0_pow_k", "pass"};
        const auto& last = t.rows.back();
        bool tail_ok = true;
        for (std::size_t k = 0; k < last.k_tail.size(); ++k) {
            tail_ok = tail_ok && t.k_tail_ok[k];
            tail.table.row(k, last.k_tail[k].mean, last.k_tail[k].std_error(), std::pow(e0, static_cast<double>(k)),
                           static_cast<bool>(t.k_tail_ok[k]));
        }
        if (t.assertable) {
            rep.pass = t.below_bound && t.no_upward_trend && tail_ok;
            tail.pass = tail_ok;
        } else {
            rep.note("small-mass condition or eta0 <= epsilon not met: bound reported, not asserted");
        }
        return std::vector<CheckReport>{rep, tail};
    };
    return {{"chain", [&s] { return std::vector<CheckReport>{check_chain_identity(s.toy)}; }},
            {"toy", [&s] { return std::vector<CheckReport>{check_toy_moments(s.toy)}; }},
            {"uniform", uniform}};
}

std::vector<Member> renewal_members(const Settings& s) {
    return {{"renewal", [&s] { return std::vector<CheckReport>{check_renewal(s.renewal)}; }},
            {"overshoot", [&s] { return std::vector<CheckReport>{check_overshoot(s.overshoot)}; }},
            {"igtail", [&s] { return std::vector<CheckReport>{check_igtail(s.overshoot)}; }}};
}

std::vector<Member> exitprob_members(const Settings& s) {
    return {{"exitprob", [&s] { return std::vector<CheckReport>{check_exitprob(s.exitprob)}; }}};
}

// ---------------------------------------------------------------- driver

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

int run_command(const std::string& command, const std::vector<Member>& members, const std::optional<std::string>& only,
                const Settings& s, const Config& cfg) {
    if (only) {
        const bool found = std::any_of(members.begin(), members.end(), [&](const Member& m) { return m.first == *only; });
        if (!found) {
            std::string names;
            for (const auto& m : members) names += (names.empty() ? "" : ", ") + m.first;
            throw ConfigError("--only: '" + *only + "' is not a member of " + command + " (" + names + ")");
        }
    }
    fs::create_directories(s.out);
    std::vector<std::string> files;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
    Table report;
    report.header = {"member", "output", "pass", "notes"};
    bool all = true;
    for (const auto& [name, run] : members) {
        if (only && name != *only) continue;
        std::cout << "running " << name << std::endl;
        bool pass = true;
        for (const auto& rep : run()) {
            const std::string file = rep.name + ".csv";
            std::ofstream os(fs::path(s.out) / file, std::ios::binary);
            if (!rep.body.empty())
                os << rep.body;
            else
                rep.table.write_csv(os);
            if (!os) throw std::runtime_error("cannot write " + (fs::path(s.out) / file).string());
            files.push_back(file);
            std::string notes;
            for (const auto& n : rep.notes) notes += (notes.empty() ? "" : "; ") + n;
            std::replace(notes.begin(), notes.end(), ',', ' ');
            std::cout << (rep.pass ? "PASS " : "FAIL ") << rep.name << (notes.empty() ? "" : ": " + notes) << std::endl;
            report.row(name, file, rep.pass, notes);
            pass = pass && rep.pass;
        }
        results[name] = pass;
        all = all && pass;
    }
    {
        std::ofstream os(fs::path(s.out) / (command + "_report.csv"), std::ios::binary);
        report.write_csv(os);
        files.push_back(command + "_report.csv");
    }
    nlohmann::ordered_json m;
    m["command"] = command;
    m["only"] = only ? nlohmann::ordered_json(*only) : nlohmann::ordered_json(nullptr);
    m["seed"] = s.seed;
    m["config_hash"] = "fnv1a64:" + hex64(fnv1a64(cfg.canonical()));
    m["versions"] = {{"vrjp", VRJP_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
                                   "." + std::to_string(BOOST_VERSION % 100)}};
    m["files"] = files;
    m["results"] = results;
    m["pass"] = all;
    std::ofstream os(fs::path(s.out) / "manifest.json", std::ios::binary);
    os << m.dump(2) << '\n';
    std::cout << (all ? "all passed" : "FAILURES") << "; outputs in " << s.out << std::endl;
    return all ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"VRJP and beta-field simulation and verification"};
    app.set_version_flag("--version", std::string(VRJP_VERSION));
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, only;
    unsigned workers = 1;
    app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed (overrides run.seed)");
    app.add_option("--workers", workers, "worker threads")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", out, "output directory (overrides run.out)");
    app.add_option("--only", only, "run a single member of the command");
    app.require_subcommand(1, 1);
    for (const char* c : {"validate", "scan", "simulate", "toy", "renewal", "exitprob"}) app.add_subcommand(c)->fallthrough();
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Config cfg = config_path.empty() ? Config() : Config::load(config_path);
        const Settings s = resolve(cfg, {seed, out, workers});
        std::vector<Member> members;
        if (command == "validate") members = validate_members(s);
        else if (command == "scan") members = scan_members(s);
        else if (command == "simulate") members = simulate_members(s);
        else if (command == "toy") members = toy_members(s);
        else if (command == "renewal") members = renewal_members(s);
        else members = exitprob_members(s);
        return run_command(command, members, only, s, cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const DegeneracyBudgetExceeded& e) {
        std::cerr << "degeneracy budget exceeded: " << e.what() << '\n';
        return kDegenerate;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFail;
    }
}
