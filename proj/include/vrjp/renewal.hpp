#pragma once

// Renewal and overshoot machinery on half-space boxes.
//
// Levels are the last coordinate. U_n is the set of box vertices below level
// n and M_n = psi_{U_n}(root). For a cut at level k the exit points of U_k
// are the level-k vertices plus the absorbing side (and the explicit field,
// keyed -1); absorbing exit points carry M_check = 1. With that convention
//   M_{k+l} = M_k * sum_z alpha_z * M_check_l(z)
// holds exactly, where M_check_l(z) = psi_{U_{k+l}}(z) and the cut vertex z
// is weighted inside M_check.

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "vrjp/beta_field.hpp"
#include "vrjp/errors.hpp"
#include "vrjp/graph.hpp"
#include "vrjp/inverse_gaussian.hpp"
#include "vrjp/linalg.hpp"
#include "vrjp/schrodinger.hpp"

namespace vrjp {

inline constexpr int kFieldExit = -1;

inline int level_of(const WeightedGraph& g, int v) { return g.coord(v).back(); }

inline int box_height(const WeightedGraph& g) {
    int h = 0;
    for (int v : g.free_vertices()) h = std::max(h, level_of(g, v) + 1);
    return h;
}

// Free vertices strictly below level n, in index order.
inline std::vector<int> below_level(const WeightedGraph& g, int n) {
    std::vector<int> out;
    for (int v : g.free_vertices())
        if (level_of(g, v) < n) out.push_back(v);
    return out;
}

// Free vertices at level k, ordered by lateral coordinates.
inline std::vector<int> cut_vertices(const WeightedGraph& g, int k) {
    std::vector<int> out;
    for (int v : g.free_vertices())
        if (level_of(g, v) == k) out.push_back(v);
    return out;
}

inline double martingale_at(const WeightedGraph& g, const BetaField& beta, int n) {
    const auto U = below_level(g, n);
    if (U.empty()) return 1.0;
    const auto root = *g.root();
    const Vec x = solve_psi(g, beta.beta, U);
    return x(index_in(U, g.size())[root]);
}

// M_0 .. M_N.
inline std::vector<double> martingale_path(const WeightedGraph& g, const BetaField& beta) {
    std::vector<double> path;
    for (int n = 0; n <= box_height(g); ++n) path.push_back(martingale_at(g, beta, n));
    return path;
}

struct ExitDistribution {
    double M_k = 1.0;
    std::map<int, double> alpha;  // exit point -> probability
};

inline ExitDistribution exit_distribution(const WeightedGraph& g, const BetaField& beta, int k) {
    const int root = g.root().value();
    ExitDistribution out;
    const auto U = below_level(g, k);
    if (U.empty()) {
        out.alpha[root] = 1.0;
        return out;
    }
    const auto pos = index_in(U, g.size());
    const Mat G = green(g, beta.beta, U);
    const auto r = pos[root];
    std::map<int, double> mass;
    for (std::size_t i = 0; i < U.size(); ++i) {
        const int v = U[i];
        const double gr = G(r, static_cast<Eigen::Index>(i));
        if (g.eta(v) > 0.0) mass[kFieldExit] += gr * g.eta(v);
        for (const auto& nb : g.neighbors(v))
            if (pos[nb.v] < 0) mass[nb.v] += gr * nb.w;
    }
    double total = 0.0;
    for (const auto& [z, m] : mass) total += m;
    out.M_k = total;
    for (const auto& [z, m] : mass) out.alpha[z] = m / total;
    return out;
}

struct AboveCut {
    WeightedGraph graph;
    std::vector<int> to_new;  // original index -> above-cut index, -1 below the cut
    std::vector<int> to_old;
};

// The graph above level k conditioned on beta below it: cut pairs gain
//   W_check(x, y) = W(x, y) + W(x, x~) W(y, y~) G_hat(x~, y~),
// with x~ the vertex just below x. Excursions below the cut that leave through
// the side or the explicit field are added to the side edge or the field.
inline AboveCut check_conductances_mapped(const WeightedGraph& g, const BetaField& beta, int k) {
    const auto U = below_level(g, k);
    const auto posU = index_in(U, g.size());
    AboveCut out;
    out.to_new.assign(g.size(), -1);
    for (std::size_t v = 0; v < g.size(); ++v) {
        const int iv = static_cast<int>(v);
        if (posU[v] >= 0) continue;
        out.to_new[v] = out.graph.add_vertex(g.vertex_class(iv), g.eta(iv), g.coord(iv));
        out.to_old.push_back(iv);
    }
    for (std::size_t v = 0; v < g.size(); ++v) {
        const int a = out.to_new[v];
        if (a < 0) continue;
        const int iv = static_cast<int>(v);
        if (g.self_loop(iv) > 0.0) out.graph.set_conductance(a, a, g.self_loop(iv));
        for (const auto& nb : g.neighbors(iv))
            if (nb.v > iv && out.to_new[nb.v] >= 0) out.graph.set_conductance(a, out.to_new[nb.v], nb.w);
    }
    if (auto r = g.root(); r && out.to_new[*r] >= 0) out.graph.set_root(out.to_new[*r]);
    if (U.empty()) return out;

    const Mat G = green(g, beta.beta, U);
    const auto cut = cut_vertices(g, k);
    std::vector<int> below(cut.size(), -1);
    std::vector<double> wdown(cut.size(), 0.0);
    for (std::size_t i = 0; i < cut.size(); ++i) {
        Coord c = g.coord(cut[i]);
        c.back() -= 1;
        if (auto t = g.find(c); t && posU[*t] >= 0) {
            below[i] = posU[*t];
            wdown[i] = g.conductance(cut[i], *t);
        }
    }
    // Exit fields of U by absorbing class, and the explicit field.
    std::map<int, Vec> leak;
    Vec field = Vec::Zero(static_cast<Eigen::Index>(U.size()));
    for (std::size_t i = 0; i < U.size(); ++i) {
        const int v = U[i];
        field(static_cast<Eigen::Index>(i)) = g.eta(v);
        for (const auto& nb : g.neighbors(v)) {
            if (!g.absorbing(nb.v)) continue;
            auto it = leak.try_emplace(nb.v, Vec::Zero(static_cast<Eigen::Index>(U.size()))).first;
            it->second(static_cast<Eigen::Index>(i)) += nb.w;
        }
    }
    for (std::size_t i = 0; i < cut.size(); ++i) {
        if (below[i] < 0) continue;
        const int x = out.to_new[cut[i]];
        for (std::size_t j = i; j < cut.size(); ++j) {
            if (below[j] < 0) continue;
            const double extra = wdown[i] * wdown[j] * G(below[i], below[j]);
            out.graph.add_conductance(x, out.to_new[cut[j]], extra);
        }
        const auto row = G.row(below[i]);
        for (const auto& [a, f] : leak) out.graph.add_conductance(x, out.to_new[a], wdown[i] * row.dot(f));
        const double fe = wdown[i] * row.dot(field);
        if (fe > 0.0) out.graph.set_eta(x, out.graph.eta(x) + fe);
    }
    return out;
}

inline WeightedGraph check_conductances(const WeightedGraph& g, const BetaField& beta, int k) {
    return check_conductances_mapped(g, beta, k).graph;
}

struct RenewalDecomposition {
    int cut_level = 0;
    int ell = 0;
    double M_k = 1.0;
    std::map<int, double> alpha;    // exit point (original index) -> alpha_z
    WeightedGraph w_check_graph;
    std::map<int, double> m_check;  // exit point -> M_check_l(z)
    double product_value = 0.0;
    double direct_value = 0.0;
    double relative_error = 0.0;
};

inline constexpr double kRenewalTolerance = 1e-10;

inline RenewalDecomposition renewal_decompose(const WeightedGraph& g, const BetaField& beta, int k, int ell) {
    const int N = box_height(g);
    if (k < 0 || ell < 0 || k >= N || k + ell > N)
        throw std::invalid_argument("renewal_decompose: need 0 <= k < N and k + ell <= N");
    RenewalDecomposition out;
    out.cut_level = k;
    out.ell = ell;
    const auto ex = exit_distribution(g, beta, k);
    out.M_k = ex.M_k;
    out.alpha = ex.alpha;
    auto above = check_conductances_mapped(g, beta, k);

    // psi on the conditioned graph over levels [k, k+ell).
    std::vector<int> region;
    for (int v : above.graph.free_vertices())
        if (level_of(above.graph, v) < k + ell) region.push_back(v);
    std::vector<double> beta_above(above.graph.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t a = 0; a < above.to_old.size(); ++a) beta_above[a] = beta[above.to_old[a]];
    Vec psi_region;
    std::vector<int> pos;
    if (!region.empty()) {
        psi_region = solve_psi(above.graph, beta_above, region);
        pos = index_in(region, above.graph.size());
    }
    double sum = 0.0;
    for (const auto& [z, a] : out.alpha) {
        double m = 1.0;
        if (z != kFieldExit && !g.absorbing(z)) {
            const int zn = above.to_new[z];
            if (!region.empty() && pos[zn] >= 0) m = psi_region(pos[zn]);
        }
        out.m_check[z] = m;
        sum += a * m;
    }
    out.w_check_graph = std::move(above.graph);
    out.product_value = out.M_k * sum;
    out.direct_value = martingale_at(g, beta, k + ell);
    out.relative_error = std::abs(out.product_value - out.direct_value) / out.direct_value;
    if (!(out.relative_error <= kRenewalTolerance)) {
        std::ostringstream os;
        os << "renewal identity violated at k=" << k << " ell=" << ell << " (replicate "
           << beta.seed_info.replicate << "): product " << out.product_value << " vs direct " << out.direct_value;
        throw IdentityViolation(os.str());
    }
    return out;
}

// E[M_check_1(z) | beta on Lambda] = psi_Lambda(z) for z in Lambda, 1 otherwise.
inline double conditional_expectation_mcheck(const WeightedGraph& g, const BetaField& beta,
                                             const std::vector<int>& Lambda, int z) {
    const auto pos = index_in(Lambda, g.size());
    if (pos.at(z) < 0) return 1.0;
    return solve_psi(g, beta.beta, Lambda)(pos[z]);
}

// Lambda_n = U_k plus the first n vertices of the enumeration.
inline std::vector<int> lambda_set(const WeightedGraph& g, int k, const std::vector<int>& enumeration, int n) {
    auto L = below_level(g, k);
    L.insert(L.end(), enumeration.begin(), enumeration.begin() + n);
    return L;
}

struct OvershootTrace {
    double t = 0.0;
    double B = 0.0;
    int cut_level = 0;
    std::vector<int> enumeration;
    std::vector<double> martingale_path;  // M_0 .. M_N
    std::optional<int> tau;               // first n >= 1 with M_n > t
    std::vector<double> r_sequence;       // R_0 .. R_{|cut|}
    std::optional<int> T;                 // first n with R_n >= 2B
    // Index n-1 holds the step from R_{n-1} to R_n.
    std::vector<double> x, y, z;
    std::vector<double> tower_residual;      // |R_{n-1} - (X + Y)|
    std::vector<double> decomposition_residual;  // |R_n - (X Z + Y)|
};

inline OvershootTrace overshoot_trace(const WeightedGraph& g, const BetaField& beta, double t, double B, int k,
                                      std::vector<int> enumeration = {}) {
    OvershootTrace tr;
    tr.t = t;
    tr.B = B;
    tr.cut_level = k;
    const auto cut = cut_vertices(g, k);
    if (enumeration.empty()) enumeration = cut;
    if (enumeration.size() != cut.size()) throw std::invalid_argument("overshoot_trace: enumeration must list the cut");
    tr.enumeration = enumeration;
    tr.martingale_path = martingale_path(g, beta);
    for (std::size_t n = 1; n < tr.martingale_path.size(); ++n)
        if (tr.martingale_path[n] > t) {
            tr.tau = static_cast<int>(n);
            break;
        }

    const auto ex = exit_distribution(g, beta, k);
    auto alpha_of = [&](int v) {
        auto it = ex.alpha.find(v);
        return it == ex.alpha.end() ? 0.0 : it->second;
    };
    double alpha_abs = 0.0;
    for (const auto& [z, a] : ex.alpha)
        if (z == kFieldExit || g.absorbing(z)) alpha_abs += a;

    const std::size_t C = enumeration.size();
    for (std::size_t n = 0; n <= C; ++n) {
        const auto L = lambda_set(g, k, enumeration, static_cast<int>(n));
        double R = alpha_abs;
        const auto pos = index_in(L, g.size());
        Vec ps;
        if (!L.empty()) ps = solve_psi(g, beta.beta, L);
        for (int c : cut) R += alpha_of(c) * (pos[c] >= 0 ? ps(pos[c]) : 1.0);
        tr.r_sequence.push_back(R);
        if (!tr.T && R >= 2.0 * B) tr.T = static_cast<int>(n);
    }

    for (std::size_t n = 1; n <= C; ++n) {
        const auto Lp = lambda_set(g, k, enumeration, static_cast<int>(n - 1));
        const int zn = enumeration[n - 1];
        const auto posp = index_in(Lp, g.size());
        auto posn = posp;
        posn[zn] = static_cast<int>(Lp.size());
        double X = alpha_of(zn), Y = alpha_abs;
        for (int c : cut)
            if (posn[c] < 0) Y += alpha_of(c);
        if (!Lp.empty()) {
            const Mat G = green(g, beta.beta, Lp);
            Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(Lp.size()));
            for (int c : cut)
                if (posp[c] >= 0) a += alpha_of(c) * G.row(posp[c]);
            Vec to_zn = Vec::Zero(a.size()), out_n = Vec::Zero(a.size());
            for (std::size_t i = 0; i < Lp.size(); ++i) {
                const int v = Lp[i];
                double o = g.eta(v);
                for (const auto& nb : g.neighbors(v)) {
                    if (nb.v == zn)
                        to_zn(static_cast<Eigen::Index>(i)) += nb.w;
                    else if (posn[nb.v] < 0)
                        o += nb.w;
                }
                out_n(static_cast<Eigen::Index>(i)) = o;
            }
            X += a.dot(to_zn);
            Y += a.dot(out_n);
        }
        const auto Ln = lambda_set(g, k, enumeration, static_cast<int>(n));
        const double Z = conditional_expectation_mcheck(g, beta, Ln, zn);
        tr.x.push_back(X);
        tr.y.push_back(Y);
        tr.z.push_back(Z);
        tr.tower_residual.push_back(std::abs(tr.r_sequence[n - 1] - (X + Y)));
        tr.decomposition_residual.push_back(std::abs(tr.r_sequence[n] - (X * Z + Y)));
    }
    return tr;
}

// ---------------------------------------------------------------- inverse Gaussian tail lemma

inline double ig_tail_constant(double lambda0) {
    double s = 0.0;
    for (int k = 1; k < 100000; ++k) {
        const double term = (k + 1.0) * (k + 1.0) * std::exp(-(k - 1.0) * lambda0 / 2.0);
        s += term;
        if (term < 1e-17 * s) break;
    }
    return s;
}

struct IgTailRow {
    double lambda = 0.0;
    double A = 0.0;
    double tail_probability = 0.0;
    double ratio = 0.0;  // E[Z^2 1{Z >= A}] / (A^2 P(Z >= A))
    double bound = 0.0;  // c_{lambda0}
    bool converged = true;
    bool within_bound = true;
};

namespace detail {

inline double ig_upper_integral(double lambda, double A, int power, double& err) {
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [&](double t) { return std::pow(t, power) * ig1_density(t, lambda); };
    double l1 = 0.0;
    return integrator.integrate(f, A, std::numeric_limits<double>::infinity(), 1e-12, &err, &l1);
}

}  // namespace detail

inline std::vector<IgTailRow> ig_tail_check(double lambda0, const std::vector<double>& lambdas,
                                            const std::vector<double>& A_grid) {
    const double bound = ig_tail_constant(lambda0);
    std::vector<IgTailRow> rows;
    for (double lam : lambdas) {
        if (!(lam >= lambda0)) throw std::invalid_argument("ig_tail_check: lambda below lambda0");
        for (double A : A_grid) {
            if (!(A >= 2.0)) throw std::invalid_argument("ig_tail_check: A must be >= 2");
            IgTailRow r;
            r.lambda = lam;
            r.A = A;
            r.bound = bound;
            double e0 = 0.0, e2 = 0.0;
            const double p = detail::ig_upper_integral(lam, A, 0, e0);
            const double m2 = detail::ig_upper_integral(lam, A, 2, e2);
            r.tail_probability = p;
            r.ratio = m2 / (A * A * p);
            r.converged = p > 0.0 && e0 <= 1e-8 * p && e2 <= 1e-8 * m2;
            r.within_bound = r.converged && r.ratio <= bound;
            rows.push_back(r);
        }
    }
    return rows;
}

// P(Z >= x + s) <= exp(-s lambda / 4) P(Z >= x) for x >= 2; returns the
// largest observed log-excess (<= 0 when the inequality holds everywhere).
inline double ig_tail_decay_excess(double lambda, const std::vector<double>& x_grid, const std::vector<double>& s_grid) {
    double worst = -std::numeric_limits<double>::infinity();
    for (double x : x_grid) {
        double e = 0.0;
        const double px = detail::ig_upper_integral(lambda, x, 0, e);
        for (double s : s_grid) {
            const double pxs = detail::ig_upper_integral(lambda, x + s, 0, e);
            worst = std::max(worst, std::log(pxs) - std::log(px) + s * lambda / 4.0);
        }
    }
    return worst;
}

}  // namespace vrjp
