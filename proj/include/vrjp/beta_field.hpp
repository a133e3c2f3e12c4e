#pragma once

// The potential law nu^{W,eta}: Laplace transform, density, restriction and
// conditioning, and the exact sequential sampler.
//
// Convention: H_beta = diag(beta) - W where W keeps self-loops on its
// diagonal. With that convention the one-vertex law with self-loop w and
// field eta is w + (law with no self-loop), and a self-loop enters the
// Laplace exponent with weight 1/2 (it appears once in <1, H 1>, whereas an
// edge {i,j} appears twice).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "vrjp/errors.hpp"
#include "vrjp/graph.hpp"
#include "vrjp/inverse_gaussian.hpp"
#include "vrjp/linalg.hpp"
#include "vrjp/rng.hpp"

namespace vrjp {

struct SeedInfo {
    std::uint64_t master_seed = 0;
    std::uint64_t replicate = 0;
    std::uint64_t draws = 0;
};

// One value per graph vertex; NaN on absorbing vertices and on vertices not
// yet sampled.
struct BetaField {
    std::vector<double> beta;
    SeedInfo seed_info;

    double operator[](int v) const { return beta.at(static_cast<std::size_t>(v)); }
    bool has(int v) const { return !std::isnan(beta.at(static_cast<std::size_t>(v))); }
};

// Law of the unsampled remainder: nu^{w_check, eta_check} on `support`.
// Rows and columns of w_check follow the order of `support`.
struct ConditionalSpec {
    std::vector<int> support;
    Mat w_check;
    Vec eta_check;

    // The conditional parameters as a graph with plain vertices in support order; self-terms go on
    // the diagonal.
    WeightedGraph to_graph() const {
        WeightedGraph g;
        const auto n = static_cast<Eigen::Index>(support.size());
        for (Eigen::Index i = 0; i < n; ++i) g.add_vertex(VertexClass::plain, eta_check(i));
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j)
                if (w_check(i, j) > 0.0) g.set_conductance(static_cast<int>(i), static_cast<int>(j), w_check(i, j));
        return g;
    }
};

// ---------------------------------------------------------------- analytic law

// log E[exp(-1/2 <lambda, beta>)]; lambda is indexed by graph vertex and
// ignored on absorbing vertices.
inline double log_laplace_analytic(const WeightedGraph& g, const std::vector<double>& lambda) {
    if (lambda.size() != g.size()) throw std::invalid_argument("laplace_analytic: lambda size mismatch");
    double s = 0.0, logprod = 0.0;
    for (int i : g.free_vertices()) {
        const double li = lambda[i];
        if (!(li >= 0.0)) throw std::invalid_argument("laplace_analytic: lambda must be nonnegative");
        const double ri = std::sqrt(1.0 + li);
        s += g.effective_eta(i) * (ri - 1.0);
        s += 0.5 * g.self_loop(i) * li;
        for (const auto& nb : g.neighbors(i))
            if (nb.v > i && !g.absorbing(nb.v)) s += nb.w * (ri * std::sqrt(1.0 + lambda[nb.v]) - 1.0);
        logprod -= 0.5 * std::log1p(li);
    }
    return -s + logprod;
}

inline double laplace_analytic(const WeightedGraph& g, const std::vector<double>& lambda) {
    return std::exp(log_laplace_analytic(g, lambda));
}

// Log density of nu^{W,eta} at beta (values on free vertices); -infinity when
// H_beta is not positive definite.
inline double log_density(const WeightedGraph& g, const std::vector<double>& beta) {
    const auto V = g.free_vertices();
    for (int v : V)
        if (!std::isfinite(beta.at(v))) throw std::invalid_argument("log_density: beta must be finite");
    const Mat H = h_block(g, beta, V);
    Eigen::LLT<Mat> llt(H);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Mat& L = llt.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        if (!(L(i, i) > 0.0)) return -std::numeric_limits<double>::infinity();
        logdet += 2.0 * std::log(L(i, i));
    }
    Vec eta(H.rows());
    for (std::size_t i = 0; i < V.size(); ++i) eta(static_cast<Eigen::Index>(i)) = g.effective_eta(V[i]);
    const double quad_one = H.sum();
    const double quad_eta = eta.dot(llt.solve(eta));
    return -0.5 * static_cast<double>(V.size()) * std::log(2.0 * std::numbers::pi) - 0.5 * logdet -
           0.5 * quad_one - 0.5 * quad_eta + eta.sum();
}

// ---------------------------------------------------------------- restriction and conditioning

// The law of beta_U: W restricted to U with eta_hat = eta_U + W_{U,U^c} 1.
// Vertex i of the result is U[i].
inline WeightedGraph marginal_params(const WeightedGraph& g, const std::vector<int>& U) {
    if (U.empty()) throw std::invalid_argument("marginal_params: U must be nonempty");
    const auto pos = index_in(U, g.size());
    WeightedGraph out;
    for (int u : U) {
        if (g.absorbing(u)) throw std::invalid_argument("marginal_params: U must avoid absorbing vertices");
        double eta_hat = g.eta(u);
        for (const auto& nb : g.neighbors(u))
            if (pos[nb.v] < 0) eta_hat += nb.w;
        out.add_vertex(g.vertex_class(u), eta_hat, g.coord(u));
    }
    for (std::size_t i = 0; i < U.size(); ++i) {
        const int u = U[i];
        if (g.self_loop(u) > 0.0) out.set_conductance(static_cast<int>(i), static_cast<int>(i), g.self_loop(u));
        for (const auto& nb : g.neighbors(u))
            if (pos[nb.v] > static_cast<int>(i)) out.set_conductance(static_cast<int>(i), pos[nb.v], nb.w);
    }
    if (auto r = g.root(); r && pos[*r] >= 0) out.set_root(pos[*r]);
    return out;
}

inline std::vector<double> restrict_beta(const std::vector<double>& beta, const std::vector<int>& U) {
    std::vector<double> out;
    out.reserve(U.size());
    for (int u : U) out.push_back(beta.at(u));
    return out;
}

// Conditional law of the free vertices outside U given beta on U:
//   w_check = W_CC + W_CU H_UU^{-1} W_UC,  eta_check = eta_C + W_CU H_UU^{-1} eta_U.
inline ConditionalSpec condition_params(const WeightedGraph& g, const std::vector<double>& beta,
                                        const std::vector<int>& U) {
    const auto inU = index_in(U, g.size());
    ConditionalSpec spec;
    for (int v : g.free_vertices())
        if (inU[v] < 0) spec.support.push_back(v);
    for (int u : U)
        if (g.absorbing(u)) throw std::invalid_argument("condition_params: U must avoid absorbing vertices");
    const auto& C = spec.support;
    Vec etaC(static_cast<Eigen::Index>(C.size()));
    for (std::size_t i = 0; i < C.size(); ++i) etaC(static_cast<Eigen::Index>(i)) = g.effective_eta(C[i]);
    spec.w_check = w_block(g, C, C);
    spec.eta_check = etaC;
    if (U.empty() || C.empty()) return spec;
    const Mat H = h_block(g, beta, U);
    const auto llt = factor_spd(H, U);
    const Mat WUC = w_block(g, U, C);
    Vec etaU(static_cast<Eigen::Index>(U.size()));
    for (std::size_t i = 0; i < U.size(); ++i) etaU(static_cast<Eigen::Index>(i)) = g.effective_eta(U[i]);
    const Mat X = llt.solve(WUC);
    Mat Wc = spec.w_check + WUC.transpose() * X;
    spec.w_check = 0.5 * (Wc + Wc.transpose());
    spec.eta_check = etaC + WUC.transpose() * llt.solve(etaU);
    return spec;
}

// Marginal of a conditional law on a subset S of its support.
inline ConditionalSpec marginal(const ConditionalSpec& spec, const std::vector<int>& S) {
    std::vector<Eigen::Index> idx;
    std::vector<char> in(spec.support.size(), 0);
    for (int s : S) {
        auto it = std::find(spec.support.begin(), spec.support.end(), s);
        if (it == spec.support.end()) throw std::invalid_argument("marginal: vertex outside support");
        idx.push_back(it - spec.support.begin());
        in[static_cast<std::size_t>(idx.back())] = 1;
    }
    ConditionalSpec out;
    out.support = S;
    const auto n = static_cast<Eigen::Index>(S.size());
    out.w_check.resize(n, n);
    out.eta_check.resize(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) out.w_check(a, b) = spec.w_check(idx[a], idx[b]);
        double e = spec.eta_check(idx[a]);
        for (Eigen::Index k = 0; k < spec.w_check.cols(); ++k)
            if (!in[static_cast<std::size_t>(k)]) e += spec.w_check(idx[a], k);
        out.eta_check(a) = e;
    }
    return out;
}

// ---------------------------------------------------------------- samplers

// One vertex with self-loop w_self and field eta: beta - w_self has the
// no-self-loop law, i.e. eta / Y with Y ~ IG(1, eta), or 2 Gamma(1/2) when
// eta = 0.
template <class Rng>
double sample_beta_single(double w_self, double eta, Rng& rng) {
    if (!(w_self >= 0.0) || !(eta >= 0.0))
        throw std::invalid_argument("sample_beta_single: w_self and eta must be nonnegative");
    if (eta > 0.0) return w_self + eta / sample_ig(1.0, eta, rng);
    std::gamma_distribution<double> gamma(0.5, 1.0);
    return w_self + 2.0 * gamma(rng);
}

// Exact sequential sampler. Keeps the conditional law of the unsampled
// vertices (dense values, sparse structure), draws one vertex from its
// one-vertex marginal, then folds it in by a rank-one Schur update.
// Reusable across draws on the same law.
class BetaSampler {
public:
    explicit BetaSampler(const WeightedGraph& g) : names_(g.free_vertices()) {
        const auto pos = index_in(names_, g.size());
        const auto n = static_cast<Eigen::Index>(names_.size());
        w0_ = Mat::Zero(n, n);
        eta0_.resize(n);
        adj0_.resize(names_.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const int v = names_[static_cast<std::size_t>(i)];
            eta0_(i) = g.effective_eta(v);
            w0_(i, i) = g.self_loop(v);
            for (const auto& nb : g.neighbors(v)) {
                if (pos[nb.v] < 0) continue;
                w0_(i, pos[nb.v]) = nb.w;
                adj0_[static_cast<std::size_t>(i)].push_back(pos[nb.v]);
            }
        }
        size_ = g.size();
    }

    BetaSampler(const ConditionalSpec& spec, std::size_t graph_size) : names_(spec.support) {
        w0_ = spec.w_check;
        eta0_ = spec.eta_check;
        adj0_.resize(names_.size());
        for (Eigen::Index i = 0; i < w0_.rows(); ++i)
            for (Eigen::Index j = 0; j < w0_.cols(); ++j)
                if (i != j && w0_(i, j) > 0.0) adj0_[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
        size_ = graph_size;
    }

    // Elimination order as positions into vertices(); empty selects the
    // dynamic minimum-degree order.
    void set_order(std::vector<int> order) {
        if (!order.empty() && order.size() != names_.size())
            throw std::invalid_argument("BetaSampler: order must cover every vertex");
        order_ = std::move(order);
    }

    const std::vector<int>& vertices() const { return names_; }

    // Values in the order of vertices().
    template <class Rng>
    const std::vector<double>& sample_local(Rng& rng) {
        const std::size_t n = names_.size();
        w_ = w0_;
        eta_ = eta0_;
        adj_ = adj0_;
        alive_.assign(n, 1);
        out_.assign(n, 0.0);
        for (std::size_t step = 0; step < n; ++step) {
            const int j = order_.empty() ? pick_min_degree() : order_[step];
            if (!alive_[static_cast<std::size_t>(j)]) throw std::invalid_argument("BetaSampler: repeated vertex in order");
            const auto& nbrs = adj_[static_cast<std::size_t>(j)];
            double eta_hat = eta_(j);
            for (int a : nbrs) eta_hat += w_(j, a);
            const double wjj = w_(j, j);
            const double b = sample_beta_single(wjj, eta_hat, rng);
            const double piv = b - wjj;
            if (!(piv > kPivotFloor * b))
                throw DegenerateError("sampler pivot below tolerance at vertex " +
                                          std::to_string(names_[static_cast<std::size_t>(j)]),
                                      names_[static_cast<std::size_t>(j)]);
            out_[static_cast<std::size_t>(j)] = b;
            alive_[static_cast<std::size_t>(j)] = 0;
            const std::vector<int> nb = nbrs;
            for (int a : nb) {
                const double ca = w_(a, j) / piv;
                eta_(a) += ca * eta_(j);
                for (int c : nb) {
                    if (a != c && w_(a, c) == 0.0) adj_[static_cast<std::size_t>(a)].push_back(c);
                    w_(a, c) += ca * w_(c, j);
                }
                auto& row = adj_[static_cast<std::size_t>(a)];
                row.erase(std::find(row.begin(), row.end(), j));
            }
        }
        return out_;
    }

    template <class Rng>
    BetaField sample(Rng& rng) {
        const auto& loc = sample_local(rng);
        BetaField f;
        f.beta.assign(size_, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < names_.size(); ++i) f.beta[static_cast<std::size_t>(names_[i])] = loc[i];
        if constexpr (std::is_same_v<Rng, Stream>)
            f.seed_info = SeedInfo{rng.master_seed(), rng.replicate(), rng.draws()};
        return f;
    }

private:
    int pick_min_degree() const {
        int best = -1;
        std::size_t best_deg = 0;
        for (std::size_t i = 0; i < alive_.size(); ++i) {
            if (!alive_[i]) continue;
            if (best < 0 || adj_[i].size() < best_deg) {
                best = static_cast<int>(i);
                best_deg = adj_[i].size();
            }
        }
        return best;
    }

    std::vector<int> names_;
    std::size_t size_ = 0;
    Mat w0_;
    Vec eta0_;
    std::vector<std::vector<int>> adj0_;
    std::vector<int> order_;
    Mat w_;
    Vec eta_;
    std::vector<std::vector<int>> adj_;
    std::vector<char> alive_;
    std::vector<double> out_;
};

// Exact draw from nu^{W,eta} on the free vertices of g. `order` lists free
// vertices (graph indices) in elimination order; omit it for minimum degree.
template <class Rng>
BetaField sample_beta(const WeightedGraph& g, Rng& rng, const std::optional<std::vector<int>>& order = std::nullopt) {
    BetaSampler s(g);
    if (order) {
        const auto pos = index_in(s.vertices(), g.size());
        std::vector<int> local;
        for (int v : *order) {
            if (pos.at(v) < 0) throw std::invalid_argument("sample_beta: order contains a non-free vertex");
            local.push_back(pos[v]);
        }
        s.set_order(std::move(local));
    }
    return s.sample(rng);
}

// Completes beta on the free vertices outside U from the conditional law
// given beta on U. Values on U are kept.
template <class Rng>
BetaField resample_outside(const WeightedGraph& g, const BetaField& field, const std::vector<int>& U, Rng& rng) {
    const auto spec = condition_params(g, field.beta, U);
    BetaSampler s(spec, g.size());
    const auto& loc = s.sample_local(rng);
    BetaField out = field;
    for (std::size_t i = 0; i < spec.support.size(); ++i) out.beta[static_cast<std::size_t>(spec.support[i])] = loc[i];
    return out;
}

}  // namespace vrjp
