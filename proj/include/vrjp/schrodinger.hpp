#pragma once

// Solves with H_beta restricted to a vertex set U: the Green matrix, the
// harmonic function psi (psi = 1 off U, H_beta psi = 0 on U), its split by exit
// class, and a truncated path-sum oracle.
//
// Path weights are start-inclusive: a path sigma_0 ... sigma_L contributes
// prod_{i<L} W(sigma_i, sigma_{i+1}) / beta(sigma_i). With that convention
// psi = G_hat eta_hat.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vrjp/beta_field.hpp"
#include "vrjp/errors.hpp"
#include "vrjp/graph.hpp"
#include "vrjp/linalg.hpp"

namespace vrjp {

inline constexpr double kSolveTolerance = 1e-10;

inline Mat green(const WeightedGraph& g, const std::vector<double>& beta, const std::vector<int>& U) {
    const Mat H = h_block(g, beta, U);
    const auto llt = factor_spd(H, U);
    Mat G = llt.solve(Mat::Identity(H.rows(), H.cols()));
    return 0.5 * (G + G.transpose());
}

// eta_hat on U split by the class of the exit target. The explicit boundary
// field counts as conductance into the cemetery; free vertices outside U are
// reported under their own class.
inline std::map<VertexClass, Vec> exit_fields(const WeightedGraph& g, const std::vector<int>& U) {
    const auto pos = index_in(U, g.size());
    std::map<VertexClass, Vec> out;
    auto slot = [&](VertexClass c) -> Vec& {
        auto it = out.find(c);
        if (it == out.end()) it = out.emplace(c, Vec::Zero(static_cast<Eigen::Index>(U.size()))).first;
        return it->second;
    };
    for (std::size_t i = 0; i < U.size(); ++i) {
        const int v = U[i];
        if (g.eta(v) > 0.0) slot(VertexClass::cemetery)(static_cast<Eigen::Index>(i)) += g.eta(v);
        for (const auto& nb : g.neighbors(v))
            if (pos[nb.v] < 0) slot(g.vertex_class(nb.v))(static_cast<Eigen::Index>(i)) += nb.w;
    }
    return out;
}

struct PolymerSolve {
    std::vector<int> U;
    Mat green;                                 // (H_beta)_{U,U}^{-1}
    std::vector<double> psi;                   // per graph vertex, 1 off U
    std::map<VertexClass, double> boundary_mass;  // at the root, by exit class
    double residual = 0.0;                     // max |H_beta psi| over U
};

// psi on U with boundary value 1 elsewhere. The boundary split is taken at
// `at` if given, else at the graph root (left empty if neither applies).
inline PolymerSolve psi(const WeightedGraph& g, const BetaField& beta, const std::vector<int>& U,
                        std::optional<int> at = std::nullopt) {
    PolymerSolve out;
    out.U = U;
    out.psi.assign(g.size(), 1.0);
    if (!at) at = g.root();
    if (U.empty()) {
        if (at) out.boundary_mass[g.vertex_class(*at)] = 1.0;
        return out;
    }
    const Mat H = h_block(g, beta.beta, U);
    const auto llt = factor_spd(H, U);
    const auto pos = index_in(U, g.size());
    Vec rhs = Vec::Zero(H.rows());
    for (std::size_t i = 0; i < U.size(); ++i) {
        const int v = U[i];
        double r = g.eta(v);
        for (const auto& nb : g.neighbors(v))
            if (pos[nb.v] < 0) r += nb.w;
        rhs(static_cast<Eigen::Index>(i)) = r;
    }
    Vec x = llt.solve(rhs);
    double res = (H * x - rhs).cwiseAbs().maxCoeff();
    if (res > kSolveTolerance * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
        x += llt.solve(rhs - H * x);
        res = (H * x - rhs).cwiseAbs().maxCoeff();
    }
    out.green = llt.solve(Mat::Identity(H.rows(), H.cols()));
    out.green = 0.5 * (out.green + out.green.transpose());

    // Cross-check against G_hat eta_hat with eta_hat from the restriction.
    const WeightedGraph gU = marginal_params(g, U);
    Vec eta_hat(H.rows());
    for (Eigen::Index i = 0; i < H.rows(); ++i) eta_hat(i) = gU.eta(static_cast<int>(i));
    const Vec y = out.green * eta_hat;
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        if (!(x(i) > 0.0)) throw DegenerateError("psi is not positive", U[static_cast<std::size_t>(i)]);
        if (std::abs(y(i) - x(i)) > kSolveTolerance * std::abs(x(i)))
            throw IdentityViolation("psi solve and G_hat eta_hat disagree at vertex " +
                                    std::to_string(U[static_cast<std::size_t>(i)]));
        out.psi[static_cast<std::size_t>(U[static_cast<std::size_t>(i)])] = x(i);
    }
    out.residual = res;
    if (at) {
        if (pos[*at] < 0) {
            out.boundary_mass[g.vertex_class(*at)] = 1.0;
        } else {
            for (const auto& [cls, field] : exit_fields(g, U)) out.boundary_mass[cls] = out.green.row(pos[*at]).dot(field);
        }
    }
    return out;
}

// Exit masses of psi at the root by class; requires a graph with classified
// absorbing vertices.
inline std::map<VertexClass, double> boundary_split(const WeightedGraph& g, const BetaField& beta,
                                                    const std::vector<int>& U) {
    if (g.vertices_of(VertexClass::top).empty() && g.vertices_of(VertexClass::side).empty())
        throw std::invalid_argument("boundary_split: graph has no top/side classes");
    auto s = psi(g, beta, U);
    s.boundary_mass.try_emplace(VertexClass::top, 0.0);
    s.boundary_mass.try_emplace(VertexClass::side, 0.0);
    return s.boundary_mass;
}

// psi at every vertex of U by a single solve; for hot loops that do not need
// the Green matrix or the cross-check.
inline Vec solve_psi(const WeightedGraph& g, const std::vector<double>& beta, const std::vector<int>& U) {
    const Mat H = h_block(g, beta, U);
    const auto llt = factor_spd(H, U);
    const auto pos = index_in(U, g.size());
    Vec rhs = Vec::Zero(H.rows());
    for (std::size_t i = 0; i < U.size(); ++i) {
        const int v = U[i];
        double r = g.eta(v);
        for (const auto& nb : g.neighbors(v))
            if (pos[nb.v] < 0) r += nb.w;
        rhs(static_cast<Eigen::Index>(i)) = r;
    }
    return llt.solve(rhs);
}

// ---------------------------------------------------------------- path-sum oracle

struct PathTarget {
    enum class Kind { exterior, vertex, vclass };
    Kind kind = Kind::exterior;
    int vertex = -1;
    VertexClass cls = VertexClass::cemetery;

    static PathTarget exterior() { return {}; }
    static PathTarget at_vertex(int v) { return {Kind::vertex, v, VertexClass::cemetery}; }
    static PathTarget of_class(VertexClass c) { return {Kind::vclass, -1, c}; }
};

struct PathSum {
    double value = 0.0;
    double tail_bound = 0.0;
    double spectral_radius = 0.0;
};

// Sum over paths from x of length <= Lmax that stay in U before reaching the
// target. Targets outside U give psi-type sums; a target vertex inside U gives
// the Green entry G_hat(x, y) (the end vertex is then weighted too).
// tail_bound bounds the omitted paths using the spectral radius rho of
// D^{-1/2} W_UU D^{-1/2}, which is similar to the transfer matrix D^{-1} W_UU.
inline PathSum path_sum_oracle(const WeightedGraph& g, const BetaField& beta, const std::vector<int>& U, int x,
                               const PathTarget& target, int Lmax, bool allow_large = false) {
    if (!allow_large && U.size() > 12) throw OracleInapplicable("path_sum_oracle: |U| > 12");
    if (Lmax < 0) throw std::invalid_argument("path_sum_oracle: Lmax must be >= 0");
    const auto pos = index_in(U, g.size());
    const auto n = static_cast<Eigen::Index>(U.size());
    auto hits = [&](int y) {
        switch (target.kind) {
            case PathTarget::Kind::exterior: return pos[y] < 0;
            case PathTarget::Kind::vertex: return y == target.vertex;
            case PathTarget::Kind::vclass: return pos[y] < 0 && g.vertex_class(y) == target.cls;
        }
        return false;
    };
    PathSum out;
    if (pos[x] < 0) {
        out.value = hits(x) ? 1.0 : 0.0;
        return out;
    }
    const bool green_target = target.kind == PathTarget::Kind::vertex && pos[target.vertex] >= 0;

    Vec binv(n), exit(n);
    Mat P = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int v = U[static_cast<std::size_t>(i)];
        binv(i) = 1.0 / beta[v];
        double e = 0.0;
        if (g.eta(v) > 0.0 && (target.kind == PathTarget::Kind::exterior ||
                               (target.kind == PathTarget::Kind::vclass && target.cls == VertexClass::cemetery)))
            e += g.eta(v);
        if (g.self_loop(v) > 0.0) P(i, i) = g.self_loop(v) * binv(i);
        for (const auto& nb : g.neighbors(v)) {
            if (pos[nb.v] >= 0)
                P(i, pos[nb.v]) = nb.w * binv(i);
            else if (hits(nb.v))
                e += nb.w;
        }
        exit(i) = e * binv(i);
    }

    Mat S(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) S(i, j) = std::sqrt(binv(i)) * (P(i, j) / binv(i)) * std::sqrt(binv(j));
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    out.spectral_radius = rho;
    if (!(rho < 1.0 - 1e-12)) throw OracleInapplicable("path_sum_oracle: spectral radius >= 1");

    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(n);
    a(pos[x]) = 1.0;
    double value = 0.0;
    if (green_target) {
        const Eigen::Index y = pos[target.vertex];
        for (int k = 0; k <= Lmax; ++k) {
            value += a(y) * binv(y);
            a = a * P;
        }
        out.tail_bound = std::sqrt(binv(pos[x]) * binv(y)) * std::pow(rho, Lmax + 1) / (1.0 - rho);
    } else {
        for (int k = 0; k < Lmax; ++k) {
            value += a.dot(exit);
            a = a * P;
        }
        Vec e_scaled(n);
        for (Eigen::Index i = 0; i < n; ++i) e_scaled(i) = exit(i) / std::sqrt(binv(i));
        out.tail_bound = std::sqrt(binv(pos[x])) * e_scaled.norm() * std::pow(rho, Lmax) / (1.0 - rho);
    }
    out.value = value;
    return out;
}

}  // namespace vrjp
