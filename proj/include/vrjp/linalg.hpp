#pragma once

// Dense blocks of H_beta = diag(beta) - W and a Cholesky factorization with
// an explicit relative pivot floor.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "vrjp/errors.hpp"
#include "vrjp/graph.hpp"

namespace vrjp {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kPivotFloor = 1e-12;

// Position of each vertex inside U, -1 elsewhere.
inline std::vector<int> index_in(const std::vector<int>& U, std::size_t n) {
    std::vector<int> pos(n, -1);
    for (std::size_t i = 0; i < U.size(); ++i) pos.at(U[i]) = static_cast<int>(i);
    return pos;
}

inline Mat h_block(const WeightedGraph& g, const std::vector<double>& beta, const std::vector<int>& U) {
    const auto pos = index_in(U, g.size());
    const Eigen::Index n = static_cast<Eigen::Index>(U.size());
    Mat H = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int v = U[i];
        H(i, i) = beta.at(v) - g.self_loop(v);
        for (const auto& nb : g.neighbors(v))
            if (pos[nb.v] >= 0) H(i, pos[nb.v]) = -nb.w;
    }
    return H;
}

inline Mat w_block(const WeightedGraph& g, const std::vector<int>& rows, const std::vector<int>& cols) {
    const auto pos = index_in(cols, g.size());
    Mat M = Mat::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int v = rows[i];
        if (pos[v] >= 0) M(static_cast<Eigen::Index>(i), pos[v]) = g.self_loop(v);
        for (const auto& nb : g.neighbors(v))
            if (pos[nb.v] >= 0) M(static_cast<Eigen::Index>(i), pos[nb.v]) = nb.w;
    }
    return M;
}

// Cholesky of a symmetric matrix. Throws DegenerateError naming the vertex
// whose pivot L_ii^2 falls below kPivotFloor * max diagonal.
inline Eigen::LLT<Mat> factor_spd(const Mat& H, const std::vector<int>& names) {
    Eigen::LLT<Mat> llt(H);
    const double scale = H.rows() ? H.diagonal().cwiseAbs().maxCoeff() : 0.0;
    if (llt.info() != Eigen::Success) {
        throw DegenerateError("H_beta block is not positive definite");
    }
    const Mat& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        const double piv = L(i, i) * L(i, i);
        if (!(piv > kPivotFloor * scale)) {
            const int v = names.empty() ? static_cast<int>(i) : names[static_cast<std::size_t>(i)];
            throw DegenerateError("pivot below tolerance at vertex " + std::to_string(v), v);
        }
    }
    return llt;
}

}  // namespace vrjp
