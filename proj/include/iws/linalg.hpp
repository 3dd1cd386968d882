#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace iws {

/// splitmix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index = 0)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Rank-k truncated SVD  X ~= U diag(S) V^T.
struct TruncatedSvd {
    Eigen::MatrixXd U;  ///< rows(X) x k, orthonormal columns
    Eigen::VectorXd S;  ///< descending, non-negative
    Eigen::MatrixXd V;  ///< cols(X) x k, orthonormal columns
};

namespace detail {
// Each singular pair has a sign ambiguity; pin it so that the largest-magnitude
// entry of every right singular vector is positive.
inline void fix_signs(TruncatedSvd& svd)
{
    for (Eigen::Index c = 0; c < svd.V.cols(); ++c) {
        Eigen::Index arg = 0;
        svd.V.col(c).cwiseAbs().maxCoeff(&arg);
        if (svd.V(arg, c) < 0) {
            svd.V.col(c) *= -1.0;
            svd.U.col(c) *= -1.0;
        }
    }
}

// Completes `basis` (n x k, first `filled` columns orthonormal) with vectors
// orthogonal to the filled part. Used when X is rank deficient and the Gram
// eigenvectors cannot be mapped through X.
inline void complete_basis(Eigen::MatrixXd& basis, Eigen::Index filled)
{
    const Eigen::Index n = basis.rows();
    Eigen::Index next_unit = 0;
    for (Eigen::Index c = filled; c < basis.cols(); ++c) {
        while (next_unit < n) {
            Eigen::VectorXd v = Eigen::VectorXd::Unit(n, next_unit++);
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index k = 0; k < c; ++k)
                    v -= basis.col(k).dot(v) * basis.col(k);
            const double norm = v.norm();
            if (norm > 1e-6) {
                basis.col(c) = v / norm;
                break;
            }
        }
    }
}
} // namespace detail

/// Exact truncated SVD computed from the eigendecomposition of the smaller
/// Gram matrix. k is clamped to min(rows, cols).
inline TruncatedSvd truncated_svd(const Eigen::MatrixXd& X, Eigen::Index k)
{
    const Eigen::Index rows = X.rows(), cols = X.cols();
    k = std::min({k, rows, cols});
    TruncatedSvd out;
    const bool by_cols = cols <= rows;
    const Eigen::MatrixXd gram = by_cols ? Eigen::MatrixXd(X.transpose() * X) : Eigen::MatrixXd(X * X.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::Index g = gram.rows();

    Eigen::MatrixXd small(g, k);
    out.S.resize(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        // eigenvalues ascending
        small.col(c) = eig.eigenvectors().col(g - 1 - c);
        out.S(c) = std::sqrt(std::max(0.0, eig.eigenvalues()(g - 1 - c)));
    }

    Eigen::MatrixXd big = by_cols ? Eigen::MatrixXd(X * small) : Eigen::MatrixXd(X.transpose() * small);
    const double tol = 1e-10 * std::max(1.0, out.S.size() > 0 ? out.S(0) : 0.0);
    Eigen::Index filled = 0;
    for (Eigen::Index c = 0; c < k; ++c) {
        if (out.S(c) > tol) {
            big.col(c) /= out.S(c);
            filled = c + 1;
        } else {
            out.S(c) = 0.0;
        }
    }
    // Re-orthonormalize the mapped vectors; the squared conditioning of the Gram
    // route loses a few digits otherwise.
    for (Eigen::Index c = 0; c < filled; ++c) {
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index j = 0; j < c; ++j)
                big.col(c) -= big.col(j).dot(big.col(c)) * big.col(j);
        big.col(c).normalize();
    }
    detail::complete_basis(big, filled);

    if (by_cols) {
        out.V = std::move(small);
        out.U = std::move(big);
    } else {
        out.U = std::move(small);
        out.V = std::move(big);
    }
    detail::fix_signs(out);
    return out;
}

} // namespace iws
