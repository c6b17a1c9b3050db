#ifndef MGI_SUBSPACE_HPP
#define MGI_SUBSPACE_HPP

#include <random>

#include "mgi/lp_space.hpp"

namespace mgi {

/// Linear subspace of a PNormSpace, given by a full column rank basis.
/// Keeps a Euclidean-orthonormal copy of the basis for the solvers and a
/// basis of the annihilator G^perp (coordinate functionals killing G).
struct Subspace {
    MatrixXd basis;             // dim x k, as supplied
    MatrixXd onb;               // dim x k, orthonormal span of basis
    MatrixXd annihilator_basis; // dim x (dim-k), orthonormal
    PNormSpace space;

    int rank() const { return static_cast<int>(onb.cols()); }
    bool is_zero() const { return onb.cols() == 0; }
    bool contains(const VectorXd& x, double tol = 1e-10) const;
};

/// Builds a Subspace, rejecting rank-deficient bases (threshold relative to
/// the largest singular value).
Subspace make_subspace(MatrixXd basis, PNormSpace space, double rank_tol = 1e-10);

/// The zero subspace {0}.
Subspace zero_subspace(PNormSpace space);

/// The whole space.
Subspace full_subspace(PNormSpace space);

/// Result of a metric projection solve. Optimality is certified in the dual:
/// annihilator_defect = max_j |<F(residual)/|residual|, q_j>| over an
/// orthonormal basis q_j of G, which vanishes exactly when F(residual) is in
/// G^perp (the generalized-orthogonal-decomposition characterization).
struct ProjectionCertificate {
    VectorXd projection;
    VectorXd residual;
    double annihilator_defect = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Nearest point to x in G under the p-norm of the ambient space.
/// Closed form for p = 2; damped Newton with Armijo line search otherwise
/// (epsilon-smoothed continuation for 1 < p < 2). Optional warm start gives
/// the initial coefficient vector in the onb basis.
ProjectionCertificate metric_project(const Subspace& G, const VectorXd& x,
                                     double tol = 1e-10,
                                     const VectorXd* start = nullptr);

inline ProjectionCertificate metric_project(const Subspace& G, const Vec& x,
                                            double tol = 1e-10) {
    if (!(G.space == x.space))
        throw std::invalid_argument("metric_project: space mismatch");
    return metric_project(G, x.coords, tol);
}

/// Distance from x to G in the p-norm.
double distance(const VectorXd& x, const Subspace& G, double tol = 1e-10);

/// Generalized orthogonal decomposition x = x1 + x2 with x1 = pi_G(x) and
/// F(x2) in G^perp. The sum reproduces x exactly.
struct GodDecomposition {
    VectorXd in_subspace;   // x1
    VectorXd complement;    // x2, with F(x2) annihilating G
    ProjectionCertificate certificate;
};

GodDecomposition god_decompose(const Subspace& G, const VectorXd& x,
                               double tol = 1e-10,
                               const VectorXd* start = nullptr);

/// Estimate of the gap delta(M, N) = sup { D(x, N) : x in M, |x|_p = 1 },
/// by multi-start ascent (exact principal-angle formula at p = 2).
/// The estimate is a lower bound of the true supremum.
struct GapEstimate {
    double value = 0.0;
    VectorXd witness;  // unit-p-norm maximizer in M (empty when M = {0})
};

GapEstimate gap(const Subspace& M, const Subspace& N, int restarts,
                std::mt19937_64& rng, double tol = 1e-10);

/// Symmetrized gap max(delta(M,N), delta(N,M)).
double sym_gap(const Subspace& M, const Subspace& N, int restarts,
               std::mt19937_64& rng, double tol = 1e-10);

/// Rank-based equality test: rank([M|N]) == rank(M) == rank(N).
bool subspaces_equal(const Subspace& M, const Subspace& N, double tol = 1e-10);

/// Rank-based inclusion test M subset of N.
bool subspace_contained(const Subspace& M, const Subspace& N, double tol = 1e-10);

}  // namespace mgi

#endif
