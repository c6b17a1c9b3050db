#ifndef MGI_OPERATOR_HPP
#define MGI_OPERATOR_HPP

#include <functional>
#include <string>

#include "mgi/subspace.hpp"

namespace mgi {

/// Bounded linear operator between two PNormSpaces.
struct PNormOperator {
    MatrixXd matrix;  // m x n
    PNormSpace domain;
    PNormSpace codomain;

    VectorXd apply(const VectorXd& x) const { return matrix * x; }
    int rows() const { return static_cast<int>(matrix.rows()); }
    int cols() const { return static_cast<int>(matrix.cols()); }
};

PNormOperator make_operator(MatrixXd A, PNormSpace domain, PNormSpace codomain);

/// Bounded homogeneous (not necessarily additive) map; the value type for
/// T^M, metric projectors and the perturbation expression Phi.
struct HomogeneousMap {
    std::function<VectorXd(const VectorXd&)> apply;
    PNormSpace domain;
    PNormSpace codomain;
    std::string label;
};

/// Thrown when a projection solve fails to certify optimality.
struct SolverFailure : std::runtime_error {
    double defect;
    SolverFailure(const std::string& what, double d)
        : std::runtime_error(what + " (annihilator defect " + std::to_string(d) + ")"),
          defect(d) {}
};

/// Null space of T: Euclidean-orthonormal basis from a rank-revealing SVD,
/// threshold tol * sigma_max.
Subspace kernel(const PNormOperator& T, double tol = 1e-10);

/// Range of T, same rank semantics as kernel().
Subspace range(const PNormOperator& T, double tol = 1e-10);

/// The Moore-Penrose metric generalized inverse T^M as a reusable closure.
/// Never materialized as a matrix: b is sent to the minimal p-norm element
/// of the best-approximate-solution set of Tx = b, through two certified
/// metric projections (range side in the q-norm, kernel side in the p-norm).
class MetricInverse {
public:
    explicit MetricInverse(PNormOperator T, double tol = 1e-10);

    VectorXd operator()(const VectorXd& b) const;

    const PNormOperator& op() const { return T_; }
    const Subspace& ker() const { return ker_; }
    const Subspace& ran() const { return ran_; }
    double tol() const { return tol_; }

    HomogeneousMap as_map() const;

private:
    PNormOperator T_;
    Subspace ker_;
    Subspace ran_;
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> solver_;
    double tol_;
};

/// One-shot convenience wrapper over MetricInverse.
VectorXd mgi_apply(const PNormOperator& T, const VectorXd& b, double tol = 1e-10);

/// Worst relative residuals of the four defining equations of T^M,
/// evaluated for a candidate inverse H over sampled domain/codomain vectors:
///   (1) THTx = Tx   (2) HTHy = Hy   (3) HTx = x - pi_N(T)x   (4) THy = pi_R(T)y
struct AxiomReport {
    double residual[4] = {0, 0, 0, 0};
    int samples = 0;
    bool pass = false;
    double worst() const;
};

AxiomReport mgi_axiom_check(const PNormOperator& T, const HomogeneousMap& candidate,
                            int samples, double tol, std::mt19937_64& rng);

/// Candidate defaulted to the operator's own T^M.
AxiomReport mgi_axiom_check(const PNormOperator& T, int samples, double tol,
                            std::mt19937_64& rng);

/// Multi-start estimate of sup |Hx| / |x| over the unit sphere; a lower
/// bound of the true norm. Exact for linear maps when both exponents are 2.
struct NormEstimate {
    double value = 0.0;
    VectorXd witness;
};

NormEstimate homogeneous_norm(const HomogeneousMap& H, int restarts, std::mt19937_64& rng);

/// Operator norm of a linear map (sigma_max when p = q = 2, estimator otherwise).
NormEstimate operator_norm(const PNormOperator& T, int restarts, std::mt19937_64& rng);

/// Sampled quasi-additivity defect of H on the subspace M.
struct QuasiAdditivityReport {
    double max_defect = 0.0;
    int samples = 0;
    bool pass = false;
};

QuasiAdditivityReport quasi_additivity_check(const HomogeneousMap& H, const Subspace& M,
                                             int samples, double tol, std::mt19937_64& rng);

/// Reduced minimum modulus gamma(T) = inf { |Tx| : D(x, N(T)) = 1 }.
/// Multi-start descent of the scale-invariant quotient (upper bound of the
/// infimum); smallest nonzero singular value when p = q = 2. T = 0 yields
/// value +inf with infinite = true.
struct GammaEstimate {
    double value = 0.0;
    VectorXd witness;
    bool infinite = false;
};

GammaEstimate reduced_min_modulus(const PNormOperator& T, int restarts, std::mt19937_64& rng,
                                  double tol = 1e-10);

}  // namespace mgi

#endif
