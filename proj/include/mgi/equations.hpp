#ifndef MGI_EQUATIONS_HPP
#define MGI_EQUATIONS_HPP

#include "mgi/perturbation.hpp"

namespace mgi {

/// Thrown by solve_consistent when b is not in R(T).
struct InconsistentRhs : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Solution set of Tx = b (or of the best-approximate problem): the affine
/// set particular + directions, with particular the minimal p-norm element.
struct AffineSolutionSet {
    VectorXd particular;
    Subspace directions;  // N(T)
};

/// Requires b in R(T) (rank test); otherwise throws InconsistentRhs and
/// points at bas_solve.
AffineSolutionSet solve_consistent(const MetricInverse& inverse, const VectorXd& b,
                                   double tol = 1e-10);

/// Best-approximate solutions of Tx ~ b: minimizers of |Tx - b|_q, i.e. the
/// solution set of Tx = pi_R(T) b.
AffineSolutionSet bas_solve(const MetricInverse& inverse, const VectorXd& b);

/// kappa(T) = |T| |T^M| (sigma_max / sigma_min_nonzero when p = q = 2).
double condition_number(const PNormOperator& T, int restarts, std::mt19937_64& rng);

/// One verified inequality lhs <= rhs (+ slack), with the ingredients that
/// built the right-hand side. Estimated norms make both sides approximate,
/// hence the explicit slack. applicable is false when the bound's own
/// hypothesis (|T^M dT| < 1) fails. Some bounds come with a companion lower
/// bound lower_rhs <= lhs.
struct BoundRecord {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    bool holds = false;
    bool applicable = true;
    double lower_rhs = 0.0;
    bool lower_checked = false;
    bool lower_holds = true;
    double kappa = 0.0;
    double eps_T = 0.0;
    double eps_b = 0.0;
    double composite_norm = 0.0;
};

/// Shared ingredients for the three perturbation-bound checkers, estimated
/// once per (T, dT) pair.
struct PerturbationContext {
    MetricInverse inverse;    // of T
    PNormOperator delta;
    PNormOperator perturbed;  // T + dT
    double op_norm = 0.0;     // |T|
    double inv_norm = 0.0;    // |T^M|
    double delta_norm = 0.0;  // |dT|
    double composite_norm = 0.0;  // |T^M dT|
    double kappa = 0.0;
    double eps_T = 0.0;
    double slack_rel = 1e-3;  // 1e-9 when p = q = 2
};

PerturbationContext make_context(const PNormOperator& T, const PNormOperator& delta,
                                 std::mt19937_64& rng, int restarts = 12);

/// Consistent equations, same right-hand side: z solves (T + dT)z = b with
/// b in R(T); the witness x = z + T^M(dT z) solves Tx = b and satisfies
///   |z - x| / |z| <= kappa eps_T            (same_rhs.first)
///   |z - x| / |x| <= kappa eps_T / (1 - |T^M dT|)   (same_rhs.second)
struct TheoremRecordPair {
    BoundRecord first;
    BoundRecord second;
    VectorXd witness;
};

TheoremRecordPair check_thm_consistent_same_rhs(const PerturbationContext& ctx,
                                                const VectorXd& b, const VectorXd& z,
                                                double tol = 1e-8);

/// Consistent equation with perturbed right-hand side: z solves
/// (T + dT)z = b + db, b in R(T); witness x = T^M b + pi_N(T) z solves
/// Tx = b, with the two-sided bound on |z - x| / |x|.
BoundRecord check_thm_consistent_perturbed_rhs(const PerturbationContext& ctx,
                                               const VectorXd& b, const VectorXd& db,
                                               const VectorXd& z, double tol = 1e-8,
                                               VectorXd* witness = nullptr);

/// Best-approximate solutions under a range/kernel preserving perturbation:
/// z is a BAS of (T + dT)x ~ bbar; the witness x = T^M b + pi_N(T) z is a
/// BAS of Tx ~ b and
///   |z - x| / |x| <= kappa / (1 - |T^M dT|) ((|bbar| + |b|)/|pi_R(T) b| + eps_T)
/// Preconditions checked: N and R preserved (rank tests), pi_R(T) b != 0.
BoundRecord check_thm_bas(const PerturbationContext& ctx, const VectorXd& b,
                          const VectorXd& b_bar, const VectorXd& z, double tol = 1e-8,
                          VectorXd* witness = nullptr);

}  // namespace mgi

#endif
