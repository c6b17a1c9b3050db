#include "mgi/equations.hpp"

namespace mgi {

namespace {

// lhs <= rhs up to the context's relative slack
void finish_upper(BoundRecord& rec, const PerturbationContext& ctx) {
    rec.slack = ctx.slack_rel * std::max(1.0, rec.rhs);
    rec.holds = rec.lhs <= rec.rhs + rec.slack;
    rec.kappa = ctx.kappa;
    rec.eps_T = ctx.eps_T;
    rec.composite_norm = ctx.composite_norm;
}

void require_solves(const PNormOperator& A, const VectorXd& x, const VectorXd& rhs,
                    double tol, const char* who) {
    double err = (A.apply(x) - rhs).norm();
    if (err > tol * (1.0 + rhs.norm()))
        throw std::invalid_argument(std::string(who) +
                                    ": supplied z does not solve its equation (residual " +
                                    std::to_string(err) + ")");
}

}  // namespace

AffineSolutionSet solve_consistent(const MetricInverse& inverse, const VectorXd& b,
                                   double tol) {
    const PNormOperator& T = inverse.op();
    if (b.size() != T.rows())
        throw std::invalid_argument("solve_consistent: rhs dimension mismatch");
    if (b.norm() > 0) {
        Subspace line = make_subspace(b, T.codomain);
        if (!subspace_contained(line, inverse.ran(), tol))
            throw InconsistentRhs(
                "solve_consistent: b is not in R(T); the equation has no solution "
                "(use bas_solve for the best-approximate set)");
    }
    return {inverse(b), inverse.ker()};
}

AffineSolutionSet bas_solve(const MetricInverse& inverse, const VectorXd& b) {
    if (b.size() != inverse.op().rows())
        throw std::invalid_argument("bas_solve: rhs dimension mismatch");
    return {inverse(b), inverse.ker()};
}

double condition_number(const PNormOperator& T, int restarts, std::mt19937_64& rng) {
    MetricInverse inverse(T);
    double tn = operator_norm(T, restarts, rng).value;
    double hn = homogeneous_norm(inverse.as_map(), restarts, rng).value;
    return tn * hn;
}

PerturbationContext make_context(const PNormOperator& T, const PNormOperator& delta,
                                 std::mt19937_64& rng, int restarts) {
    PerturbationContext ctx{MetricInverse(T), delta, perturbed_operator(T, delta)};
    ctx.op_norm = operator_norm(T, restarts, rng).value;
    ctx.inv_norm = homogeneous_norm(ctx.inverse.as_map(), restarts, rng).value;
    ctx.delta_norm = operator_norm(delta, restarts, rng).value;
    ctx.kappa = ctx.op_norm * ctx.inv_norm;
    ctx.eps_T = ctx.op_norm > 0 ? ctx.delta_norm / ctx.op_norm : 0.0;
    if (ctx.delta_norm > 0) {
        const int n = T.cols();
        MatrixXd comp(n, n);
        for (int j = 0; j < n; ++j) comp.col(j) = ctx.inverse(delta.matrix.col(j));
        ctx.composite_norm = operator_norm(make_operator(comp, T.domain, T.domain),
                                           restarts, rng).value;
    }
    ctx.slack_rel = (T.domain.p == 2.0 && T.codomain.p == 2.0) ? 1e-9 : 1e-3;
    return ctx;
}

TheoremRecordPair check_thm_consistent_same_rhs(const PerturbationContext& ctx,
                                                const VectorXd& b, const VectorXd& z,
                                                double tol) {
    const PNormOperator& T = ctx.inverse.op();
    const double p = T.domain.p;
    require_solves(ctx.perturbed, z, b, tol, "check_thm_consistent_same_rhs");
    if (z.norm() == 0)
        throw std::invalid_argument("check_thm_consistent_same_rhs: z = 0");

    TheoremRecordPair out;
    VectorXd x = z + ctx.inverse(ctx.delta.apply(z));
    require_solves(T, x, b, tol, "check_thm_consistent_same_rhs (witness)");
    out.witness = x;

    double dist = pnorm(z - x, p);
    out.first.lhs = dist / pnorm(z, p);
    out.first.rhs = ctx.kappa * ctx.eps_T;
    finish_upper(out.first, ctx);

    out.second.lhs = dist / pnorm(x, p);
    if (ctx.composite_norm < 1.0) {
        out.second.rhs = ctx.kappa * ctx.eps_T / (1.0 - ctx.composite_norm);
        finish_upper(out.second, ctx);
    } else {
        out.second.applicable = false;
    }
    return out;
}

BoundRecord check_thm_consistent_perturbed_rhs(const PerturbationContext& ctx,
                                               const VectorXd& b, const VectorXd& db,
                                               const VectorXd& z, double tol,
                                               VectorXd* witness) {
    const PNormOperator& T = ctx.inverse.op();
    const double p = T.domain.p, q = T.codomain.p;
    require_solves(ctx.perturbed, z, b + db, tol, "check_thm_consistent_perturbed_rhs");
    if (b.norm() == 0)
        throw std::invalid_argument("check_thm_consistent_perturbed_rhs: b = 0");

    VectorXd x = ctx.inverse(b) + metric_project(ctx.inverse.ker(), z).projection;
    require_solves(T, x, b, tol, "check_thm_consistent_perturbed_rhs (witness)");
    if (witness) *witness = x;

    BoundRecord rec;
    rec.lhs = pnorm(z - x, p) / pnorm(x, p);
    rec.eps_b = pnorm(db, q) / pnorm(b, q);
    if (ctx.composite_norm < 1.0) {
        rec.rhs = ctx.kappa * (rec.eps_b + ctx.eps_T) / (1.0 - ctx.composite_norm);
        double eb = rec.eps_b;
        finish_upper(rec, ctx);
        rec.eps_b = eb;
        // companion lower bound on the same quotient
        double num = pnorm(ctx.inverse(db), p);
        double den = pnorm(ctx.inverse(b), p) + 2.0 * pnorm(z, p);
        rec.lower_rhs = (num / den - ctx.kappa * ctx.eps_T) / (1.0 + ctx.composite_norm);
        rec.lower_checked = true;
        rec.lower_holds = rec.lower_rhs <= rec.lhs + rec.slack;
    } else {
        rec.applicable = false;
    }
    return rec;
}

BoundRecord check_thm_bas(const PerturbationContext& ctx, const VectorXd& b,
                          const VectorXd& b_bar, const VectorXd& z, double tol,
                          VectorXd* witness) {
    const PNormOperator& T = ctx.inverse.op();
    const double p = T.domain.p, q = T.codomain.p;
    if (!subspaces_equal(ctx.inverse.ker(), kernel(ctx.perturbed)) ||
        !subspaces_equal(ctx.inverse.ran(), range(ctx.perturbed)))
        throw std::invalid_argument(
            "check_thm_bas: the perturbation must preserve N(T) and R(T)");
    VectorXd pb = metric_project(ctx.inverse.ran(), b).projection;
    if (pnorm(pb, q) <= tol * (1.0 + pnorm(b, q)))
        throw std::invalid_argument("check_thm_bas: pi_R(T) b vanishes");
    // z must be a best-approximate solution of (T + dT) x ~ bbar: its
    // residual has to be the metric-projection residual onto the range
    VectorXd zb = metric_project(range(ctx.perturbed), b_bar).projection;
    double zres = pnorm(ctx.perturbed.apply(z) - zb, q);
    if (zres > tol * (1.0 + pnorm(b_bar, q)))
        throw std::invalid_argument(
            "check_thm_bas: z is not a best-approximate solution (defect " +
            std::to_string(zres) + ")");

    VectorXd x = ctx.inverse(b) + metric_project(ctx.inverse.ker(), z).projection;
    if (witness) *witness = x;
    double xres = pnorm(T.apply(x) - pb, q);
    if (xres > tol * (1.0 + pnorm(b, q)))
        throw std::invalid_argument("check_thm_bas: witness is not a BAS (defect " +
                                    std::to_string(xres) + ")");

    BoundRecord rec;
    rec.lhs = pnorm(z - x, p) / pnorm(x, p);
    if (ctx.composite_norm < 1.0) {
        rec.rhs = ctx.kappa / (1.0 - ctx.composite_norm) *
                  ((pnorm(b_bar, q) + pnorm(b, q)) / pnorm(pb, q) + ctx.eps_T);
        finish_upper(rec, ctx);
    } else {
        rec.applicable = false;
    }
    return rec;
}

}  // namespace mgi
