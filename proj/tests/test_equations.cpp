#include "doctest.h"
#include "mgi/equations.hpp"

#include <random>

using namespace mgi;

namespace {

MatrixXd random_rank(int m, int n, int r, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    MatrixXd U(m, r), V(n, r);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < r; ++j) U(i, j) = gauss(rng);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) V(i, j) = gauss(rng);
    return U * V.transpose();
}

VectorXd gaussian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = gauss(rng);
    return x;
}

PNormOperator op(MatrixXd A, double p, double q) {
    int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    return make_operator(std::move(A), PNormSpace(n, p), PNormSpace(m, q));
}

}  // namespace

TEST_CASE("solve_consistent inverts invertible operators") {
    std::mt19937_64 rng(41);
    auto T = op(random_rank(4, 4, 4, rng), 2.7, 1.8);
    MetricInverse inv(T);
    VectorXd b = gaussian(4, rng);
    auto sol = solve_consistent(inv, b);
    CHECK(sol.directions.rank() == 0);
    CHECK((T.matrix * sol.particular - b).norm() <= 1e-9 * b.norm());
}

TEST_CASE("solve_consistent returns the minimal p-norm solution") {
    std::mt19937_64 rng(42);
    for (double p : {2.0, 1.5, 3.0}) {
        auto T = op(random_rank(4, 5, 2, rng), p, 2.0);
        VectorXd b = T.matrix * gaussian(5, rng);
        MetricInverse inv(T);
        auto sol = solve_consistent(inv, b);
        CHECK((T.matrix * sol.particular - b).norm() <= 1e-8 * (1.0 + b.norm()));
        CHECK(sol.directions.rank() == 3);
        double best = pnorm(sol.particular, p);
        for (int s = 0; s < 50; ++s) {
            VectorXd other =
                sol.particular + sol.directions.onb * gaussian(sol.directions.rank(), rng);
            CHECK(pnorm(other, p) >= best - 1e-8 * (1.0 + best));
        }
    }
}

TEST_CASE("solve_consistent rejects inconsistent right-hand sides") {
    std::mt19937_64 rng(43);
    auto T = op(random_rank(5, 4, 2, rng), 2.0, 2.0);
    MetricInverse inv(T);
    VectorXd outside = range(T).annihilator_basis.col(0);
    CHECK_THROWS_AS(solve_consistent(inv, outside), InconsistentRhs);

    auto bas = bas_solve(inv, outside);
    // the residual of the best-approximate solution is the projection residual
    VectorXd pr = metric_project(inv.ran(), outside).projection;
    CHECK((T.matrix * bas.particular - pr).norm() <= 1e-8);
    // and beats random competitors
    double best = (T.matrix * bas.particular - outside).norm();
    for (int s = 0; s < 50; ++s)
        CHECK((T.matrix * gaussian(4, rng) - outside).norm() >= best - 1e-10);
}

TEST_CASE("condition number matches the singular value ratio at p = q = 2") {
    std::mt19937_64 rng(44);
    auto A = random_rank(5, 4, 3, rng);
    Eigen::JacobiSVD<MatrixXd> svd(A);
    double expected = svd.singularValues()(0) / svd.singularValues()(2);
    auto T = op(A, 2.0, 2.0);
    CHECK(std::abs(condition_number(T, 8, rng) - expected) <= 1e-9 * expected);
}

TEST_CASE("same-rhs stability bound holds, zero perturbation gives zero lhs") {
    std::mt19937_64 rng(45);
    for (int trial = 0; trial < 15; ++trial) {
        double p = (trial % 3 == 0) ? 3.0 : 2.0;
        int r = p == 2.0 ? 2 : 4;  // kernel projection must stay linear for x
        auto T = op(random_rank(5, 4, r, rng), p, p);
        auto dT = generate_perturbation(
            T, {PerturbationKind::range_kernel_preserving, 0.1,
                static_cast<std::uint64_t>(trial)});
        auto ctx = make_context(T, dT, rng);
        VectorXd z = gaussian(4, rng);
        VectorXd b = ctx.perturbed.matrix * z;  // in R(T) since R(dT) in R(T)
        auto rec = check_thm_consistent_same_rhs(ctx, b, z);
        CHECK(rec.first.holds);
        CHECK(rec.second.applicable);
        CHECK(rec.second.holds);
        CHECK((T.matrix * rec.witness - b).norm() <= 1e-7 * (1.0 + b.norm()));
    }

    // dT = 0: the witness is z itself and both sides vanish
    std::mt19937_64 rng0(46);
    auto T = op(random_rank(4, 4, 3, rng0), 2.0, 2.0);
    auto zero = make_operator(MatrixXd::Zero(4, 4), T.domain, T.codomain);
    auto ctx = make_context(T, zero, rng0);
    VectorXd z = gaussian(4, rng0);
    auto rec = check_thm_consistent_same_rhs(ctx, T.matrix * z, z);
    CHECK(rec.first.lhs == 0.0);
    CHECK(rec.first.rhs == 0.0);
    CHECK(rec.second.lhs == 0.0);
}

TEST_CASE("perturbed-rhs bound is two-sided") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 15; ++trial) {
        double p = (trial % 3 == 0) ? 2.5 : 2.0;
        int r = p == 2.0 ? 2 : 4;
        auto T = op(random_rank(5, 4, r, rng), p, p);
        auto dT = generate_perturbation(
            T, {PerturbationKind::range_kernel_preserving, 0.1,
                100 + static_cast<std::uint64_t>(trial)});
        auto ctx = make_context(T, dT, rng);
        // z solves (T + dT) z = b + db with b = Tz, db = dT z
        VectorXd z = gaussian(4, rng);
        VectorXd b = T.matrix * z;
        VectorXd db = dT.matrix * z;
        auto rec = check_thm_consistent_perturbed_rhs(ctx, b, db, z);
        CHECK(rec.applicable);
        CHECK(rec.holds);
        CHECK(rec.lower_checked);
        CHECK(rec.lower_holds);
    }
}

TEST_CASE("perturbed-rhs: zero perturbations give exactly zero lhs") {
    std::mt19937_64 rng(48);
    auto T = op(random_rank(5, 4, 2, rng), 2.0, 2.0);
    auto zero = make_operator(MatrixXd::Zero(5, 4), T.domain, T.codomain);
    auto ctx = make_context(T, zero, rng);
    MetricInverse inv(T);
    VectorXd b = T.matrix * gaussian(4, rng);
    VectorXd z = inv(b) + kernel(T).onb * gaussian(2, rng);  // any solution
    auto rec = check_thm_consistent_perturbed_rhs(ctx, b, VectorXd::Zero(5), z);
    CHECK(rec.lhs <= 1e-12);
    CHECK(rec.rhs == 0.0);
    CHECK(rec.lower_rhs <= 0.0);
}

TEST_CASE("best-approximate-solution bound") {
    std::mt19937_64 rng(49);
    for (int trial = 0; trial < 10; ++trial) {
        double p = (trial % 3 == 0) ? 3.0 : 2.0;
        int r = p == 2.0 ? 2 : 4;
        auto T = op(random_rank(5, 4, r, rng), p, p);
        auto dT = generate_perturbation(
            T, {PerturbationKind::range_kernel_preserving, 0.1,
                200 + static_cast<std::uint64_t>(trial)});
        auto ctx = make_context(T, dT, rng);
        VectorXd b = gaussian(5, rng), b_bar = gaussian(5, rng);
        // a best-approximate solution of the perturbed problem
        MetricInverse inv_bar(ctx.perturbed);
        VectorXd z = inv_bar(b_bar);
        if (r < 4) z += 0.3 * kernel(ctx.perturbed).onb * gaussian(4 - r, rng);
        VectorXd x;
        auto rec = check_thm_bas(ctx, b, b_bar, z, 1e-7, &x);
        CHECK(rec.applicable);
        CHECK(rec.holds);
        // the witness really is a BAS of Tx ~ b
        VectorXd pb = metric_project(range(T), b).projection;
        CHECK(pnorm(T.matrix * x - pb, p) <= 1e-7 * (1.0 + pnorm(b, p)));
    }
}

TEST_CASE("bas checker rejects broken preconditions") {
    std::mt19937_64 rng(50);
    auto T = op(random_rank(5, 4, 2, rng), 2.0, 2.0);
    auto dT = generate_perturbation(T, {PerturbationKind::rank_changing, 0.1, 1});
    auto ctx = make_context(T, dT, rng);
    VectorXd b = gaussian(5, rng), b_bar = gaussian(5, rng), z = gaussian(4, rng);
    CHECK_THROWS_AS(check_thm_bas(ctx, b, b_bar, z), std::invalid_argument);

    auto ok = generate_perturbation(
        T, {PerturbationKind::range_kernel_preserving, 0.1, 2});
    auto ctx2 = make_context(T, ok, rng);
    VectorXd dead = range(T).annihilator_basis.col(0);  // pi_R(T) b = 0
    CHECK_THROWS_AS(check_thm_bas(ctx2, dead, b_bar, z), std::invalid_argument);
}

TEST_CASE("corollary: z = Phi b_bar collapses the witness to the unperturbed solution") {
    std::mt19937_64 rng(51);
    auto T = op(random_rank(5, 4, 2, rng), 2.0, 2.0);
    auto dT = generate_perturbation(
        T, {PerturbationKind::range_kernel_preserving, 0.1, 9});
    auto ctx = make_context(T, dT, rng);
    VectorXd b = gaussian(5, rng), b_bar = gaussian(5, rng);
    MetricInverse inv_bar(ctx.perturbed);
    VectorXd z = inv_bar(b_bar);  // minimal-norm BAS: no kernel component
    VectorXd x;
    check_thm_bas(ctx, b, b_bar, z, 1e-7, &x);
    CHECK((x - ctx.inverse(b)).norm() <= 1e-8 * (1.0 + x.norm()));
}
