#include "mgi/subspace.hpp"

#include <algorithm>

namespace mgi {

namespace {

int numeric_rank(const MatrixXd& A, double tol) {
    if (A.cols() == 0 || A.rows() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(A);
    const VectorXd& sv = svd.singularValues();
    double smax = sv.size() ? sv[0] : 0.0;
    if (smax == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > tol * smax) ++r;
    return r;
}

// Dual-feasibility defect of a candidate residual r against the subspace with
// orthonormal basis Q: max_j |<F(r)/|r|_p, q_j>|. Zero iff F(r) in G^perp.
double dual_defect(const VectorXd& r, double p, const MatrixXd& Q) {
    if (Q.cols() == 0) return 0.0;
    double nr = pnorm(r, p);
    if (nr == 0.0) return 0.0;
    VectorXd f = dual_map(r, p) / nr;
    return (Q.transpose() * f).cwiseAbs().maxCoeff();
}

// One smoothed Newton pass on t -> sum_i (r_i^2 + eps^2)^(p/2), r = x - Q t.
// eps = 0 gives the exact objective; for p < 2 the eps = 0 Hessian weights
// are clipped where residual coordinates vanish.
int newton_pass(const MatrixXd& Q, const VectorXd& x, double p, double eps,
                double defect_target, VectorXd& t, int max_iter) {
    const int k = static_cast<int>(Q.cols());
    const double e2 = eps * eps;
    auto objective = [&](const VectorXd& tt) {
        VectorXd r = x - Q * tt;
        double s = 0.0;
        for (int i = 0; i < r.size(); ++i) s += std::pow(r[i] * r[i] + e2, 0.5 * p);
        return s;
    };

    double h = objective(t);
    int iter = 0;
    int blind_steps = 0;  // full Newton steps taken once decreases fall below rounding
    for (; iter < max_iter; ++iter) {
        VectorXd r = x - Q * t;
        VectorXd g(r.size()), w(r.size());
        if (eps == 0.0) {
            double scale = r.cwiseAbs().maxCoeff();
            double clip = std::max(1e-12 * scale, 1e-300);
            for (int i = 0; i < r.size(); ++i) {
                g[i] = p * signed_pow(r[i], p - 1.0);
                double a = std::max(std::abs(r[i]), p < 2.0 ? clip : 0.0);
                w[i] = p * (p - 1.0) * std::pow(a, p - 2.0);
                if (!std::isfinite(w[i])) w[i] = 0.0;
            }
        } else {
            for (int i = 0; i < r.size(); ++i) {
                double q = r[i] * r[i] + e2;
                g[i] = p * r[i] * std::pow(q, 0.5 * p - 1.0);
                w[i] = p * std::pow(q, 0.5 * p - 2.0) * ((p - 1.0) * r[i] * r[i] + e2);
            }
        }
        VectorXd grad = -Q.transpose() * g;

        // stationarity in the unsmoothed dual metric
        if (eps == 0.0) {
            double nr = pnorm(r, p);
            if (nr == 0.0) break;
            double def = grad.cwiseAbs().maxCoeff() / (p * std::pow(nr, p - 1.0));
            if (def <= defect_target) break;
        } else if (grad.norm() <= 1e-14 * (1.0 + std::abs(h))) {
            break;
        }

        MatrixXd H = Q.transpose() * w.asDiagonal() * Q;
        double lam = 1e-14 * (1.0 + H.trace() / std::max(k, 1));
        VectorXd d;
        for (;;) {
            Eigen::LDLT<MatrixXd> ldlt(H + lam * MatrixXd::Identity(k, k));
            d = ldlt.solve(-grad);
            if (ldlt.info() == Eigen::Success && d.allFinite() && grad.dot(d) < 0.0) break;
            lam = std::max(lam * 100.0, 1e-10);
            if (lam > 1e12) { d = -grad; break; }
        }

        double slope = grad.dot(d);
        // predicted decrease below rounding: line search is blind, but the
        // plain Newton step still contracts locally
        if (std::abs(slope) <= 1e-13 * (1.0 + std::abs(h)) && blind_steps < 8) {
            t += d;
            h = objective(t);
            ++blind_steps;
            continue;
        }
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            double hn = objective(t + alpha * d);
            if (hn <= h + 1e-4 * alpha * slope) {
                t += alpha * d;
                h = hn;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved) break;
        if (alpha * d.norm() <= 1e-16 * (1.0 + t.norm())) break;
    }
    return iter;
}

}  // namespace

bool Subspace::contains(const VectorXd& x, double tol) const {
    double nx = x.norm();
    if (nx == 0.0) return true;
    VectorXd r = x - onb * (onb.transpose() * x);
    return r.norm() <= tol * nx;
}

Subspace make_subspace(MatrixXd basis, PNormSpace space, double rank_tol) {
    const int n = space.dim;
    if (basis.rows() != n)
        throw std::invalid_argument("make_subspace: basis row count does not match space dim");
    const int k = static_cast<int>(basis.cols());
    Subspace G{std::move(basis), MatrixXd(), MatrixXd(), space};
    if (k == 0) {
        G.onb = MatrixXd(n, 0);
        G.annihilator_basis = MatrixXd::Identity(n, n);
        return G;
    }
    Eigen::JacobiSVD<MatrixXd> svd(G.basis, Eigen::ComputeFullU);
    const VectorXd& sv = svd.singularValues();
    double smax = sv[0];
    if (smax == 0.0 || sv[std::min<int>(k, n) - 1] <= rank_tol * smax || k > n)
        throw std::invalid_argument("make_subspace: basis is rank deficient");
    G.onb = svd.matrixU().leftCols(k);
    G.annihilator_basis = svd.matrixU().rightCols(n - k);
    return G;
}

Subspace zero_subspace(PNormSpace space) {
    return make_subspace(MatrixXd(space.dim, 0), space);
}

Subspace full_subspace(PNormSpace space) {
    return make_subspace(MatrixXd::Identity(space.dim, space.dim), space);
}

ProjectionCertificate metric_project(const Subspace& G, const VectorXd& x, double tol,
                                     const VectorXd* start) {
    if (x.size() != G.space.dim)
        throw std::invalid_argument("metric_project: dimension mismatch");
    if (tol <= 0.0) throw std::invalid_argument("metric_project: tol must be positive");

    const double p = G.space.p;
    const MatrixXd& Q = G.onb;
    const int k = static_cast<int>(Q.cols());

    ProjectionCertificate cert;
    if (k == 0) {
        cert.projection = VectorXd::Zero(x.size());
        cert.residual = x;
        cert.converged = true;
        return cert;
    }

    // Euclidean least squares as start (and as the answer when p = 2)
    VectorXd t = start ? *start : VectorXd(Q.transpose() * x);
    if (!start && p != 2.0) t = Q.transpose() * x;

    VectorXd r = x - Q * t;
    if (p == 2.0 && !start) {
        cert.projection = Q * t;
        cert.residual = x - cert.projection;
        cert.annihilator_defect = dual_defect(cert.residual, p, Q);
        cert.converged = true;
        return cert;
    }
    if (p == 2.0 && start) t = Q.transpose() * x;  // closed form regardless of start

    // point (numerically) inside G: below this floor the residual is pure
    // rounding (e.g. basis vectors of a computed subspace) and the dual
    // certificate carries no information
    if (pnorm(x - Q * (Q.transpose() * x), 2.0) <= 1e-11 * std::max(1.0, x.norm())) {
        t = Q.transpose() * x;
        cert.projection = Q * t;
        cert.residual = x - cert.projection;
        cert.annihilator_defect = 0.0;
        cert.converged = true;
        return cert;
    }

    int iters = 0;
    if (p != 2.0) {
        const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
        // smoothed continuation floors the Hessian weights where residual
        // coordinates cross zero (essential for p < 2, a rescue for p > 2)
        auto continuation = [&](VectorXd& tt) {
            int it = 0;
            for (double eps : {1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12})
                it += newton_pass(Q, x, p, eps * scale, tol, tt, 50);
            it += newton_pass(Q, x, p, 0.0, 0.1 * tol, tt, 200);
            return it;
        };
        auto defect_of = [&](const VectorXd& tt) {
            return dual_defect(x - Q * tt, p, Q);
        };

        if (p < 2.0)
            iters += continuation(t);
        else
            iters += newton_pass(Q, x, p, 0.0, 0.1 * tol, t, 200);

        if (defect_of(t) > tol) {  // rare stall: retry harder
            VectorXd best = t;
            double best_def = defect_of(t);
            std::mt19937_64 retry_rng(0x9e3779b97f4a7c15ULL);
            std::normal_distribution<double> gauss;
            for (int attempt = 0; attempt < 4 && best_def > tol; ++attempt) {
                VectorXd tt = Q.transpose() * x;
                if (attempt > 0)
                    for (int j = 0; j < k; ++j)
                        tt[j] += gauss(retry_rng) * (0.1 + 0.3 * attempt) *
                                 std::max(1.0, tt.norm());
                iters += continuation(tt);
                double d = defect_of(tt);
                if (d < best_def) {
                    best_def = d;
                    best = tt;
                }
            }
            t = best;
        }
    }

    cert.projection = Q * t;
    cert.residual = x - cert.projection;
    cert.iterations = iters;
    if (pnorm(cert.residual, p) <= 1e-11 * std::max(1.0, pnorm(x, p))) {
        // residual at rounding level: x lies in G, the dual defect of the
        // noise vector carries no information
        cert.annihilator_defect = 0.0;
        cert.converged = true;
        return cert;
    }
    cert.annihilator_defect = dual_defect(cert.residual, p, Q);
    cert.converged = cert.annihilator_defect <= tol;
    return cert;
}

double distance(const VectorXd& x, const Subspace& G, double tol) {
    return pnorm(metric_project(G, x, tol).residual, G.space.p);
}

GodDecomposition god_decompose(const Subspace& G, const VectorXd& x, double tol,
                               const VectorXd* start) {
    auto cert = metric_project(G, x, tol, start);
    GodDecomposition d;
    d.in_subspace = cert.projection;
    d.complement = x - cert.projection;  // exact sum by construction
    d.certificate = std::move(cert);
    return d;
}

namespace {

// scale-invariant gap objective D_p(Mc, N) / |Mc|_p and its gradient in c
struct GapObjective {
    const Subspace& M;
    const Subspace& N;
    double tol;

    double value(const VectorXd& c, VectorXd* grad = nullptr) const {
        const double p = M.space.p;
        VectorXd x = M.onb * c;
        double v = pnorm(x, p);
        if (v == 0.0) {
            if (grad) grad->setZero(c.size());
            return 0.0;
        }
        auto cert = metric_project(N, x, tol);
        double u = pnorm(cert.residual, p);
        if (grad) {
            if (u == 0.0) {
                grad->setZero(c.size());
            } else {
                VectorXd psi_r = dual_map(cert.residual, p) / u;  // Danskin
                VectorXd psi_x = dual_map(x, p) / v;
                *grad = M.onb.transpose() * ((psi_r * v - u * psi_x) / (v * v));
            }
        }
        return u / v;
    }
};

}  // namespace

GapEstimate gap(const Subspace& M, const Subspace& N, int restarts,
                std::mt19937_64& rng, double tol) {
    if (!(M.space.dim == N.space.dim))
        throw std::invalid_argument("gap: subspaces live in different spaces");
    GapEstimate best;
    if (M.is_zero()) return best;  // delta({0}, N) = 0 by convention
    if (subspace_contained(M, N)) {
        best.witness = M.onb.col(0) / pnorm(M.onb.col(0), M.space.p);
        return best;  // delta = 0 iff M subset N
    }

    const int k = M.rank();
    const double p = M.space.p;

    if (p == 2.0 && N.space.p == 2.0) {
        // principal angles: sigma_max of (I - P_N) restricted to M
        MatrixXd A = M.onb - N.onb * (N.onb.transpose() * M.onb);
        Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
        best.value = std::min(svd.singularValues()[0], 1.0);
        best.witness = M.onb * svd.matrixV().col(0);
        return best;
    }

    GapObjective obj{M, N, tol};
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<VectorXd> starts;
    for (int j = 0; j < k; ++j) starts.push_back(VectorXd::Unit(k, j));
    for (int s = 0; s < restarts; ++s) {
        VectorXd c(k);
        for (int j = 0; j < k; ++j) c[j] = gauss(rng);
        if (c.norm() == 0.0) c = VectorXd::Unit(k, 0);
        starts.push_back(c.normalized());
    }

    for (auto& c0 : starts) {
        VectorXd c = c0, g(k);
        double f = obj.value(c, &g);
        double alpha = 0.5;
        for (int it = 0; it < 200; ++it) {
            // project out the radial component; objective is scale invariant
            VectorXd gt = g - g.dot(c) * c;
            if (gt.norm() <= 1e-13 * (1.0 + std::abs(f))) break;
            bool improved = false;
            for (int ls = 0; ls < 40; ++ls) {
                VectorXd cn = (c + alpha * gt).normalized();
                VectorXd gn(k);
                double fn = obj.value(cn, &gn);
                if (fn > f + 1e-12 * alpha * gt.squaredNorm()) {
                    c = cn;
                    f = fn;
                    g = gn;
                    improved = true;
                    alpha *= 2.0;
                    break;
                }
                alpha *= 0.5;
            }
            if (!improved || alpha < 1e-14) break;
        }
        if (f > best.value) {
            best.value = f;
            VectorXd x = M.onb * c;
            best.witness = x / pnorm(x, p);
        }
    }
    best.value = std::clamp(best.value, 0.0, 1.0);
    return best;
}

double sym_gap(const Subspace& M, const Subspace& N, int restarts,
               std::mt19937_64& rng, double tol) {
    return std::max(gap(M, N, restarts, rng, tol).value,
                    gap(N, M, restarts, rng, tol).value);
}

bool subspaces_equal(const Subspace& M, const Subspace& N, double tol) {
    if (M.space.dim != N.space.dim)
        throw std::invalid_argument("subspaces_equal: ambient dimension mismatch");
    if (M.rank() != N.rank()) return false;
    MatrixXd joined(M.space.dim, M.rank() + N.rank());
    joined << M.onb, N.onb;
    return numeric_rank(joined, tol) == M.rank();
}

bool subspace_contained(const Subspace& M, const Subspace& N, double tol) {
    if (M.space.dim != N.space.dim)
        throw std::invalid_argument("subspace_contained: ambient dimension mismatch");
    if (M.rank() == 0) return true;
    MatrixXd joined(M.space.dim, M.rank() + N.rank());
    joined << M.onb, N.onb;
    return numeric_rank(joined, tol) == N.rank();
}

}  // namespace mgi
