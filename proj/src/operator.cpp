#include "mgi/operator.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace mgi {

namespace {

// multi-start ascent/descent of a scale-invariant objective on the unit
// Euclidean sphere of R^n; fg fills the gradient when the pointer is non-null
struct SearchResult {
    double value = 0.0;
    VectorXd point;
};

SearchResult sphere_search(int n, bool maximize,
                           const std::function<double(const VectorXd&, VectorXd*)>& fg,
                           int restarts, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    std::vector<VectorXd> starts;
    for (int j = 0; j < n; ++j) starts.push_back(VectorXd::Unit(n, j));
    for (int s = 0; s < restarts; ++s) {
        VectorXd c(n);
        for (int j = 0; j < n; ++j) c[j] = gauss(rng);
        if (c.norm() == 0.0) c = VectorXd::Unit(n, 0);
        starts.push_back(c.normalized());
    }

    const double sign = maximize ? 1.0 : -1.0;
    SearchResult best;
    bool have_best = false;
    for (auto& c0 : starts) {
        VectorXd c = c0, g(n);
        double f = sign * fg(c, &g);
        g *= sign;
        double alpha = 0.5;
        for (int it = 0; it < 200; ++it) {
            VectorXd gt = g - g.dot(c) * c;
            if (gt.norm() <= 1e-13 * (1.0 + std::abs(f))) break;
            bool improved = false;
            for (int ls = 0; ls < 40; ++ls) {
                VectorXd cn = (c + alpha * gt).normalized();
                VectorXd gn(n);
                double fn = sign * fg(cn, &gn);
                if (fn > f + 1e-12 * alpha * gt.squaredNorm()) {
                    c = cn;
                    f = fn;
                    g = sign * gn;
                    improved = true;
                    alpha *= 2.0;
                    break;
                }
                alpha *= 0.5;
            }
            if (!improved || alpha < 1e-14) break;
        }
        if (!have_best || f > best.value) {
            best.value = f;
            best.point = c;
            have_best = true;
        }
    }
    best.value *= sign;
    return best;
}

VectorXd gaussian_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = gauss(rng);
    return x;
}

}  // namespace

PNormOperator make_operator(MatrixXd A, PNormSpace domain, PNormSpace codomain) {
    if (A.cols() != domain.dim || A.rows() != codomain.dim)
        throw std::invalid_argument("make_operator: matrix shape does not match spaces");
    if (!A.allFinite())
        throw std::invalid_argument("make_operator: non-finite entry");
    return PNormOperator{std::move(A), domain, codomain};
}

Subspace kernel(const PNormOperator& T, double tol) {
    const int n = T.cols();
    Eigen::JacobiSVD<MatrixXd> svd(T.matrix, Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    double smax = sv.size() ? sv[0] : 0.0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (smax > 0.0 && sv[i] > tol * smax) ++r;
    if (r == n) return zero_subspace(T.domain);
    return make_subspace(svd.matrixV().rightCols(n - r), T.domain);
}

Subspace range(const PNormOperator& T, double tol) {
    Eigen::JacobiSVD<MatrixXd> svd(T.matrix, Eigen::ComputeFullU);
    const VectorXd& sv = svd.singularValues();
    double smax = sv.size() ? sv[0] : 0.0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (smax > 0.0 && sv[i] > tol * smax) ++r;
    if (r == 0) return zero_subspace(T.codomain);
    return make_subspace(svd.matrixU().leftCols(r), T.codomain);
}

MetricInverse::MetricInverse(PNormOperator T, double tol)
    : T_(std::move(T)), ker_(kernel(T_)), ran_(range(T_)), tol_(tol) {
    if (tol <= 0.0) throw std::invalid_argument("MetricInverse: tol must be positive");
    solver_.compute(T_.matrix);
}

VectorXd MetricInverse::operator()(const VectorXd& b) const {
    if (b.size() != T_.codomain.dim)
        throw std::invalid_argument("MetricInverse: vector not in codomain");
    // best approximation of b in R(T), q-norm
    auto rc = metric_project(ran_, b, tol_);
    if (!rc.converged)
        throw SolverFailure("MetricInverse: range projection not certified", rc.annihilator_defect);
    // any particular solution of T x0 = pi_R(b)
    VectorXd x0 = solver_.solve(rc.projection);
    // strip the p-norm nearest kernel component
    auto kc = metric_project(ker_, x0, tol_);
    if (!kc.converged)
        throw SolverFailure("MetricInverse: kernel projection not certified", kc.annihilator_defect);
    return x0 - kc.projection;
}

HomogeneousMap MetricInverse::as_map() const {
    MetricInverse copy = *this;
    return HomogeneousMap{[copy](const VectorXd& y) { return copy(y); },
                          T_.codomain, T_.domain, "T^M"};
}

VectorXd mgi_apply(const PNormOperator& T, const VectorXd& b, double tol) {
    return MetricInverse(T, tol)(b);
}

double AxiomReport::worst() const {
    return std::max(std::max(residual[0], residual[1]), std::max(residual[2], residual[3]));
}

AxiomReport mgi_axiom_check(const PNormOperator& T, const HomogeneousMap& candidate,
                            int samples, double tol, std::mt19937_64& rng) {
    if (!(candidate.domain == T.codomain) || !(candidate.codomain == T.domain))
        throw std::invalid_argument("mgi_axiom_check: candidate spaces do not match T");
    const double p = T.domain.p, q = T.codomain.p;
    Subspace N = kernel(T), R = range(T);

    std::vector<VectorXd> xs, ys;
    for (int s = 0; s < samples; ++s) {
        xs.push_back(gaussian_vector(T.cols(), rng));
        ys.push_back(gaussian_vector(T.rows(), rng));
    }

    // data-driven magnitude of T and of the candidate, for the denominators
    double t_scale = 0.0, h_scale = 0.0;
    std::vector<VectorXd> hy(ys.size());
    for (size_t s = 0; s < ys.size(); ++s) {
        hy[s] = candidate.apply(ys[s]);
        h_scale = std::max(h_scale, pnorm(hy[s], p) / pnorm(ys[s], q));
    }
    for (const auto& x : xs)
        t_scale = std::max(t_scale, pnorm(T.apply(x), q) / pnorm(x, p));
    t_scale = std::max(t_scale, 1e-300);
    h_scale = std::max(h_scale, 1e-300);

    AxiomReport rep;
    rep.samples = samples;
    for (size_t s = 0; s < xs.size(); ++s) {
        const VectorXd& x = xs[s];
        const VectorXd& y = ys[s];
        double sx = pnorm(x, p), sy = pnorm(y, q);

        VectorXd Tx = T.apply(x);
        VectorXd HTx = candidate.apply(Tx);
        VectorXd THTx = T.apply(HTx);
        rep.residual[0] = std::max(rep.residual[0], pnorm(THTx - Tx, q) / (t_scale * sx));

        VectorXd THy = T.apply(hy[s]);
        VectorXd HTHy = candidate.apply(THy);
        rep.residual[1] = std::max(rep.residual[1], pnorm(HTHy - hy[s], p) / (h_scale * sy));

        VectorXd pnx = metric_project(N, x).projection;
        rep.residual[2] = std::max(rep.residual[2], pnorm(HTx - (x - pnx), p) / sx);

        VectorXd pry = metric_project(R, y).projection;
        rep.residual[3] = std::max(rep.residual[3], pnorm(THy - pry, q) / sy);
    }
    rep.pass = rep.worst() <= tol;
    return rep;
}

AxiomReport mgi_axiom_check(const PNormOperator& T, int samples, double tol,
                            std::mt19937_64& rng) {
    MetricInverse inv(T);
    return mgi_axiom_check(T, inv.as_map(), samples, tol, rng);
}

NormEstimate homogeneous_norm(const HomogeneousMap& H, int restarts, std::mt19937_64& rng) {
    const int n = H.domain.dim;
    const double p = H.domain.p, q = H.codomain.p;

    // Hilbert case: if the map behaves additively on samples, it is a matrix
    // in disguise and sigma_max is exact
    if (p == 2.0 && q == 2.0) {
        bool additive = true;
        for (int s = 0; s < 4 && additive; ++s) {
            VectorXd a = gaussian_vector(n, rng), b = gaussian_vector(n, rng);
            VectorXd d = H.apply(a + b) - H.apply(a) - H.apply(b);
            double scale = H.apply(a).norm() + H.apply(b).norm() + 1e-300;
            additive = d.norm() <= 1e-8 * scale;
        }
        if (additive) {
            MatrixXd A(H.codomain.dim, n);
            for (int j = 0; j < n; ++j) A.col(j) = H.apply(VectorXd::Unit(n, j));
            Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
            NormEstimate est;
            est.value = svd.singularValues()[0];
            est.witness = svd.matrixV().col(0);
            return est;
        }
    }

    // finite-difference gradient; evaluations go through certified solves
    auto fg = [&](const VectorXd& c, VectorXd* grad) {
        auto val = [&](const VectorXd& u) {
            double nu = pnorm(u, p);
            if (nu == 0.0) return 0.0;
            return pnorm(H.apply(u), q) / nu;
        };
        double f = val(c);
        if (grad) {
            grad->resize(n);
            double h = 1e-6;
            for (int j = 0; j < n; ++j) {
                VectorXd e = VectorXd::Unit(n, j);
                (*grad)[j] = (val(c + h * e) - val(c - h * e)) / (2.0 * h);
            }
        }
        return f;
    };
    auto res = sphere_search(n, true, fg, restarts, rng);
    NormEstimate est;
    // report the witness normalized in the domain p-norm
    est.witness = res.point / pnorm(res.point, p);
    est.value = pnorm(H.apply(est.witness), q);
    return est;
}

NormEstimate operator_norm(const PNormOperator& T, int restarts, std::mt19937_64& rng) {
    const double p = T.domain.p, q = T.codomain.p;
    if (p == 2.0 && q == 2.0) {
        Eigen::JacobiSVD<MatrixXd> svd(T.matrix, Eigen::ComputeFullV);
        NormEstimate est;
        est.value = svd.singularValues()[0];
        est.witness = svd.matrixV().col(0);
        return est;
    }
    const int n = T.cols();
    auto fg = [&](const VectorXd& c, VectorXd* grad) {
        VectorXd Ax = T.apply(c);
        double u = pnorm(Ax, q), v = pnorm(c, p);
        if (grad) {
            VectorXd gu = u > 0 ? VectorXd(T.matrix.transpose() * (dual_map(Ax, q) / u))
                                : VectorXd::Zero(n);
            VectorXd gv = dual_map(c, p) / v;
            *grad = (gu * v - u * gv) / (v * v);
        }
        return u / v;
    };
    auto res = sphere_search(n, true, fg, restarts, rng);
    NormEstimate est;
    est.witness = res.point / pnorm(res.point, p);
    est.value = pnorm(T.apply(est.witness), q);
    return est;
}

QuasiAdditivityReport quasi_additivity_check(const HomogeneousMap& H, const Subspace& M,
                                             int samples, double tol, std::mt19937_64& rng) {
    if (M.space.dim != H.domain.dim)
        throw std::invalid_argument("quasi_additivity_check: M not in the domain of H");
    QuasiAdditivityReport rep;
    rep.samples = samples;
    const double q = H.codomain.p;
    for (int s = 0; s < samples; ++s) {
        VectorXd x = gaussian_vector(H.domain.dim, rng);
        VectorXd z = M.is_zero() ? VectorXd::Zero(M.space.dim)
                                 : VectorXd(M.onb * gaussian_vector(M.rank(), rng));
        VectorXd hx = H.apply(x), hz = H.apply(z), hxz = H.apply(x + z);
        double scale = pnorm(hx, q) + pnorm(hz, q) + pnorm(hxz, q) + 1e-300;
        rep.max_defect = std::max(rep.max_defect, pnorm(hxz - hx - hz, q) / scale);
    }
    rep.pass = rep.max_defect <= tol;
    return rep;
}

GammaEstimate reduced_min_modulus(const PNormOperator& T, int restarts, std::mt19937_64& rng,
                                  double tol) {
    GammaEstimate est;
    Eigen::JacobiSVD<MatrixXd> svd(T.matrix, Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) {
        est.infinite = true;  // no x with D(x, N(T)) = 1
        est.value = std::numeric_limits<double>::infinity();
        return est;
    }
    const double p = T.domain.p, q = T.codomain.p;
    Subspace N = kernel(T);

    if (p == 2.0 && q == 2.0) {
        int r = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > 1e-10 * sv[0]) ++r;
        est.value = sv[r - 1];
        est.witness = svd.matrixV().col(r - 1);
        return est;
    }

    // W spans a Euclidean complement of N(T); D_p(Wc, N) > 0 for c != 0
    const MatrixXd& W = N.annihilator_basis;
    const int k = static_cast<int>(W.cols());
    auto fg = [&](const VectorXd& c, VectorXd* grad) {
        VectorXd x = W * c;
        VectorXd Tx = T.apply(x);
        auto cert = metric_project(N, x, tol);
        double u = pnorm(Tx, q);
        double v = pnorm(cert.residual, p);
        if (grad) {
            VectorXd gu = u > 0 ? VectorXd(W.transpose() * (T.matrix.transpose() * (dual_map(Tx, q) / u)))
                                : VectorXd::Zero(k);
            VectorXd gv = W.transpose() * (dual_map(cert.residual, p) / v);  // Danskin
            *grad = (gu * v - u * gv) / (v * v);
        }
        return u / v;
    };
    auto res = sphere_search(k, false, fg, restarts, rng);
    VectorXd x = W * res.point;
    double d = distance(x, N, tol);
    est.witness = x / d;  // unit distance from the kernel
    est.value = res.value;
    return est;
}

}  // namespace mgi
