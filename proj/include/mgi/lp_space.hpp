#ifndef MGI_LP_SPACE_HPP
#define MGI_LP_SPACE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mgi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Finite-dimensional real coordinate space with the l^p norm, 1 < p < inf.
/// The exponent restriction keeps the space smooth and strictly convex, so
/// the duality mapping is single-valued and subspaces are Chebyshev.
struct PNormSpace {
    int dim;
    double p;

    PNormSpace(int dim_, double p_) : dim(dim_), p(p_) {
        if (dim < 1)
            throw std::invalid_argument("PNormSpace: dim must be >= 1");
        if (!(p > 1.0) || !std::isfinite(p))
            throw std::invalid_argument("PNormSpace: p must lie in (1, inf), got p=" +
                                        std::to_string(p));
    }

    bool operator==(const PNormSpace& o) const { return dim == o.dim && p == o.p; }
};

/// Element of a PNormSpace.
struct Vec {
    VectorXd coords;
    PNormSpace space;

    Vec(VectorXd c, PNormSpace s) : coords(std::move(c)), space(s) {
        if (coords.size() != space.dim)
            throw std::invalid_argument("Vec: coordinate length does not match space dim");
        if (!coords.allFinite())
            throw std::invalid_argument("Vec: non-finite entry");
    }
};

/// Functional on a PNormSpace, acting by the coordinate dot product.
/// Its own norm is the conjugate-exponent norm.
struct Covec {
    VectorXd coords;
    PNormSpace space;  // the predual space

    Covec(VectorXd c, PNormSpace s) : coords(std::move(c)), space(s) {
        if (coords.size() != space.dim)
            throw std::invalid_argument("Covec: coordinate length does not match space dim");
        if (!coords.allFinite())
            throw std::invalid_argument("Covec: non-finite entry");
    }

    double operator()(const Vec& x) const { return coords.dot(x.coords); }
};

/// Conjugate exponent p' with 1/p + 1/p' = 1.
inline double conjugate_exponent(double p) {
    if (!(p > 1.0) || !std::isfinite(p))
        throw std::invalid_argument("conjugate_exponent: p must lie in (1, inf)");
    return p / (p - 1.0);
}

/// (sum |x_i|^p)^(1/p) on raw coordinates.
inline double pnorm(const VectorXd& x, double p) {
    if (p == 2.0) return x.norm();
    double m = x.cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    // factor out the max to avoid overflow/underflow in the powers
    double s = 0.0;
    for (int i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / m, p);
    return m * std::pow(s, 1.0 / p);
}

inline double pnorm(const Vec& x) { return pnorm(x.coords, x.space.p); }

/// |t|^(p-1) * sign(t) with an underflow guard near t = 0.
inline double signed_pow(double t, double e) {
    if (std::abs(t) < 1e-300) return 0.0;
    double a = std::exp(e * std::log(std::abs(t)));
    return t > 0 ? a : -a;
}

/// Duality mapping F_X: x -> f with f(x) = |x|^2 = |f|^2.
/// Coordinates: f_i = |x|_p^(2-p) * |x_i|^(p-1) * sign(x_i).
inline VectorXd dual_map(const VectorXd& x, double p) {
    if (!(p > 1.0) || !std::isfinite(p))
        throw std::invalid_argument("dual_map: p must lie in (1, inf)");
    if (p == 2.0) return x;  // F is the identity on l^2
    double nx = pnorm(x, p);
    if (nx == 0.0) return VectorXd::Zero(x.size());
    VectorXd f(x.size());
    double scale = std::pow(nx, 2.0 - p);
    for (int i = 0; i < x.size(); ++i) f[i] = scale * signed_pow(x[i], p - 1.0);
    return f;
}

inline Covec dual_map(const Vec& x) { return Covec(dual_map(x.coords, x.space.p), x.space); }

/// Norm of a functional over the space with exponent p (i.e. the p'-norm).
inline double dual_norm(const VectorXd& f, double p) {
    return pnorm(f, conjugate_exponent(p));
}

}  // namespace mgi

#endif
