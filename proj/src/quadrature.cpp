#include "inhomog/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace inhomog {

namespace {

// Nodes offset by half a step, so circles centred on the real axis give
// conjugation-symmetric node sets.
std::vector<cplx> nodes(const ContourSpec& c, int n) {
    std::vector<cplx> z(n);
    for (int k = 0; k < n; ++k) z[k] = c.center + c.radius * std::polar(1.0, 2.0 * std::numbers::pi * (k + 0.5) / n);
    return z;
}

// rows x n matrix of F_i(z_k) * (z_k - center) / n
CMatrix weighted_values(const ContourSpec& c, const std::vector<cplx>& z, const RowFiller& F, int rows) {
    const int n = int(z.size());
    CMatrix M(rows, n);
    CVector buf(rows);
    for (int k = 0; k < n; ++k) {
        F(z[k], buf);
        M.col(k) = buf * ((z[k] - c.center) / double(n));
    }
    return M;
}

// Also returns the roundoff floor of every entry.
CMatrix nested_rule(const ContourSpec& outer, const ContourSpec& inner, const RowFiller& F, int rows,
                    const RowFiller& G, int cols, int points, Matrix* floor) {
    auto w = nodes(outer, points), u = nodes(inner, points);
    CMatrix Fw = weighted_values(outer, w, F, rows);
    CMatrix Gu = weighted_values(inner, u, G, cols);
    // H(i, k) = sum_l Fw(i, l) / (w_l - u_k)
    CMatrix H(rows, points);
    CVector c(points);
    for (int k = 0; k < points; ++k) {
        for (int l = 0; l < points; ++l) c(l) = 1.0 / (w[l] - u[k]);
        H.col(k) = Fw * c;
    }
    if (floor) {
        double gap = outer.radius - std::abs(outer.center - inner.center) - inner.radius;
        Eigen::VectorXd fa = Fw.cwiseAbs().rowwise().sum(), ga = Gu.cwiseAbs().rowwise().sum();
        *floor = (64 * std::numeric_limits<double>::epsilon() / gap) * fa * ga.transpose();
    }
    return H * Gu.transpose();
}

}  // namespace

CMatrix nested_integral(const ContourSpec& outer, const ContourSpec& inner, const RowFiller& F, int rows,
                        const RowFiller& G, int cols, int points) {
    return nested_rule(outer, inner, F, rows, G, cols, points, nullptr);
}

CMatrix nested_integral_adaptive(const ContourSpec& outer, const ContourSpec& inner, const RowFiller& F,
                                 int rows, const RowFiller& G, int cols, double tol, int max_points,
                                 QuadDiagnostics* diag, Matrix* roundoff) {
    int n = 64;
    Matrix floor;
    CMatrix prev = nested_rule(outer, inner, F, rows, G, cols, n, &floor);
    double resid = 0.0;
    while (n < max_points) {
        n *= 2;
        CMatrix cur = nested_rule(outer, inner, F, rows, G, cols, n, &floor);
        double scale = std::max(1.0, cur.cwiseAbs().maxCoeff());
        Matrix change = (cur - prev).cwiseAbs();
        resid = change.maxCoeff();
        bool done = ((change - floor).array() <= tol * scale).all();
        prev = std::move(cur);
        if (done) {
            if (diag) *diag = {n, resid};
            if (roundoff) *roundoff = floor;
            return prev;
        }
    }
    throw QuadratureError("double contour quadrature did not converge", resid);
}

CVector circle_integral_adaptive(const ContourSpec& c, const RowFiller& F, int rows, double tol, int max_points,
                                 QuadDiagnostics* diag) {
    int n = 64;
    auto rule = [&](int pts) -> CVector { return weighted_values(c, nodes(c, pts), F, rows).rowwise().sum(); };
    CVector prev = rule(n);
    double resid = 0.0;
    while (n < max_points) {
        n *= 2;
        CVector cur = rule(n);
        resid = (cur - prev).cwiseAbs().maxCoeff();
        double scale = std::max(1.0, cur.cwiseAbs().maxCoeff());
        prev = std::move(cur);
        if (resid <= tol * scale) {
            if (diag) *diag = {n, resid};
            return prev;
        }
    }
    throw QuadratureError("contour quadrature did not converge", resid);
}

}  // namespace inhomog
