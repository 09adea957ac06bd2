#include "inhomog/toeplitz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace inhomog {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

cplx node(const ContourSpec& c, int k, int n) {
    return c.center + c.radius * std::polar(1.0, kTwoPi * (k + 0.5) / n);
}

// p_x(w)/p_{y+1}(w) without forming either polynomial.
cplx poly_ratio(std::size_t x, std::size_t y, cplx w, const InhomogeneitySequence& a) {
    cplx r = 1.0;
    if (x <= y) {
        for (std::size_t k = x; k <= y; ++k) r /= 1.0 - w / a[k];
    } else {
        for (std::size_t k = y + 1; k < x; ++k) r *= 1.0 - w / a[k];
    }
    return r;
}

template <class Eval>
cplx adaptive_circle(const ContourSpec& contour, Eval&& eval, QuadDiagnostics* diag) {
    int n = std::max(64, contour.points);
    auto rule = [&](int pts) {
        cplx s = 0.0;
        for (int k = 0; k < pts; ++k) {
            cplx w = node(contour, k, pts);
            s += eval(w) * (w - contour.center);
        }
        return s / double(pts);
    };
    cplx prev = rule(n);
    double resid = 0.0;
    while (n < kMaxQuadPoints) {
        n *= 2;
        cplx cur = rule(n);
        resid = std::abs(cur - prev);
        prev = cur;
        if (resid <= kQuadTol * std::max(1.0, std::abs(cur))) {
            if (diag) *diag = {n, resid};
            return cur;
        }
    }
    throw QuadratureError("contour quadrature did not converge at the point cap", resid);
}

}  // namespace

ContourSpec default_contour(const InhomogeneitySequence& a, const Symbol& f, double gap) {
    ContourSpec c;
    c.center = 0.5 * (a.inf() + a.sup());
    double half = 0.5 * (a.sup() - a.inf());
    double r = half + std::max(1.0, a.sup());
    for (double b : f.betas) {
        if (b <= 0.0) continue;
        double d = c.center.real() + 1.0 / b;
        r = std::min(r, d / (1.0 + gap));
    }
    if (r * (1.0 - gap) <= half)
        throw DomainError("no admissible contour: a pole -1/beta sits too close to [inf a, sup a]");
    c.radius = r;
    return c;
}

double t_bernoulli(std::size_t x, std::size_t y, double alpha, const InhomogeneitySequence& a) {
    if (alpha < 0.0 || alpha * a.sup() > 1.0 + 1e-15)
        throw DomainError("alpha outside [0, 1/sup(a)]");
    if (y == x) return 1.0 - alpha * a[x];
    if (y == x + 1) return alpha * a[x];
    return 0.0;
}

double t_geometric(std::size_t x, std::size_t y, double beta, const InhomogeneitySequence& a) {
    if (beta < 0.0) throw DomainError("negative beta");
    if (y < x) return 0.0;
    double v = 1.0 / (1.0 + beta * a[y]);
    for (std::size_t k = x; k < y; ++k) v *= beta * a[k] / (1.0 + beta * a[k]);
    return v;
}

std::vector<double> purebirth_row_uniformized(std::size_t x, std::size_t len, double t,
                                              const InhomogeneitySequence& a) {
    std::vector<double> out(len, 0.0);
    if (len == 0) return out;
    if (t == 0.0) {
        out[0] = 1.0;
        return out;
    }
    double lam = 0.0;
    for (std::size_t j = 0; j < len; ++j) lam = std::max(lam, a[x + j]);
    const double mu = lam * t;
    std::vector<double> stay(len), move(len);
    for (std::size_t j = 0; j < len; ++j) {
        move[j] = a[x + j] / lam;
        stay[j] = 1.0 - move[j];
    }
    std::vector<double> v(len, 0.0), nv(len);
    v[0] = 1.0;
    const long kmax = long(mu + 40.0 * std::sqrt(mu) + 80.0) + long(len) + 20;
    double mass = 0.0;
    for (long k = 0; k <= kmax; ++k) {
        double w = std::exp(-mu + double(k) * std::log(mu) - std::lgamma(double(k) + 1.0));
        for (std::size_t j = 0; j < len; ++j) out[j] += w * v[j];
        mass += w;
        // far entries need many jumps: keep going until they are settled relative to themselves
        if (mass >= 1.0 - 1e-18 && double(k) > mu && (k + 1 >= long(len) + 20 || w < 1e-300)) break;
        nv[0] = v[0] * stay[0];
        for (std::size_t j = 1; j < len; ++j) nv[j] = v[j] * stay[j] + v[j - 1] * move[j - 1];
        v.swap(nv);
    }
    return out;
}

double t_purebirth(std::size_t x, std::size_t y, double t, const InhomogeneitySequence& a) {
    if (t < 0.0) throw DomainError("negative time");
    if (y < x) return 0.0;
    if (t == 0.0) return y == x ? 1.0 : 0.0;
    const std::size_t n = y - x + 1;
    std::vector<double> rates(n);
    for (std::size_t j = 0; j < n; ++j) rates[j] = a[x + j];
    std::vector<double> sorted = rates;
    std::sort(sorted.begin(), sorted.end());
    double gap = INFINITY;
    for (std::size_t j = 1; j < n; ++j) gap = std::min(gap, sorted[j] - sorted[j - 1]);
    if (gap >= 1e-8 * a.sup()) {
        double pref = 1.0;
        for (std::size_t j = 0; j + 1 < n; ++j) pref *= rates[j];
        double sum = 0.0, abs_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double d = 1.0;
            for (std::size_t k = 0; k < n; ++k)
                if (k != j) d *= rates[k] - rates[j];
            double term = std::exp(-rates[j] * t) / d;
            sum += term;
            abs_sum += std::abs(term);
        }
        // keep the residue route only while its cancellation error stays below 1e-12
        if (pref * abs_sum * 1e-16 < 1e-12) return pref * sum;
    }
    return purebirth_row_uniformized(x, n, t, a).back();
}

cplx t_numeric(const Symbol& f, std::size_t x, std::size_t y, const InhomogeneitySequence& a,
               const ContourSpec& contour, QuadDiagnostics* diag) {
    const double ay = a[y];
    for (double b : f.betas)
        if (b > 0.0 && std::abs(-1.0 / b - contour.center) <= contour.radius)
            throw DomainError("contour encloses the pole -1/beta");
    auto eval = [&](cplx w) { return symbol_eval(f, w) * poly_ratio(x, y, w, a); };
    return -adaptive_circle(contour, eval, diag) / ay;
}

Matrix bernoulli_matrix(double alpha, std::size_t L, const InhomogeneitySequence& a) {
    Matrix T = Matrix::Zero(L, L);
    for (std::size_t x = 0; x < L; ++x) {
        T(x, x) = t_bernoulli(x, x, alpha, a);
        if (x + 1 < L) T(x, x + 1) = t_bernoulli(x, x + 1, alpha, a);
    }
    return T;
}

Matrix geometric_matrix(double beta, std::size_t L, const InhomogeneitySequence& a) {
    if (beta < 0.0) throw DomainError("negative beta");
    Matrix T = Matrix::Zero(L, L);
    for (std::size_t x = 0; x < L; ++x) {
        double prod = 1.0;
        for (std::size_t y = x; y < L; ++y) {
            T(x, y) = prod / (1.0 + beta * a[y]);
            prod *= beta * a[y] / (1.0 + beta * a[y]);
        }
    }
    return T;
}

Matrix purebirth_matrix(double t, std::size_t L, const InhomogeneitySequence& a) {
    Matrix T = Matrix::Zero(L, L);
    for (std::size_t x = 0; x < L; ++x) {
        auto row = purebirth_row_uniformized(x, L - x, t, a);
        for (std::size_t j = 0; j < row.size(); ++j) T(x, x + j) = row[j];
    }
    return T;
}

Matrix t_matrix(const Symbol& f, std::size_t L, const InhomogeneitySequence& a) {
    Matrix T = Matrix::Identity(L, L);
    for (double al : f.alphas) T = T * bernoulli_matrix(al, L, a);
    for (double b : f.betas) T = T * geometric_matrix(b, L, a);
    if (f.t > 0.0) T = T * purebirth_matrix(f.t, L, a);
    return T;
}

Matrix t_matrix_numeric(const Symbol& f, std::size_t L, const InhomogeneitySequence& a,
                        const ContourSpec& contour, QuadDiagnostics* diag) {
    for (double b : f.betas)
        if (b > 0.0 && std::abs(-1.0 / b - contour.center) <= contour.radius)
            throw DomainError("contour encloses the pole -1/beta");
    auto rule = [&](int n) {
        CMatrix P(n, L), Q(n, L);
        Eigen::VectorXcd h(n);
        for (int k = 0; k < n; ++k) {
            cplx w = node(contour, k, n);
            cplx p = 1.0;
            for (std::size_t x = 0; x < L; ++x) {
                P(k, x) = p;
                p *= 1.0 - w / a[x];
                Q(k, x) = 1.0 / p;  // 1/p_{x+1}
            }
            h(k) = symbol_eval(f, w) * (w - contour.center) / double(n);
        }
        CMatrix S = P.transpose() * h.asDiagonal() * Q;
        Matrix T = Matrix::Zero(L, L);
        for (std::size_t x = 0; x < L; ++x)
            for (std::size_t y = x; y < L; ++y) T(x, y) = -S(x, y).real() / a[y];
        return T;
    };
    int n = std::max(64, contour.points);
    Matrix prev = rule(n);
    double resid = 0.0;
    while (n < kMaxQuadPoints) {
        n *= 2;
        Matrix cur = rule(n);
        resid = (cur - prev).cwiseAbs().maxCoeff();
        prev = cur;
        if (resid <= kQuadTol * std::max(1.0, cur.cwiseAbs().maxCoeff())) {
            if (diag) *diag = {n, resid};
            return cur;
        }
    }
    throw QuadratureError("matrix quadrature did not converge at the point cap", resid);
}

std::size_t tail_length(const Symbol& f, const InhomogeneitySequence& a, double eps) {
    // row 0 of the homogeneous chain at rate sup(a), which dominates every row of T_f
    const double s = a.sup();
    for (std::size_t K = 64;; K *= 2) {
        std::vector<double> v(K, 0.0), nv(K);
        v[0] = 1.0;
        for (double al : f.alphas) {
            double p = al * s;
            nv[0] = v[0] * (1 - p);
            for (std::size_t y = 1; y < K; ++y) nv[y] = v[y] * (1 - p) + v[y - 1] * p;
            v.swap(nv);
        }
        for (double b : f.betas) {
            double q = b * s / (1 + b * s), acc = 0.0;
            for (std::size_t y = 0; y < K; ++y) {
                acc = acc * q + v[y];
                nv[y] = (1 - q) * acc;
            }
            v.swap(nv);
        }
        if (f.t > 0.0) {
            double mu = f.t * s;
            std::vector<double> pois(K);
            for (std::size_t k = 0; k < K; ++k)
                pois[k] = std::exp(-mu + double(k) * std::log(mu) - std::lgamma(double(k) + 1.0));
            for (std::size_t y = 0; y < K; ++y) {
                double acc = 0.0;
                for (std::size_t k = 0; k <= y; ++k) acc += v[k] * pois[y - k];
                nv[y] = acc;
            }
            v.swap(nv);
        }
        // mass beyond K is unknown; require the last quarter to be negligible first
        double far = 0.0;
        for (std::size_t y = 3 * K / 4; y < K; ++y) far += v[y];
        if (far < 1e-3 * eps) {
            double tail = far;
            for (std::size_t y = 3 * K / 4; y-- > 0;) {
                tail += v[y];
                if (tail >= eps) return y + 1;
            }
            return 1;
        }
        if (K > (1u << 16)) throw DomainError("tail length search exceeded 65536 sites");
    }
}

double t_compose_check(const Symbol& f, const Symbol& g, const InhomogeneitySequence& a,
                       std::size_t truncation) {
    Matrix lhs = t_matrix(f, truncation, a) * t_matrix(g, truncation, a);
    Symbol fg = f * g;
    Matrix rhs = fg.is_identity() ? Matrix::Identity(truncation, truncation)
                                  : t_matrix_numeric(fg, truncation, a, default_contour(a, fg));
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

double row_sum_residual(const Matrix& T, std::size_t rows) {
    double worst = 0.0;
    for (std::size_t x = 0; x < rows; ++x) worst = std::max(worst, std::abs(T.row(x).sum() - 1.0));
    return worst;
}

double duality_residual(const Matrix& T, const InhomogeneitySequence& a, std::size_t size) {
    const std::size_t L = std::min<std::size_t>(size, T.rows() - 1);
    double worst = 0.0;
    for (std::size_t x = 0; x < L; ++x) {
        double F0 = 0.0, F1 = 0.0;
        for (std::size_t y = 0; y < L; ++y) {
            F0 += T(x, y);
            F1 += T(x + 1, y);
            double lhs = -(a[x] / a[y]) * (F1 - F0);
            worst = std::max(worst, std::abs(lhs - T(x, y)));
        }
    }
    return worst;
}

double eigenfunction_residual(const Matrix& T, const Symbol& f, std::size_t rows, cplx lambda,
                              const InhomogeneitySequence& a) {
    const std::size_t L = T.cols();
    auto p = char_poly_table(L, lambda, a);
    cplx fl = symbol_eval(f, lambda);
    double worst = 0.0;
    for (std::size_t x = 0; x < rows; ++x) {
        cplx lhs = 0.0;
        for (std::size_t y = 0; y < L; ++y) lhs += T(x, y) * p[y];
        cplx rhs = fl * p[x];
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
    }
    return worst;
}

Matrix similarity_matrix(std::size_t L, const InhomogeneitySequence& a) {
    Matrix A = Matrix::Zero(L, L);
    std::vector<double> e(L + 1, 0.0);  // e_j(1-a_0, ..., 1-a_{k-1})
    e[0] = 1.0;
    double inv_prod = 1.0;
    for (std::size_t k = 0; k < L; ++k) {
        for (std::size_t m = 0; m <= k; ++m) {
            double sign = ((k - m) % 2 == 0) ? 1.0 : -1.0;
            A(k, m) = sign * inv_prod * e[k - m];
        }
        double c = 1.0 - a[k];
        for (std::size_t j = k + 1; j >= 1; --j) e[j] += c * e[j - 1];
        inv_prod /= a[k];
    }
    return A;
}

Matrix standard_toeplitz(const Symbol& f, std::size_t L, int points) {
    std::vector<cplx> coeff(L, 0.0);
    for (int k = 0; k < points; ++k) {
        cplx z = std::polar(1.0, kTwoPi * k / points);
        cplx v = symbol_eval(f, 1.0 - z) / double(points);
        cplx zi = 1.0 / z, pw = 1.0;
        for (std::size_t j = 0; j < L; ++j) {
            coeff[j] += v * pw;
            pw *= zi;
        }
    }
    Matrix T = Matrix::Zero(L, L);
    for (std::size_t x = 0; x < L; ++x)
        for (std::size_t y = x; y < L; ++y) T(x, y) = coeff[y - x].real();
    return T;
}

cplx t_numeric_block(const BlockSymbol& f, std::size_t x, std::size_t y,
                     const InhomogeneitySequence& a, const ContourSpec& contour) {
    const std::size_t p = std::size_t(f.p);
    const std::size_t k = x / p, i = x % p, m = y / p, j = y % p;
    for (cplx pole : f.poles)
        if (std::abs(pole - contour.center) <= contour.radius)
            throw DomainError("contour encloses a pole of the block symbol");
    const auto& entry = f.entries.at(i * p + j);
    auto eval = [&](cplx w) { return entry(w) * poly_ratio(k, m, w, a); };
    return -adaptive_circle(contour, eval, nullptr) / a[m];
}

}  // namespace inhomog
