#include "inhomog/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "inhomog/parallel.hpp"

namespace inhomog {

namespace {

double real_part(cplx v, double scale) {
    if (std::abs(v.imag()) > 1e-9 * std::max(1.0, scale))
        throw QuadratureError("kernel entry has a non-negligible imaginary part", std::abs(v.imag()));
    return v.real();
}

double max_alpha(const Symbol& f) {
    double m = 0.0;
    for (double al : f.alphas) m = std::max(m, al);
    return m;
}

double max_beta(const Symbol& f) {
    double m = 0.0;
    for (double b : f.betas) m = std::max(m, b);
    return m;
}

bool contains(const Config& c, int x) { return std::binary_search(c.begin(), c.end(), x); }

}  // namespace

KernelContours kernel_contours(const InhomogeneitySequence& a, const Symbol& outer_symbol,
                               const Symbol& inner_symbol, double nesting) {
    if (nesting <= 0.0 || nesting >= 1.0) throw DomainError("nesting ratio must lie in (0, 1)");
    // outer circle through -m and sup + m: distance m to the origin and to every a_x
    double m = 0.5 * a.sup();
    const double beta = max_beta(outer_symbol);
    if (beta > 0.0) m = std::min(m, 0.8 / beta);
    KernelContours k;
    k.outer.center = 0.5 * a.sup();
    k.outer.radius = 0.5 * a.sup() + m;
    k.inner.center = 0.0;
    k.inner.radius = nesting * m;
    const double alpha = max_alpha(inner_symbol);
    if (alpha > 0.0 && k.inner.radius >= 0.9 / alpha) k.inner.radius = 0.9 / alpha;
    if (!(k.inner.radius > 0.0)) throw DomainError("no admissible inner contour");
    return k;
}

Matrix kernel_array_matrix(const Symbol& f, const std::vector<LevelPoint>& pts, const InhomogeneitySequence& a,
                           double nesting) {
    const int m = int(pts.size());
    int xmax = 0;
    for (auto& p : pts) {
        if (p.n < 1 || p.x < 0) throw DomainError("kernel point out of range");
        xmax = std::max(xmax, p.x);
    }
    KernelContours c = kernel_contours(a, f, f, nesting);
    for (double b : f.betas)
        if (b > 0.0 && std::abs(-1.0 / b - c.outer.center) <= c.outer.radius)
            throw DomainError("outer contour encloses a pole -1/beta");

    RowFiller F = [&](cplx w, CVector& out) {
        auto p = char_poly_table(xmax + 1, w, a);
        cplx fw = symbol_eval(f, w);
        for (int i = 0; i < m; ++i) out(i) = fw * std::pow(w, pts[i].n) / p[pts[i].x + 1];
    };
    RowFiller G = [&](cplx u, CVector& out) {
        auto p = char_poly_table(xmax, u, a);
        cplx fu = symbol_eval(f, u);
        for (int j = 0; j < m; ++j) out(j) = p[pts[j].x] / (fu * std::pow(u, pts[j].n));
    };
    CMatrix R = nested_integral_adaptive(c.outer, c.inner, F, m, G, m);

    std::vector<std::pair<int, int>> upper;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (pts[j].n > pts[i].n) upper.push_back({i, j});
    CVector S;
    if (!upper.empty()) {
        RowFiller H = [&](cplx w, CVector& out) {
            auto p = char_poly_table(xmax + 1, w, a);
            for (std::size_t r = 0; r < upper.size(); ++r) {
                auto [i, j] = upper[r];
                out(r) = p[pts[j].x] / (p[pts[i].x + 1] * std::pow(w, pts[j].n - pts[i].n));
            }
        };
        S = circle_integral_adaptive(c.outer, H, int(upper.size()));
    }

    CMatrix K = -R;
    // the single-contour term enters with a plus sign (checked against the two-level Gibbs law)
    for (std::size_t r = 0; r < upper.size(); ++r) K(upper[r].first, upper[r].second) += S(r);
    Matrix out(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out(i, j) = real_part(K(i, j), std::abs(K(i, j))) / a[pts[i].x];
    return out;
}

double kernel_array(const Symbol& f, LevelPoint p1, LevelPoint p2, const InhomogeneitySequence& a,
                    double nesting) {
    return kernel_array_matrix(f, {p1, p2}, a, nesting)(0, 1);
}

Matrix kernel_level_matrix(int N, const Schedule& sched, const std::vector<TimePoint>& pts,
                           const InhomogeneitySequence& a, double nesting) {
    if (N < 1) throw DomainError("N must be positive");
    const int m = int(pts.size());
    int xmax = 0, tmax = 0;
    for (auto& q : pts) {
        if (q.t < 0 || q.t > int(sched.size()) || q.x < 0) throw DomainError("time-site point out of range");
        xmax = std::max(xmax, q.x);
        tmax = std::max(tmax, q.t);
    }
    std::vector<Symbol> f0(tmax + 1);
    for (int t = 0; t <= tmax; ++t) f0[t] = schedule_symbol(sched, 0, t);
    const Symbol& all = f0[tmax];
    KernelContours c = kernel_contours(a, all, all, nesting);

    // F_j(w) = f_{0,t_j}(w) w^N / p_{x_j+1}(w),  G_i(u) = p_{x_i}(u) / (f_{0,s_i}(u) u^N)
    RowFiller F = [&](cplx w, CVector& out) {
        auto p = char_poly_table(xmax + 1, w, a);
        cplx wn = std::pow(w, N);
        std::vector<cplx> fv(tmax + 1);
        for (int t = 0; t <= tmax; ++t) fv[t] = symbol_eval(f0[t], w);
        for (int j = 0; j < m; ++j) out(j) = fv[pts[j].t] * wn / p[pts[j].x + 1];
    };
    RowFiller G = [&](cplx u, CVector& out) {
        auto p = char_poly_table(xmax, u, a);
        cplx un = std::pow(u, N);
        std::vector<cplx> fv(tmax + 1);
        for (int t = 0; t <= tmax; ++t) fv[t] = symbol_eval(f0[t], u);
        for (int i = 0; i < m; ++i) out(i) = p[pts[i].x] / (fv[pts[i].t] * un);
    };
    CMatrix R = nested_integral_adaptive(c.outer, c.inner, F, m, G, m);

    std::map<std::pair<int, int>, Matrix> transfer;
    Matrix K(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            double v = -real_part(R(j, i), std::abs(R(j, i))) / a[pts[j].x];
            if (pts[j].t > pts[i].t) {
                auto key = std::make_pair(pts[i].t, pts[j].t);
                auto it = transfer.find(key);
                if (it == transfer.end())
                    it = transfer.emplace(key, t_matrix(schedule_symbol(sched, key.first, key.second), xmax + 2, a))
                             .first;
                v -= it->second(pts[i].x, pts[j].x);
            }
            K(i, j) = v;
        }
    }
    return K;
}

double kernel_level(int N, const Schedule& sched, TimePoint q1, TimePoint q2, const InhomogeneitySequence& a,
                    double nesting) {
    return kernel_level_matrix(N, sched, {q1, q2}, a, nesting)(0, 1);
}

double correlation_det(const Matrix& K) {
    if (K.rows() == 0) return 1.0;
    return K.determinant();
}

namespace {

// z^x e^{1/z - sigma z} and v^{-y-1} e^{sigma v - 1/v} on the sites xs.
struct BesselFactors {
    RowFiller z_side, v_side;
};

BesselFactors bessel_factors(double sigma, const std::vector<int>& xs) {
    const int m = int(xs.size());
    BesselFactors b;
    b.z_side = [sigma, xs, m](cplx z, CVector& out) {
        cplx e = std::exp(1.0 / z - sigma * z);
        for (int i = 0; i < m; ++i) out(i) = std::pow(z, xs[i]) * e;
    };
    b.v_side = [sigma, xs, m](cplx v, CVector& out) {
        cplx e = std::exp(sigma * v - 1.0 / v);
        for (int j = 0; j < m; ++j) out(j) = std::pow(v, -xs[j] - 1) * e;
    };
    return b;
}

// The node sets are conjugation symmetric, so any imaginary part is roundoff.
Matrix transpose_real(const CMatrix& R) { return R.transpose().real(); }

}  // namespace

Matrix bessel_kernel_matrix(double sigma, const std::vector<int>& xs, int points) {
    if (sigma < 0.0) throw DomainError("sigma must be nonnegative");
    const int m = int(xs.size());
    const ContourSpec small{0.0, 0.8, 64}, large{0.0, 1.25, 64};
    auto f = bessel_factors(sigma, xs);
    // |z| < |v|: R(j, i) = J(x_i, x_j)
    if (points > 0) return transpose_real(nested_integral(large, small, f.v_side, m, f.z_side, m, points));
    Matrix floor_a, floor_b;
    Matrix A = transpose_real(nested_integral_adaptive(large, small, f.v_side, m, f.z_side, m, 1e-13, 4096,
                                                       nullptr, &floor_a));
    // moving the z circle outside crosses the pole v = z, whose residue gives delta_{xy}:
    // J(x_i, x_j) = delta_ij - S(i, j) with z on the large circle
    Matrix S = nested_integral_adaptive(large, small, f.z_side, m, f.v_side, m, 1e-13, 4096, nullptr, &floor_b)
                   .real();
    Matrix J(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            J(i, j) = floor_a(j, i) <= floor_b(i, j) ? A(i, j) : (xs[i] == xs[j] ? 1.0 : 0.0) - S(i, j);
    return J;
}

double bessel_kernel(double sigma, int x, int y, int points) {
    return bessel_kernel_matrix(sigma, {x, y}, points)(0, 1);
}

Matrix bessel_finite_kernel(const InhomogeneitySequence& a, double zeta, int N, const std::vector<int>& ys) {
    if (zeta < 0.0) throw DomainError("zeta must be nonnegative");
    const int m = int(ys.size());
    int ymax = 0;
    for (int y : ys) {
        if (y + N < 0) throw DomainError("site below the packed start");
        ymax = std::max(ymax, y);
    }
    if (std::size_t(ymax + N + 1) > a.size()) throw std::out_of_range("inhomogeneity prefix too short");
    // zeros of (1 - zeta v / N)^N and of Q(z) must stay outside |v| = 2 and |z| = 1
    if (zeta > 0.0 && N <= 2.2 * zeta) throw DomainError("N too small for the rescaled contours");
    for (int k = 0; k <= ymax + N; ++k)
        if (zeta * std::abs(a[k] - 1.0) * 1.1 >= N) throw DomainError("N too small for the rescaled contours");

    const double s = zeta / N;
    // Q_n(v) = prod_{k<n} (1 + s v (a_k - 1)) for every n needed
    auto q_table = [&](cplx v) {
        std::vector<cplx> q(ymax + N + 2);
        q[0] = 1.0;
        for (int k = 0; k <= ymax + N; ++k) q[k + 1] = q[k] * (1.0 + s * v * (a[k] - 1.0));
        return q;
    };
    ContourSpec outer{0.0, 2.0, 64}, inner{0.0, 1.0, 64};
    RowFiller F = [&](cplx v, CVector& out) {
        auto q = q_table(v);
        cplx common = std::exp(-1.0 / v) / std::pow(1.0 - s * v, N);
        for (int j = 0; j < m; ++j) out(j) = std::pow(v, -ys[j] - 1) * q[ys[j] + N] * common;
    };
    RowFiller G = [&](cplx z, CVector& out) {
        auto q = q_table(z);
        cplx common = std::exp(1.0 / z) * std::pow(1.0 - s * z, N);
        for (int i = 0; i < m; ++i) out(i) = std::pow(z, ys[i]) * common / q[ys[i] + N + 1];
    };
    return transpose_real(nested_integral_adaptive(outer, inner, F, m, G, m, 1e-13));
}

std::vector<BesselDeviation> bessel_limit_check(const InhomogeneitySequence& a, double zeta,
                                                const std::vector<int>& N_list, int m) {
    std::vector<int> ys;
    for (int y = -m; y <= m; ++y) ys.push_back(y);
    Matrix J = bessel_kernel_matrix(zeta * a.mean(), ys);
    std::vector<BesselDeviation> out;
    for (int N : N_list) {
        Matrix K = bessel_finite_kernel(a, zeta, N, ys);
        BesselDeviation d{N, 0.0, 0.0};
        for (int i = 0; i < K.rows(); ++i) {
            d.diagonal = std::max(d.diagonal, std::abs(K(i, i) - J(i, i)));
            for (int j = i + 1; j < K.rows(); ++j) {
                double mk = K(i, i) * K(j, j) - K(i, j) * K(j, i);
                double mj = J(i, i) * J(j, j) - J(i, j) * J(j, i);
                d.minors = std::max(d.minors, std::abs(mk - mj));
            }
        }
        out.push_back(d);
    }
    return out;
}

std::vector<MeanEstimate> mc_correlation(const std::vector<std::vector<TimePoint>>& point_sets,
                                         const Schedule& sched, int N, const InhomogeneitySequence& a,
                                         long replicas, std::uint64_t seed) {
    int tmax = 0;
    for (auto& set : point_sets)
        for (auto& q : set) {
            if (q.t < 0 || q.t > int(sched.size())) throw DomainError("time outside the schedule");
            tmax = std::max(tmax, q.t);
        }
    const std::size_t K = point_sets.size();
    auto parts = parallel_chunks<std::vector<long>>(replicas, [&](long lo, long hi) {
        std::vector<long> hits(K, 0);
        std::vector<Config> path(tmax + 1);
        for (long r = lo; r < hi; ++r) {
            RngStream rng{seed, std::uint64_t(r)};
            ArrayState s = packed_array(N);
            path[0] = s.levels.back();
            for (int k = 0; k < tmax; ++k) {
                run_step(s, sched[k], a, rng, std::uint64_t(k));
                path[k + 1] = s.levels.back();
            }
            for (std::size_t i = 0; i < K; ++i) {
                bool all = true;
                for (auto& q : point_sets[i]) all = all && contains(path[q.t], q.x);
                hits[i] += all;
            }
        }
        return hits;
    });
    std::vector<MeanEstimate> out;
    for (std::size_t i = 0; i < K; ++i) {
        long h = 0;
        for (auto& p : parts) h += p[i];
        out.push_back(binomial_estimate(h, replicas));
    }
    return out;
}

std::vector<MeanEstimate> mc_correlation_array(const std::vector<std::vector<LevelPoint>>& point_sets,
                                               const Schedule& sched, const InhomogeneitySequence& a,
                                               long replicas, std::uint64_t seed) {
    int depth = 1;
    for (auto& set : point_sets)
        for (auto& p : set) {
            if (p.n < 1) throw DomainError("level must be positive");
            depth = std::max(depth, p.n);
        }
    const std::size_t K = point_sets.size();
    auto parts = parallel_chunks<std::vector<long>>(replicas, [&](long lo, long hi) {
        std::vector<long> hits(K, 0);
        for (long r = lo; r < hi; ++r) {
            ArrayState s = packed_array(depth);
            run_schedule(s, sched, a, RngStream{seed, std::uint64_t(r)});
            for (std::size_t i = 0; i < K; ++i) {
                bool all = true;
                for (auto& p : point_sets[i]) all = all && contains(s.levels[p.n - 1], p.x);
                hits[i] += all;
            }
        }
        return hits;
    });
    std::vector<MeanEstimate> out;
    for (std::size_t i = 0; i < K; ++i) {
        long h = 0;
        for (auto& p : parts) h += p[i];
        out.push_back(binomial_estimate(h, replicas));
    }
    return out;
}

}  // namespace inhomog
