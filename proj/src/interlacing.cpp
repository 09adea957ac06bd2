#include "inhomog/interlacing.hpp"

#include <cmath>
#include <functional>
#include <map>

namespace inhomog {

bool is_weyl(const Config& x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0 || (i > 0 && x[i] <= x[i - 1])) return false;
    return true;
}

bool is_weak_weyl(const Config& x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0 || (i > 0 && x[i] < x[i - 1])) return false;
    return true;
}

bool interlaces(const Config& x, const Config& y) {
    if (y.size() != x.size() + 1) throw std::invalid_argument("interlaces: sizes must be N and N+1");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(y[i] <= x[i] && x[i] < y[i + 1])) return false;
    return true;
}

Config packed(int N) {
    Config x(N);
    for (int i = 0; i < N; ++i) x[i] = i;
    return x;
}

std::vector<Config> weyl_configs(int N, int bound) {
    std::vector<Config> out;
    Config cur(N);
    std::function<void(int, int)> rec = [&](int i, int lo) {
        if (i == N) {
            out.push_back(cur);
            return;
        }
        for (int v = lo; v <= bound - (N - i); ++v) {
            cur[i] = v;
            rec(i + 1, v + 1);
        }
    };
    rec(0, 0);
    return out;
}

namespace {

// cartesian product of closed intervals [lo_i, hi_i]
std::vector<Config> box(const std::vector<int>& lo, const std::vector<int>& hi) {
    std::vector<Config> out;
    const std::size_t n = lo.size();
    for (std::size_t i = 0; i < n; ++i)
        if (hi[i] < lo[i]) return out;
    Config cur = lo;
    while (true) {
        out.push_back(cur);
        std::size_t i = n;
        while (i > 0) {
            --i;
            if (cur[i] < hi[i]) {
                ++cur[i];
                break;
            }
            cur[i] = lo[i];
            if (i == 0) return out;
        }
        if (n == 0) return out;
    }
}

double det_of(const Matrix& M) {
    if (M.rows() == 0) return 1.0;
    return M.determinant();
}

}  // namespace

std::vector<Config> children(const Config& y) {
    const std::size_t N = y.size() - 1;
    std::vector<int> lo(N), hi(N);
    for (std::size_t i = 0; i < N; ++i) {
        lo[i] = y[i];
        hi[i] = y[i + 1] - 1;
    }
    return box(lo, hi);
}

std::vector<Config> parents(const Config& x, int bound) {
    const std::size_t N = x.size();
    std::vector<int> lo(N + 1), hi(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        lo[i] = i == 0 ? 0 : x[i - 1] + 1;
        hi[i] = i == N ? bound - 1 : x[i];
    }
    return box(lo, hi);
}

double lambda_kernel(const Config& y, const Config& x, const InhomogeneitySequence& a) {
    if (!interlaces(x, y)) return 0.0;
    double v = 1.0;
    for (int xi : x) v /= a[xi];
    return v;
}

double h_det(const Config& x, const InhomogeneitySequence& a) {
    const int N = int(x.size());
    // entry (i, j): e_i(1/a_0, ..., 1/a_{x_j - 1})
    Matrix M(N, N);
    for (int j = 0; j < N; ++j) {
        std::vector<double> e(N, 0.0);
        e[0] = 1.0;
        for (int k = 0; k < x[j]; ++k) {
            double inv = 1.0 / a[k];
            for (int m = N - 1; m >= 1; --m) e[m] += inv * e[m - 1];
        }
        for (int i = 0; i < N; ++i) M(i, j) = e[i];
    }
    return det_of(M);
}

double h_recursive(const Config& x, const InhomogeneitySequence& a) {
    std::map<Config, double> memo;
    std::function<double(const Config&)> rec = [&](const Config& y) -> double {
        if (y.size() <= 1) return 1.0;
        auto it = memo.find(y);
        if (it != memo.end()) return it->second;
        double s = 0.0;
        for (const Config& c : children(y)) {
            double w = 1.0;
            for (int ci : c) w /= a[ci];
            s += w * rec(c);
        }
        memo[y] = s;
        return s;
    };
    return rec(x);
}

double h_N(const Config& x, const InhomogeneitySequence& a, bool cross_check) {
    double d = h_det(x, a);
    if (cross_check) {
        double r = h_recursive(x, a);
        if (std::abs(d - r) > 1e-10 * std::abs(r))
            throw ConsistencyError("h_N determinant and recursive routes disagree");
    }
    return d;
}

double link_kernel(const Config& y, const Config& x, const InhomogeneitySequence& a) {
    double l = lambda_kernel(y, x, a);
    if (l == 0.0) return 0.0;
    return h_det(x, a) / h_det(y, a) * l;
}

double km_det(const Matrix& T, const Config& x, const Config& y) {
    const std::size_t N = x.size();
    if (y.size() != N) throw std::invalid_argument("km_det: size mismatch");
    Matrix M(N, N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) M(i, j) = T(x[i], y[j]);
    return det_of(M);
}

double km_det(const Symbol& f, const Config& x, const Config& y, const InhomogeneitySequence& a) {
    int top = 0;
    for (int v : x) top = std::max(top, v);
    for (int v : y) top = std::max(top, v);
    return km_det(t_matrix(f, std::size_t(top) + 1, a), x, y);
}

double markov_step(const Matrix& T, const Config& x, const Config& y, const InhomogeneitySequence& a) {
    double d = km_det(T, x, y);
    if (d == 0.0) return 0.0;
    return h_det(y, a) / h_det(x, a) * d;
}

double markov_step(const Symbol& f, const Config& x, const Config& y, const InhomogeneitySequence& a) {
    double d = km_det(f, x, y, a);
    if (d == 0.0) return 0.0;
    return h_det(y, a) / h_det(x, a) * d;
}

std::vector<std::pair<Config, double>> markov_row(const Matrix& T, const Config& x,
                                                  const InhomogeneitySequence& a) {
    std::vector<std::pair<Config, double>> out;
    const int N = int(x.size());
    const int L = int(T.cols());
    const double hx = h_det(x, a);
    Config cur(N);
    std::function<void(int, int)> rec = [&](int i, int lo) {
        if (i == N) {
            double d = km_det(T, x, cur);
            out.emplace_back(cur, d == 0.0 ? 0.0 : h_det(cur, a) / hx * d);
            return;
        }
        for (int v = std::max(lo, x[i]); v <= L - (N - i); ++v) {
            cur[i] = v;
            rec(i + 1, v + 1);
        }
    };
    rec(0, 0);
    return out;
}

namespace {

// prefix[r][k] = sum_{c<k} M(r, c), for range sums over columns
Matrix column_prefix(const Matrix& M) {
    Matrix P = Matrix::Zero(M.rows(), M.cols() + 1);
    for (Eigen::Index r = 0; r < M.rows(); ++r)
        for (Eigen::Index c = 0; c < M.cols(); ++c) P(r, c + 1) = P(r, c) + M(r, c);
    return P;
}

}  // namespace

double verify_intertwining(const Symbol& f, int N, const InhomogeneitySequence& a, int truncation) {
    if (f.is_identity()) return 0.0;
    const int Lt = truncation + int(tail_length(f, a, 1e-16)) + N + 2;
    Matrix T = t_matrix(f, Lt, a);
    Matrix colsum = column_prefix(T);
    // rowsum(k, y) = sum_{x' < k} T(x', y) / a_{x'}
    Matrix scaled = T;
    for (int r = 0; r < Lt; ++r) scaled.row(r) /= a[r];
    Matrix rowsum = column_prefix(scaled.transpose());

    double worst = 0.0;
    for (const Config& y : weyl_configs(N + 1, truncation)) {
        for (const Config& x : weyl_configs(N, truncation)) {
            // P^{(N+1)} Lambda: y' ranges over independent disjoint intervals
            Matrix A(N + 1, N + 1);
            for (int j = 0; j <= N; ++j) {
                int lo = j == 0 ? 0 : x[j - 1] + 1;
                int hi = j == N ? Lt - 1 : x[j];
                for (int i = 0; i <= N; ++i) A(i, j) = colsum(y[i], hi + 1) - colsum(y[i], lo);
            }
            double lam = 1.0;
            for (int xi : x) lam /= a[xi];
            double lhs = lam * det_of(A);
            // Lambda P^{(N)}: x'_i ranges over [y_i, y_{i+1})
            Matrix B(N, N);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) B(i, j) = rowsum(x[j], y[i + 1]) - rowsum(x[j], y[i]);
            double rhs = det_of(B);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

double gt_coherence_check(const Symbol& f, int N, const InhomogeneitySequence& a, int truncation) {
    const int Lt = truncation + int(tail_length(f, a, 1e-16)) + N + 2;
    Matrix T = t_matrix(f, Lt, a);
    Matrix colsum = column_prefix(T);
    const Config p_small = packed(N), p_big = packed(N + 1);
    const double h_small = h_det(p_small, a), h_big = h_det(p_big, a);
    double worst = 0.0;
    for (const Config& x : weyl_configs(N, truncation)) {
        double hx = h_det(x, a);
        double mu_n = hx / h_small * km_det(T, p_small, x);
        Matrix A(N + 1, N + 1);
        for (int j = 0; j <= N; ++j) {
            int lo = j == 0 ? 0 : x[j - 1] + 1;
            int hi = j == N ? Lt - 1 : x[j];
            for (int i = 0; i <= N; ++i) A(i, j) = colsum(p_big[i], hi + 1) - colsum(p_big[i], lo);
        }
        double lam = 1.0;
        for (int xi : x) lam /= a[xi];
        double lhs = hx * lam / h_big * det_of(A);
        worst = std::max(worst, std::abs(lhs - mu_n));
    }
    return worst;
}

}  // namespace inhomog
