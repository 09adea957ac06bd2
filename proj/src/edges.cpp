#include "inhomog/edges.hpp"

#include <algorithm>
#include <cstdlib>

#include "inhomog/parallel.hpp"

namespace inhomog {

namespace {

Matrix psi_base(EdgeSide side, bool inverse, std::size_t L, const InhomogeneitySequence& a) {
    Matrix P = Matrix::Zero(L, L);
    for (std::size_t x = 0; x < L; ++x) {
        if (inverse) {
            double s = side == EdgeSide::right ? 1.0 : -1.0;
            P(x, x) = s * a[x];
            if (x + 1 < L) P(x, x + 1) = -s * a[x];
        } else if (side == EdgeSide::right) {
            for (std::size_t y = x; y < L; ++y) P(x, y) = 1.0 / a[y];
        } else {
            for (std::size_t y = 0; y < x; ++y) P(x, y) = 1.0 / a[y];
        }
    }
    return P;
}

int max_entry(const Config& x) { return x.empty() ? 0 : *std::max_element(x.begin(), x.end()); }

void check_state(EdgeSide side, const Config& x, const char* what) {
    if (x.empty()) throw DomainError(std::string(what) + " must be non-empty");
    if (x.front() < 0) throw DomainError(std::string(what) + " has a negative coordinate");
    bool ok = side == EdgeSide::right ? is_weyl(x) : is_weak_weyl(x);
    if (!ok) throw DomainError(std::string(what) + " is outside the edge state space");
}

// Powers applied to the right-edge rows: -(N-i) and N-j (i, j from 1); left: -(i-1) and j-1.
int row_power(EdgeSide side, int N, int i) { return side == EdgeSide::right ? -(N - 1 - i) : -i; }
int col_power(EdgeSide side, int N, int j) { return side == EdgeSide::right ? N - 1 - j : j; }

}  // namespace

Matrix psi_matrix(EdgeSide side, int n, std::size_t L, const InhomogeneitySequence& a) {
    if (std::abs(n) > 64) throw DomainError("psi power out of range");
    Matrix out = Matrix::Identity(L, L);
    if (n == 0) return out;
    Matrix base = psi_base(side, n < 0, L, a);
    for (int k = 0; k < std::abs(n); ++k) out = out * base;
    return out;
}

double psi_power(EdgeSide side, int n, int x, int y, const InhomogeneitySequence& a) {
    if (x < 0 || y < 0) throw DomainError("psi arguments must be non-negative");
    return psi_matrix(side, n, std::size_t(std::max(x, y) + 1), a)(x, y);
}

EdgeKernel::EdgeKernel(EdgeSide side, const Symbol& f, const Config& x, const InhomogeneitySequence& a,
                       int bound)
    : side_(side), N_(int(x.size())), bound_(bound) {
    check_state(side, x, "edge state");
    if (bound <= 0) throw DomainError("bound must be positive");
    std::size_t L = std::size_t(std::max(bound, max_entry(x) + N_)) + 1;
    // on the left the column powers sum over sites above the target, so T needs its tail
    if (side == EdgeSide::left) L += tail_length(f, a, 1e-18) + 4 * std::size_t(N_);
    Matrix T = t_matrix(f, L, a);
    rows_.assign(N_, std::vector<std::vector<double>>(N_));
    std::vector<Matrix> cols(N_);
    for (int j = 0; j < N_; ++j) cols[j] = psi_matrix(side, col_power(side, N_, j), L, a);
    for (int i = 0; i < N_; ++i) {
        Eigen::RowVectorXd r = psi_matrix(side, row_power(side, N_, i), L, a).row(x[i]) * T;
        for (int j = 0; j < N_; ++j) {
            Eigen::RowVectorXd v = r * cols[j];
            rows_[i][j].assign(v.data(), v.data() + bound);
        }
    }
}

double EdgeKernel::operator()(const Config& y) const {
    if (int(y.size()) != N_) throw DomainError("target has the wrong length");
    for (int v : y)
        if (v < 0 || v >= bound_) throw DomainError("target outside the kernel bound");
    bool ok = side_ == EdgeSide::right ? is_weyl(y) : is_weak_weyl(y);
    if (!ok) return 0.0;
    Matrix M(N_, N_);
    for (int i = 0; i < N_; ++i)
        for (int j = 0; j < N_; ++j) M(i, j) = rows_[i][j][y[j]];
    return M.determinant();
}

double edge_kernel_right(const Symbol& f, const Config& x, const Config& y, const InhomogeneitySequence& a) {
    return EdgeKernel(EdgeSide::right, f, x, a, max_entry(y) + 1)(y);
}

double edge_kernel_left(const Symbol& f, const Config& x, const Config& y, const InhomogeneitySequence& a) {
    return EdgeKernel(EdgeSide::left, f, x, a, max_entry(y) + 1)(y);
}

std::map<Config, double> edge_kernel_row(EdgeSide side, const Symbol& f, const Config& x,
                                         const InhomogeneitySequence& a, int bound) {
    EdgeKernel K(side, f, x, a, bound);
    const int N = int(x.size());
    std::map<Config, double> out;
    // weakly increasing tuples y_i in [0, bound); strict ones are y_i - i for the weak ones
    Config w(N, 0);
    while (true) {
        Config y = w;
        if (side == EdgeSide::right)
            for (int i = 0; i < N; ++i) y[i] += i;
        if (y.back() < bound) out[y] = K(y);
        int k = N - 1;
        int lim = side == EdgeSide::right ? bound - N : bound - 1;
        while (k >= 0 && w[k] >= lim) --k;
        if (k < 0) break;
        ++w[k];
        for (int m = k + 1; m < N; ++m) w[m] = w[k];
    }
    return out;
}

double edge_measure_weight(EdgeSide side, const Symbol& f, const Config& x, const std::vector<Config>& z,
                           const InhomogeneitySequence& a) {
    check_state(side, x, "edge state");
    const int N = int(x.size());
    if (int(z.size()) != N) throw DomainError("array depth must match the edge state");
    for (int n = 0; n < N; ++n)
        if (int(z[n].size()) != n + 1) throw DomainError("array level has the wrong length");
    for (auto& lv : z)
        for (int v : lv)
            if (v < 0) return 0.0;
    double prod = 1.0;
    for (int n = 0; n + 1 < N && prod != 0.0; ++n) prod *= lambda_kernel(z[n + 1], z[n], a);
    if (prod == 0.0) return 0.0;
    const Config& top = z[N - 1];
    std::size_t L = std::size_t(std::max(max_entry(x) + N, max_entry(top))) + 1;
    Matrix T = t_matrix(f, L, a);
    Matrix M(N, N);
    for (int i = 0; i < N; ++i) {
        Eigen::RowVectorXd r = psi_matrix(side, row_power(side, N, i), L, a).row(x[i]) * T;
        for (int j = 0; j < N; ++j) M(i, j) = r(top[j]);
    }
    return M.determinant() * prod;
}

Config edge_state(EdgeSide side, const ArrayState& s) {
    if (side == EdgeSide::right) return right_edge(s);
    Config e = left_edge(s);
    std::reverse(e.begin(), e.end());
    return e;
}

ArrayState array_with_edge(EdgeSide side, const Config& edge) {
    check_state(side, edge, "edge state");
    const int N = int(edge.size());
    ArrayState s;
    s.levels.resize(N);
    const int top = edge.back();
    for (int n = 1; n <= N; ++n) {
        Config& lv = s.levels[n - 1];
        lv.resize(n);
        if (side == EdgeSide::right) {
            for (int i = 0; i + 1 < n; ++i) lv[i] = i;
            lv[n - 1] = edge[n - 1];
        } else {
            lv[0] = edge[N - n];
            for (int i = 1; i < n; ++i) lv[i] = top + i;
        }
    }
    return s;
}

std::map<EdgePath, long> edge_empirical_paths(EdgeSide side, const ArrayState& start, const Schedule& sched,
                                              const InhomogeneitySequence& a, long replicas, std::uint64_t seed) {
    if (!valid_array(start)) throw DomainError("start is not a valid array");
    auto parts = parallel_chunks<std::map<EdgePath, long>>(replicas, [&](long lo, long hi) {
        std::map<EdgePath, long> counts;
        for (long r = lo; r < hi; ++r) {
            ArrayState s = start;
            RngStream rng{seed, std::uint64_t(r)};
            EdgePath path;
            for (std::size_t k = 0; k < sched.size(); ++k) {
                run_step(s, sched[k], a, rng, k);
                path.push_back(edge_state(side, s));
            }
            ++counts[path];
        }
        return counts;
    });
    std::map<EdgePath, long> out;
    for (auto& p : parts)
        for (auto& [k, v] : p) out[k] += v;
    return out;
}

std::map<Config, long> edge_empirical_law(EdgeSide side, const ArrayState& start, const Schedule& sched,
                                          const InhomogeneitySequence& a, long replicas, std::uint64_t seed) {
    if (sched.empty()) return {{edge_state(side, start), replicas}};
    std::map<Config, long> out;
    for (auto& [path, n] : edge_empirical_paths(side, start, sched, a, replicas, seed)) out[path.back()] += n;
    return out;
}

std::map<EdgePath, double> edge_path_probs(EdgeSide side, const Config& x, const Schedule& sched,
                                           const InhomogeneitySequence& a, int bound) {
    std::map<EdgePath, double> cur{{EdgePath{}, 1.0}};
    std::map<Config, std::map<Config, double>> rows;
    for (const Step& st : sched) {
        Symbol f = step_symbol(st);
        rows.clear();
        std::map<EdgePath, double> next;
        for (auto& [path, p] : cur) {
            const Config& from = path.empty() ? x : path.back();
            auto it = rows.find(from);
            if (it == rows.end()) it = rows.emplace(from, edge_kernel_row(side, f, from, a, bound)).first;
            for (auto& [y, q] : it->second) {
                if (q == 0.0) continue;
                EdgePath np = path;
                np.push_back(y);
                next[np] = p * q;
            }
        }
        cur.swap(next);
    }
    return cur;
}

}  // namespace inhomog
