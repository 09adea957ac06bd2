#include "inhomog/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

namespace inhomog {

namespace {

Symbol product_symbol(const EnsembleSpec& spec, int r0, int r1) {
    Symbol s = Symbol::identity();
    for (int r = r0; r < r1; ++r) s = s * spec.steps[r];
    return s;
}

BlockSymbol product_block(const EnsembleSpec& spec, int r0, int r1) {
    const int p = spec.p;
    BlockSymbol out;
    out.p = p;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) out.entries.push_back([i, j](cplx) { return cplx(i == j ? 1.0 : 0.0); });
    for (int r = r0; r < r1; ++r) {
        const BlockSymbol& f = spec.block_steps[r];
        BlockSymbol next;
        next.p = p;
        next.poles = out.poles;
        next.poles.insert(next.poles.end(), f.poles.begin(), f.poles.end());
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                next.entries.push_back([prev = out.entries, step = f.entries, i, j, p](cplx z) {
                    cplx s = 0.0;
                    for (int l = 0; l < p; ++l) s += prev[i * p + l](z) * step[l * p + j](z);
                    return s;
                });
        out = std::move(next);
    }
    return out;
}

Matrix block_matrix(const EnsembleSpec& spec, const BlockSymbol& f, int size) {
    const int p = spec.p;
    Matrix T = Matrix::Zero(size, size);
    for (int x = 0; x < size; ++x)
        for (int y = (x / p) * p; y < size; ++y)
            T(x, y) = t_numeric_block(f, std::size_t(x), std::size_t(y), spec.a, spec.block_contour).real();
    return T;
}

template <class Scalar, class Entry>
Scalar leibniz_det(int n, Entry&& entry) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Scalar total = 0;
    do {
        int inversions = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
        Scalar term = 1;
        for (int i = 0; i < n && term != 0; ++i) term *= entry(i, perm[i]);
        if (inversions % 2) total -= term;
        else total += term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

using RMatrix = std::vector<std::vector<Rational>>;

RMatrix rational_identity(int n) {
    RMatrix I(n, std::vector<Rational>(n, Rational(0)));
    for (int i = 0; i < n; ++i) I[i][i] = 1;
    return I;
}

RMatrix rational_product(const RMatrix& A, const RMatrix& B) {
    const int n = int(A.size());
    RMatrix C(n, std::vector<Rational>(n, Rational(0)));
    for (int i = 0; i < n; ++i)
        for (int l = i; l < n; ++l) {
            if (A[i][l] == 0) continue;
            for (int j = l; j < n; ++j)
                if (B[l][j] != 0) C[i][j] += A[i][l] * B[l][j];
        }
    return C;
}

// Closed-form Bernoulli and geometric factors, entry by entry, in rationals.
RMatrix rational_step(const Symbol& f, int size, const InhomogeneitySequence& a) {
    RMatrix T = rational_identity(size);
    for (double alpha : f.alphas) {
        RMatrix B(size, std::vector<Rational>(size, Rational(0)));
        const Rational al(alpha);
        for (int x = 0; x < size; ++x) {
            Rational ax(a[x]);
            B[x][x] = 1 - al * ax;
            if (x + 1 < size) B[x][x + 1] = al * ax;
        }
        T = rational_product(T, B);
    }
    for (double beta : f.betas) {
        RMatrix B(size, std::vector<Rational>(size, Rational(0)));
        const Rational be(beta);
        for (int x = 0; x < size; ++x) {
            Rational run = 1;
            for (int y = x; y < size; ++y) {
                Rational by = be * Rational(a[y]);
                B[x][y] = run / (1 + by);
                run *= by / (1 + by);
            }
        }
        T = rational_product(T, B);
    }
    return T;
}

template <class Scalar, class Mat>
void enumerate_paths(const EnsembleSpec& spec, const std::vector<Mat>& steps, PathLaw& law,
                     std::vector<Scalar>& weights) {
    const int n = spec.p * spec.N;
    const int L = spec.L();
    const Config start = packed(n);
    Config end(n);
    for (int i = 0; i < n; ++i) end[i] = spec.p * spec.M + i;
    const auto configs = weyl_configs(n, spec.extent());

    auto det = [&](const Mat& T, const Config& x, const Config& y) {
        return leibniz_det<Scalar>(n, [&](int i, int j) -> Scalar { return T[x[i]][y[j]]; });
    };
    std::vector<Config> levels;
    std::function<void(const Config&, Scalar)> rec = [&](const Config& prev, Scalar w) {
        const int r = int(levels.size()) + 1;
        if (r == L) {
            Scalar last = w * det(steps[L - 1], prev, end);
            if (last != 0) {
                law.tuples.push_back(levels);
                weights.push_back(last);
            }
            return;
        }
        for (const Config& x : configs) {
            Scalar step = det(steps[r - 1], prev, x);
            if (step == 0) continue;
            levels.push_back(x);
            rec(x, w * step);
            levels.pop_back();
        }
    };
    rec(start, Scalar(1));
}

double binomial(int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

bool contains(const Config& c, int x) { return std::binary_search(c.begin(), c.end(), x); }

}  // namespace

void EnsembleSpec::validate() const {
    if (N < 1 || M < 0 || p < 1) throw DomainError("ensemble needs N >= 1, M >= 0, p >= 1");
    if (L() < 1) throw DomainError("ensemble needs at least one step");
    if (p == 1 && !block_steps.empty()) throw DomainError("block steps given with p = 1");
    if (p > 1 && !steps.empty()) throw DomainError("scalar steps given with p > 1");
    for (const auto& f : block_steps)
        if (f.p != p || int(f.entries.size()) != p * p) throw DomainError("block step of the wrong size");
    if (int(a.size()) < extent() + 1) throw DomainError("inhomogeneity prefix shorter than the ensemble");
    for (const auto& f : steps) f.validate(a, false);
}

Matrix step_matrix(const EnsembleSpec& spec, int r, int size) {
    if (spec.p == 1) return t_matrix(spec.steps.at(r), std::size_t(size), spec.a);
    return block_matrix(spec, spec.block_steps.at(r), size);
}

Matrix step_product(const EnsembleSpec& spec, int r0, int r1, int size) {
    Matrix P = Matrix::Identity(size, size);
    for (int r = r0; r < r1; ++r) P = P * step_matrix(spec, r, size);
    return P;
}

Matrix gram(const EnsembleSpec& spec) {
    spec.validate();
    const int n = spec.p * spec.N;
    return step_product(spec, 0, spec.L(), spec.extent()).block(0, spec.p * spec.M, n, n);
}

Matrix gram_contour(const EnsembleSpec& spec) {
    spec.validate();
    const int n = spec.p * spec.N, shift = spec.p * spec.M;
    Matrix G(n, n);
    if (spec.p == 1) {
        Symbol f = product_symbol(spec, 0, spec.L());
        ContourSpec c = default_contour(spec.a, f);
        for (int k = 0; k < n; ++k)
            for (int m = 0; m < n; ++m)
                G(k, m) = t_numeric(f, std::size_t(k), std::size_t(shift + m), spec.a, c).real();
    } else {
        BlockSymbol f = product_block(spec, 0, spec.L());
        for (int k = 0; k < n; ++k)
            for (int m = 0; m < n; ++m)
                G(k, m) = t_numeric_block(f, std::size_t(k), std::size_t(shift + m), spec.a, spec.block_contour).real();
    }
    return G;
}

void check_gram(const Matrix& G) {
    double scale = 1.0;
    for (int i = 0; i < G.rows(); ++i) scale *= G.row(i).norm();
    const double d = G.determinant();
    if (!(std::abs(d) >= 1e-12 * scale)) throw NearSingularError("Gram matrix is numerically singular", d);
}

FixedEndpointKernel::FixedEndpointKernel(const EnsembleSpec& spec)
    : L_(spec.L()), M_(spec.p * spec.M), n_(spec.p * spec.N), size_(spec.extent()) {
    spec.validate();
    std::vector<Matrix> steps;
    for (int r = 0; r < L_; ++r) steps.push_back(step_matrix(spec, r, size_));
    const Matrix I = Matrix::Identity(size_, size_);
    from_start_.assign(L_ + 1, I);
    for (int r = 1; r <= L_; ++r) from_start_[r] = from_start_[r - 1] * steps[r - 1];
    to_end_.assign(L_ + 1, I);
    for (int r = L_ - 1; r >= 0; --r) to_end_[r] = steps[r] * to_end_[r + 1];
    between_.assign(L_ + 1, std::vector<Matrix>(L_ + 1, I));
    for (int r0 = 0; r0 <= L_; ++r0)
        for (int r1 = r0 + 1; r1 <= L_; ++r1) between_[r0][r1] = between_[r0][r1 - 1] * steps[r1 - 1];
    G_ = from_start_[L_].block(0, M_, n_, n_);
    check_gram(G_);
    Ginv_ = G_.inverse();
}

double FixedEndpointKernel::operator()(SpacetimePoint u, SpacetimePoint v) const {
    if (u.r < 1 || u.r >= L_ || v.r < 1 || v.r >= L_) throw DomainError("kernel times must lie in [1, L-1]");
    if (u.x < 0 || u.x >= size_ || v.x < 0 || v.x >= size_) throw std::out_of_range("kernel site outside the ensemble");
    double s = 0.0;
    for (int j = 0; j < n_; ++j) {
        double inner = 0.0;
        for (int i = 0; i < n_; ++i) inner += Ginv_(j, i) * from_start_[u.r](i, u.x);
        s += to_end_[v.r](v.x, M_ + j) * inner;
    }
    if (u.r > v.r) s -= between_[v.r][u.r](v.x, u.x);
    return s;
}

Matrix FixedEndpointKernel::matrix(const std::vector<SpacetimePoint>& pts) const {
    const int k = int(pts.size());
    Matrix K(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) K(i, j) = (*this)(pts[i], pts[j]);
    return K;
}

double FixedEndpointKernel::correlation(const std::vector<SpacetimePoint>& pts) const {
    if (pts.empty()) return 1.0;
    return matrix(pts).determinant();
}

double kernel_fixed_endpoints(const EnsembleSpec& spec, SpacetimePoint u, SpacetimePoint v) {
    return FixedEndpointKernel(spec)(u, v);
}

double kernel_reproducing(const EnsembleSpec& spec, SpacetimePoint u, SpacetimePoint v) {
    if (spec.p != 1) throw DomainError("the reproducing-kernel form is scalar only");
    const int L = spec.L(), N = spec.N, M = spec.M;
    if (u.r < 1 || u.r >= L || v.r < 1 || v.r >= L) throw DomainError("kernel times must lie in [1, L-1]");
    Matrix G = gram_contour(spec);
    check_gram(G);
    Matrix Ginv = G.inverse();
    auto entry = [&](int r0, int r1, int x, int y) {
        Symbol f = product_symbol(spec, r0, r1);
        return t_numeric(f, std::size_t(x), std::size_t(y), spec.a, default_contour(spec.a, f)).real();
    };
    std::vector<double> right(N), left(N);
    for (int i = 0; i < N; ++i) right[i] = entry(0, u.r, i, u.x);
    for (int j = 0; j < N; ++j) left[j] = entry(v.r, L, v.x, M + j);
    double s = 0.0;
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) s += left[j] * Ginv(j, i) * right[i];
    if (u.r > v.r) s -= entry(v.r, u.r, v.x, u.x);
    return s;
}

double PathLaw::one_point(SpacetimePoint u) const { return correlation({u}); }

double PathLaw::correlation(const std::vector<SpacetimePoint>& pts) const {
    double s = 0.0;
    for (std::size_t t = 0; t < tuples.size(); ++t) {
        bool all = true;
        for (const auto& q : pts) {
            if (q.r < 1 || q.r > int(tuples[t].size())) throw DomainError("time outside [1, L-1]");
            all = all && contains(tuples[t][q.r - 1], q.x);
        }
        if (all) s += prob[t];
    }
    return s;
}

Rational PathLaw::exact_mass() const {
    Rational s = 0;
    for (const auto& q : exact_prob) s += q;
    return s;
}

PathLaw brute_force_marginals(const EnsembleSpec& spec, long budget) {
    spec.validate();
    const int n = spec.p * spec.N, L = spec.L(), size = spec.extent();
    const double candidates = std::pow(binomial(size, n), L - 1);
    if (candidates > double(budget))
        throw BudgetError("path enumeration needs " + std::to_string(candidates) + " tuples, budget " +
                          std::to_string(budget));
    PathLaw law;
    law.N = n;
    law.candidates = long(candidates);
    bool exact = spec.p == 1;
    for (const auto& f : spec.steps) exact = exact && f.t == 0.0;
    law.exact = exact;

    if (exact) {
        std::vector<RMatrix> steps;
        for (const auto& f : spec.steps) steps.push_back(rational_step(f, size, spec.a));
        std::vector<Rational> w;
        enumerate_paths<Rational>(spec, steps, law, w);
        Rational Z = 0;
        for (const auto& q : w) Z += q;
        if (Z <= 0) throw DomainError("path weights do not sum to a positive total");
        for (const auto& q : w) {
            law.exact_prob.push_back(q / Z);
            law.prob.push_back(law.exact_prob.back().convert_to<double>());
        }
    } else {
        std::vector<std::vector<std::vector<double>>> steps;
        for (int r = 0; r < L; ++r) {
            Matrix T = step_matrix(spec, r, size);
            std::vector<std::vector<double>> rows(size, std::vector<double>(size));
            for (int x = 0; x < size; ++x)
                for (int y = 0; y < size; ++y) rows[x][y] = T(x, y);
            steps.push_back(std::move(rows));
        }
        std::vector<double> w;
        enumerate_paths<double>(spec, steps, law, w);
        const double Z = std::accumulate(w.begin(), w.end(), 0.0);
        if (!(Z > 0.0)) throw DomainError("path weights do not sum to a positive total");
        for (double q : w) law.prob.push_back(q / Z);
    }
    return law;
}

cplx Factorization::s_minus(cplx z) const {
    cplx s = 1.0;
    for (double al : big_alphas) s *= z + (1.0 - al) / al;
    return s;
}

cplx Factorization::s_plus(cplx z) const {
    cplx s = symbol_eval(rest, 1.0 - z);
    for (double al : big_alphas) s *= al;
    return s;
}

Factorization factorize(const EnsembleSpec& spec, double c) {
    if (spec.p != 1) throw DomainError("the limiting kernel is implemented for p = 1");
    Factorization fac;
    const double tight = std::max(spec.a.sup() - 1.0, 1.0 - spec.a.inf());
    fac.c = c < 0.0 ? std::max(tight, 0.0) : c;
    if (fac.c >= 1.0 / 3.0) throw DomainError("a-bounds window failed: need |a - 1| <= c with c < 1/3");
    if (tight > fac.c + 1e-15) throw DomainError("a-bounds window failed: a leaves [1 - c, 1 + c]");
    const double c0 = fac.c;
    const double big_lo = 1.0 / (2.0 - 2.0 * c0), big_hi = 1.0 / (1.0 + c0);
    const double small_hi = (1.0 - 2.0 * c0) / (2.0 - 2.0 * c0);
    const double beta_hi = c0 > 0.0 ? 1.0 / (2.0 * c0) - 1.0 : INFINITY;

    Symbol all = product_symbol(spec, 0, spec.L());
    for (double al : all.alphas) {
        if (al > big_lo && al < big_hi) {
            fac.big_alphas.push_back(al);
        } else {
            if (!(al < small_hi))
                throw DomainError("alpha window failed: alpha = " + std::to_string(al) +
                                  " is neither below " + std::to_string(small_hi) + " nor in (" +
                                  std::to_string(big_lo) + ", " + std::to_string(big_hi) + ")");
            fac.rest.alphas.push_back(al);
        }
    }
    if (int(fac.big_alphas.size()) != spec.M)
        throw DomainError("alpha window failed: " + std::to_string(fac.big_alphas.size()) +
                          " alphas in (" + std::to_string(big_lo) + ", " + std::to_string(big_hi) +
                          "), need exactly M = " + std::to_string(spec.M));
    for (double be : all.betas)
        if (!(be < beta_hi))
            throw DomainError("beta window failed: beta = " + std::to_string(be) + " not below " +
                              std::to_string(beta_hi));
    fac.rest.betas = all.betas;
    fac.rest.t = all.t;
    return fac;
}

LimitKernel::LimitKernel(const EnsembleSpec& spec, LimitOptions opt)
    : spec_(spec), opt_(opt), fac_(factorize(spec, opt.c)) {
    const double c0 = fac_.c;
    if (!(opt_.inner > c0 && opt_.inner < opt_.outer))
        throw DomainError("contours need c < inner radius < outer radius");
    // zeros of S_+ sit at 1 - 1/alpha, poles of the geometric factors at 1 + 1/beta
    for (double al : fac_.rest.alphas)
        if (al > 0.0 && 1.0 / al - 1.0 <= opt_.inner)
            throw DomainError("inner contour reaches a zero of S_+");
    for (double al : fac_.big_alphas)
        if ((1.0 - al) / al >= opt_.outer) throw DomainError("outer contour misses a zero of S_-");
    for (double be : fac_.rest.betas)
        if (be > 0.0 && 1.0 + 1.0 / be <= opt_.outer) throw DomainError("outer contour reaches a pole 1 + 1/beta");
}

double LimitKernel::operator()(SpacetimePoint u, SpacetimePoint v) const {
    const int L = spec_.L();
    if (u.r < 1 || u.r >= L || v.r < 1 || v.r >= L) throw DomainError("kernel times must lie in [1, L-1]");
    if (u.x < 0 || v.x < 0) throw std::out_of_range("negative site");
    const Symbol head = product_symbol(spec_, 0, u.r);
    const Symbol tail = product_symbol(spec_, v.r, L);
    const int P = opt_.points, K = opt_.terms;
    // with |z| < |w|, 1/(z - w) = -sum z^n w^{-n-1}, so the double integral is a sum of
    // products of single coefficients
    std::vector<cplx> A(K, 0.0), B(K, 0.0);
    for (int j = 0; j < P; ++j) {
        const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * (j + 0.5) / P);
        const cplx z = opt_.inner * e, w = opt_.outer * e;
        const cplx Az = symbol_eval(head, 1.0 - z) / fac_.s_plus(z) / char_poly(std::size_t(u.x) + 1, 1.0 - z, spec_.a);
        const cplx Bw = symbol_eval(tail, 1.0 - w) / fac_.s_minus(w) * char_poly(std::size_t(v.x), 1.0 - w, spec_.a);
        cplx zn = z, wn = 1.0;
        for (int n = 0; n < K; ++n) {
            A[n] += Az * zn;
            B[n] += Bw / wn;
            zn *= z;
            wn *= w;
        }
    }
    cplx s = 0.0;
    for (int n = 0; n < K; ++n) s += A[n] * B[n];
    double value = (s / (double(P) * double(P))).real() / spec_.a[u.x];
    if (u.r > v.r) {
        const int size = std::max(u.x, v.x) + 1;
        value -= t_matrix(product_symbol(spec_, v.r, u.r), std::size_t(size), spec_.a)(v.x, u.x);
    }
    return value;
}

double kernel_infty(const EnsembleSpec& spec, SpacetimePoint u, SpacetimePoint v, LimitOptions opt) {
    return LimitKernel(spec, opt)(u, v);
}

bool LadderReport::strictly_decreasing() const {
    for (std::size_t i = 1; i < deviation.size(); ++i)
        if (!(deviation[i] < deviation[i - 1])) return false;
    return !deviation.empty();
}

LadderReport ladder_deviation(const EnsembleSpec& spec, const std::vector<int>& Ns, int width, LimitOptions opt) {
    LimitKernel limit(spec, opt);
    std::vector<SpacetimePoint> window;
    for (int r = 1; r < spec.L(); ++r)
        for (int x = 0; x < width; ++x) window.push_back({r, x});
    Matrix K_inf(window.size(), window.size());
    for (std::size_t i = 0; i < window.size(); ++i)
        for (std::size_t j = 0; j < window.size(); ++j) K_inf(i, j) = limit(window[i], window[j]);
    LadderReport rep;
    for (int N : Ns) {
        EnsembleSpec s = spec;
        s.N = N;
        if (width > s.extent()) throw DomainError("window wider than the smallest ensemble");
        FixedEndpointKernel K(s);
        rep.Ns.push_back(N);
        rep.deviation.push_back((K.matrix(window) - K_inf).cwiseAbs().maxCoeff());
    }
    return rep;
}

}  // namespace inhomog
