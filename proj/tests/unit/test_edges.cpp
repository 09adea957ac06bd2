#include "doctest.h"

#include "inhomog/edges.hpp"

using namespace inhomog;

namespace {

InhomogeneitySequence field() { return InhomogeneitySequence::periodic({0.8, 1.25, 1.0}, 400); }

double row_total(const std::map<Config, double>& row) {
    double s = 0.0;
    for (auto& [y, p] : row) s += p;
    return s;
}

}  // namespace

TEST_CASE("psi powers") {
    auto a = field();
    for (int x = 0; x < 6; ++x)
        for (int y = 0; y < 6; ++y) {
            CHECK(psi_power(EdgeSide::right, 1, x, y, a) == (y >= x ? 1.0 / a[y] : 0.0));
            CHECK(psi_power(EdgeSide::right, 0, x, y, a) == (x == y ? 1.0 : 0.0));
            double direct = 0.0;
            for (int m = y + 1; m < x; ++m) direct += 1.0 / (a[m] * a[y]);
            CHECK(psi_power(EdgeSide::left, 2, x, y, a) == doctest::Approx(direct).epsilon(1e-14));
        }

    const std::size_t L = 30;
    const int rows = int(L) - 4;
    auto rel_gap = [&](const Matrix& lhs, const Matrix& rhs) {
        return (lhs - rhs).topRows(rows).cwiseAbs().maxCoeff() / std::max(1.0, rhs.topRows(rows).cwiseAbs().maxCoeff());
    };
    for (int m : {-3, -1, 1, 2, 3})
        for (int n : {-3, -1, 1, 2}) {
            auto P = [&](EdgeSide s, int k) { return psi_matrix(s, k, L, a); };
            CHECK(rel_gap(P(EdgeSide::right, m) * P(EdgeSide::right, n), P(EdgeSide::right, m + n)) < 1e-12);
            // psi_l has a zero row at 0, so only negative-then-any compositions hold there
            if (m < 0 || n > 0)
                CHECK(rel_gap(P(EdgeSide::left, m) * P(EdgeSide::left, n), P(EdgeSide::left, m + n)) < 1e-12);
        }
    for (EdgeSide side : {EdgeSide::right, EdgeSide::left}) {
        Matrix id = psi_matrix(side, -1, L, a) * psi_matrix(side, 1, L, a);
        CHECK((id - Matrix::Identity(L, L)).topRows(L - 1).cwiseAbs().maxCoeff() < 1e-12);
    }
    Matrix id_r = psi_matrix(EdgeSide::right, 1, L, a) * psi_matrix(EdgeSide::right, -1, L, a);
    CHECK((id_r - Matrix::Identity(L, L)).cwiseAbs().maxCoeff() < 1e-12);
    // psi_l psi_l^{-1} = identity minus 1_{x >= 1} at column 0
    Matrix defect = Matrix::Identity(L, L);
    for (std::size_t x = 1; x < L; ++x) defect(x, 0) = -1.0;
    defect(0, 0) = 0.0;
    Matrix id_l = psi_matrix(EdgeSide::left, 1, L, a) * psi_matrix(EdgeSide::left, -1, L, a);
    CHECK((id_l - defect).cwiseAbs().maxCoeff() < 1e-12);
    // with a rational field the right-side identity is exact
    auto b = InhomogeneitySequence::periodic({0.5, 2.0, 1.0}, 60);
    Matrix id = psi_matrix(EdgeSide::right, -1, L, b) * psi_matrix(EdgeSide::right, 1, L, b);
    CHECK(id == Matrix::Identity(L, L));
    CHECK_THROWS_AS(psi_matrix(EdgeSide::left, 65, 4, a), DomainError);
}

TEST_CASE("single-particle edges are the one-particle kernel") {
    auto a = field();
    Symbol f = Symbol::bernoulli(0.3) * Symbol::geometric(0.25);
    Matrix T = t_matrix(f, 40, a);
    for (int x : {0, 2, 5})
        for (int y = 0; y < 30; ++y) {
            CHECK(edge_kernel_right(f, {x}, {y}, a) == doctest::Approx(T(x, y)).epsilon(1e-12));
            CHECK(edge_kernel_left(f, {x}, {y}, a) == doctest::Approx(T(x, y)).epsilon(1e-12));
            CHECK(edge_measure_weight(EdgeSide::right, f, {x}, {{y}}, a) ==
                  doctest::Approx(T(x, y)).epsilon(1e-12));
        }
}

TEST_CASE("edge kernels are stochastic") {
    auto a = field();
    // Bernoulli steps have bounded reach, so these sums are exhaustive
    for (double alpha : {0.2, 0.5, 0.7}) {
        Symbol f = Symbol::bernoulli(alpha);
        for (Config x : {Config{0}, Config{0, 1}, Config{2, 3}, Config{0, 3}, Config{0, 1, 2}, Config{1, 3, 4}}) {
            auto row = edge_kernel_row(EdgeSide::right, f, x, a, x.back() + 2 * int(x.size()) + 2);
            CHECK(std::abs(row_total(row) - 1.0) < 1e-9);
            for (auto& [y, p] : row) CHECK(p >= -1e-12);
        }
        for (Config x : {Config{0}, Config{0, 0}, Config{1, 3}, Config{0, 0, 0}, Config{1, 1, 4}}) {
            auto row = edge_kernel_row(EdgeSide::left, f, x, a, x.back() + 2 * int(x.size()) + 2);
            CHECK(std::abs(row_total(row) - 1.0) < 1e-9);
            for (auto& [y, p] : row) CHECK(p >= -1e-12);
        }
    }
    // one Bernoulli step of the left edge from (0, 0)
    auto row = edge_kernel_row(EdgeSide::left, Symbol::bernoulli(0.4), {0, 0}, a, 6);
    double mass = 0.0;
    for (auto& [y, p] : row) {
        bool allowed = y == Config{0, 0} || y == Config{0, 1} || y == Config{1, 1};
        if (allowed) mass += p;
        else CHECK(std::abs(p) < 1e-14);
    }
    CHECK(std::abs(mass - 1.0) < 1e-9);

    // unbounded jumps: the box sum misses only a tiny tail
    for (Symbol f : {Symbol::geometric(0.3), Symbol::purebirth(0.6)}) {
        CHECK(std::abs(row_total(edge_kernel_row(EdgeSide::right, f, {1, 2, 4}, a, 45)) - 1.0) < 1e-9);
        CHECK(std::abs(row_total(edge_kernel_row(EdgeSide::left, f, {0, 2, 2}, a, 45)) - 1.0) < 1e-9);
    }
}

TEST_CASE("edge kernel semigroup") {
    auto a = field();
    Symbol f = Symbol::bernoulli(0.35) * Symbol::geometric(0.2), g = Symbol::purebirth(0.4);
    const int bound = 14;
    for (EdgeSide side : {EdgeSide::right, EdgeSide::left}) {
        Config x = side == EdgeSide::right ? Config{0, 2} : Config{1, 1};
        auto rf = edge_kernel_row(side, f, x, a, bound);
        auto rfg = edge_kernel_row(side, f * g, x, a, bound);
        std::map<Config, std::map<Config, double>> rg;
        for (auto& [y, p] : rf) rg[y] = edge_kernel_row(side, g, y, a, bound);
        double worst = 0.0;
        for (auto& [z, pz] : rfg) {
            if (z.back() > 8) continue;
            double s = 0.0;
            for (auto& [y, p] : rf) s += p * rg[y][z];
            worst = std::max(worst, std::abs(s - pz));
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("edge measure weights") {
    auto a = field();
    Symbol f = Symbol::bernoulli(0.4);

    SUBCASE("marginal of the right-edge measure") {
        for (Config x : {Config{0, 1}, Config{1, 3}})
            for (int z1 = 0; z1 < 8; ++z1)
                for (int z2 = z1 + 1; z2 < 9; ++z2) {
                    double m = 0.0;
                    for (int w = 0; w <= z1; ++w) m += edge_measure_weight(EdgeSide::right, f, x, {{z1}, {w, z2}}, a);
                    CHECK(std::abs(m - edge_kernel_right(f, x, {z1, z2}, a)) < 1e-9);
                }
    }
    SUBCASE("marginal of the left-edge measure") {
        for (Config x : {Config{0, 0}, Config{1, 3}})
            for (int u = 0; u < 8; ++u)
                for (int v = u; v < 9; ++v) {
                    // Bernoulli reach bounds the free top coordinate
                    double m = 0.0;
                    for (int w = v + 1; w < 14; ++w) m += edge_measure_weight(EdgeSide::left, f, x, {{v}, {u, w}}, a);
                    CHECK(std::abs(m - edge_kernel_left(f, x, {u, v}, a)) < 1e-9);
                }
    }
    SUBCASE("total mass over all arrays") {
        Symbol g = Symbol::bernoulli(0.3) * Symbol::bernoulli(0.6);
        for (EdgeSide side : {EdgeSide::right, EdgeSide::left})
            for (int N = 1; N <= 3; ++N) {
                Config x = side == EdgeSide::right ? packed(N) : Config(N, 1);
                if (side == EdgeSide::right) x.back() += 1;
                const int bound = x.back() + N + 3;
                double total = 0.0;
                for (const Config& top : weyl_configs(N, bound)) {
                    // all arrays below `top`, level by level
                    std::vector<std::vector<Config>> partial{{top}};
                    for (int n = N - 1; n >= 1; --n) {
                        std::vector<std::vector<Config>> next;
                        for (auto& arr : partial)
                            for (auto& c : children(arr.back())) {
                                auto e = arr;
                                e.push_back(c);
                                next.push_back(std::move(e));
                            }
                        partial.swap(next);
                    }
                    for (auto& arr : partial) {
                        std::vector<Config> z(arr.rbegin(), arr.rend());
                        total += edge_measure_weight(side, g, x, z, a);
                    }
                }
                CHECK(std::abs(total - 1.0) < 1e-9);
            }
    }
    SUBCASE("packed start reduces to the multilevel law") {
        const int N = 3;
        Matrix T = t_matrix(f, 20, a);
        double h = h_N(packed(N), a);
        for (const Config& top : weyl_configs(N, 6))
            for (const Config& mid : children(top))
                for (const Config& low : children(mid)) {
                    std::vector<Config> z{low, mid, top};
                    Matrix M(N, N);
                    for (int i = 0; i < N; ++i)
                        for (int j = 0; j < N; ++j) M(i, j) = T(i, top[j]);
                    double expect = M.determinant() / h * lambda_kernel(top, mid, a) * lambda_kernel(mid, low, a);
                    CHECK(edge_measure_weight(EdgeSide::right, f, packed(N), z, a) ==
                          doctest::Approx(expect).epsilon(1e-10));
                }
    }
}

TEST_CASE("edge states of arrays") {
    for (EdgeSide side : {EdgeSide::right, EdgeSide::left})
        for (Config e : {Config{0, 1, 2}, Config{1, 1, 4}, Config{0, 3, 5}, Config{2, 2, 2}}) {
            if (side == EdgeSide::right && !is_weyl(e)) continue;
            ArrayState s = array_with_edge(side, e);
            CHECK(valid_array(s));
            CHECK(edge_state(side, s) == e);
        }
    CHECK_THROWS_AS(array_with_edge(EdgeSide::right, {1, 1}), DomainError);
}

TEST_CASE("edge laws from full-array simulation") {
    auto a = field();
    Schedule sched{{Step::Kind::bernoulli, 0.45}, {Step::Kind::geometric, 0.3}, {Step::Kind::bernoulli, 0.6}};
    const long replicas = 40000;
    for (EdgeSide side : {EdgeSide::right, EdgeSide::left}) {
        Config x = side == EdgeSide::right ? Config{1, 3} : Config{0, 2};
        auto probs = edge_path_probs(side, x, sched, a, 24);
        double mass = 0.0;
        for (auto& [p, q] : probs) mass += q;
        CHECK(mass > 1 - 1e-6);
        auto counts = edge_empirical_paths(side, array_with_edge(side, x), sched, a, replicas, 11);
        auto res = chi_square_gof(counts, probs);
        CHECK(res.p_value > 1e-4);

        // the end-point law from the product symbol
        auto end = edge_empirical_law(side, array_with_edge(side, x), sched, a, replicas, 12);
        auto row = edge_kernel_row(side, schedule_symbol(sched, 0, sched.size()), x, a, 24);
        CHECK(chi_square_gof(end, row).p_value > 1e-4);
    }
}
