#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "inhomog/correlations.hpp"

using namespace inhomog;

namespace {

InhomogeneitySequence field() { return InhomogeneitySequence::periodic({0.8, 1.25, 1.0}, 900); }

bool has(const Config& c, int x) { return std::count(c.begin(), c.end(), x) > 0; }

// exact level law by enumeration on [0, L)
std::vector<std::pair<Config, double>> level_law(const Symbol& f, int N, int L, const InhomogeneitySequence& a) {
    return markov_row(t_matrix(f, L, a), packed(N), a);
}

double factorial(int n) { return std::tgamma(n + 1.0); }

// J_sigma through the Laurent expansion of 1/(v - z)
double bessel_series(double sigma, int x, int y) {
    auto A = [&](int m) {
        double s = 0.0;
        for (int j = std::max(0, -m - 1); j < 60; ++j) s += std::pow(-sigma, j) / (factorial(j) * factorial(m + j + 1));
        return s;
    };
    auto B = [&](int n) {
        double s = 0.0;
        for (int i = std::max(0, -n); i < 60; ++i) s += std::pow(sigma, n + i) * (i % 2 ? -1.0 : 1.0) / (factorial(n + i) * factorial(i));
        return s;
    };
    double s = 0.0;
    for (int k = 0; k < 80; ++k) s += A(x + k) * B(y + k + 1);
    return s;
}

}  // namespace

TEST_CASE("one-point function of the bottom particle under pure birth") {
    auto one = InhomogeneitySequence::constant(1.0, 200);
    for (double t : {0.3, 1.0, 2.5})
        CHECK(kernel_array(Symbol::purebirth(t), {1, 0}, {1, 0}, one) == doctest::Approx(std::exp(-t)).epsilon(1e-10));
}

TEST_CASE("single-time kernels against the exact level law") {
    auto a = field();
    Schedule sched{{Step::Kind::bernoulli, 0.6}, {Step::Kind::geometric, 0.5}, {Step::Kind::purebirth, 0.7}};
    Symbol f = schedule_symbol(sched, 0, 3);
    const int N = 2, L = 30;
    auto law = level_law(f, N, L, a);
    std::vector<TimePoint> tp;
    std::vector<LevelPoint> lp;
    for (int x = 0; x < L; ++x) {
        tp.push_back({3, x});
        lp.push_back({N, x});
    }
    Matrix K = kernel_level_matrix(N, sched, tp, a);
    Matrix KA = kernel_array_matrix(f, lp, a);
    double sum = 0.0;
    for (int x = 0; x < L; ++x) {
        double exact = 0.0;
        for (auto& [y, p] : law)
            if (has(y, x)) exact += p;
        CHECK(K(x, x) == doctest::Approx(exact).epsilon(1e-9));
        // same point process: the level kernel is the transposed array kernel
        CHECK(KA(x, x) == doctest::Approx(K(x, x)).epsilon(1e-10));
        sum += K(x, x);
    }
    CHECK(sum == doctest::Approx(N).epsilon(1e-8));
    for (int x1 = 0; x1 < 8; ++x1)
        for (int x2 = x1 + 1; x2 < 8; ++x2) {
            double exact = 0.0;
            for (auto& [y, p] : law)
                if (has(y, x1) && has(y, x2)) exact += p;
            double minor = K(x1, x1) * K(x2, x2) - K(x1, x2) * K(x2, x1);
            CHECK(std::abs(minor - exact) < 1e-10);
            CHECK(KA(x1, x2) == doctest::Approx(K(x2, x1)).epsilon(1e-9));
        }
}

TEST_CASE("array kernel across two levels against the Gibbs law") {
    auto a = field();
    Symbol f = Symbol::bernoulli(0.5) * Symbol::geometric(0.4);
    const int L = 24;
    auto law = level_law(f, 2, L, a);
    std::vector<LevelPoint> pts;
    for (int x = 0; x < 6; ++x) pts.push_back({1, x});
    for (int x = 0; x < 6; ++x) pts.push_back({2, x});
    Matrix K = kernel_array_matrix(f, pts, a);
    for (int x1 = 0; x1 < 6; ++x1) {
        double one = 0.0;
        for (auto& [y, p] : law)
            for (const Config& c : children(y))
                if (c[0] == x1) one += p * link_kernel(y, c, a);
        CHECK(K(x1, x1) == doctest::Approx(one).epsilon(1e-9));
        for (int x2 = 0; x2 < 6; ++x2) {
            double joint = 0.0;
            for (auto& [y, p] : law)
                if (has(y, x2))
                    for (const Config& c : children(y))
                        if (c[0] == x1) joint += p * link_kernel(y, c, a);
            Matrix sub(2, 2);
            sub << K(x1, x1), K(x1, 6 + x2), K(6 + x2, x1), K(6 + x2, 6 + x2);
            CHECK(std::abs(correlation_det(sub) - joint) < 1e-9);
        }
    }
}

TEST_CASE("two-time correlations of the level kernel") {
    auto a = field();
    Schedule sched{{Step::Kind::geometric, 0.7}, {Step::Kind::bernoulli, 0.5}, {Step::Kind::bernoulli, 0.8}};
    const int N = 2, L = 44;
    auto first = level_law(schedule_symbol(sched, 0, 1), N, L, a);
    Matrix T = t_matrix(schedule_symbol(sched, 1, 3), L, a);
    for (int x1 = 0; x1 < 5; ++x1)
        for (int x2 = 0; x2 < 7; ++x2) {
            double exact = 0.0;
            for (auto& [y, p] : first) {
                if (!has(y, x1)) continue;
                for (auto& [z, q] : markov_row(T, y, a))
                    if (has(z, x2)) exact += p * q;
            }
            Matrix K = kernel_level_matrix(N, sched, {{1, x1}, {3, x2}}, a);
            CHECK(std::abs(correlation_det(K) - exact) < 1e-10);
        }

    // empty schedule: the packed configuration exactly
    Matrix K0 = kernel_level_matrix(3, {}, {{0, 0}, {0, 1}, {0, 2}, {0, 3}}, a);
    for (int i = 0; i < 4; ++i) CHECK(K0(i, i) == doctest::Approx(i < 3 ? 1.0 : 0.0).epsilon(1e-9));
    CHECK(correlation_det(K0.topLeftCorner(3, 3)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("principal minors are probabilities") {
    auto a = field();
    Symbol f = Symbol::purebirth(1.2) * Symbol::bernoulli(0.7);
    std::vector<LevelPoint> pts;
    for (int n = 1; n <= 3; ++n)
        for (int x = 0; x < 5; ++x) pts.push_back({n, x});
    Matrix K = kernel_array_matrix(f, pts, a);
    const int m = int(pts.size());
    for (int mask = 1; mask < (1 << 6); ++mask) {
        std::vector<int> idx;
        for (int b = 0; b < 6; ++b)
            if (mask >> b & 1) idx.push_back((b * 7) % m);
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        Matrix sub(idx.size(), idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) sub(i, j) = K(idx[i], idx[j]);
        double d = correlation_det(sub);
        CHECK(d >= -1e-8);
        CHECK(d <= 1 + 1e-8);
    }
}

TEST_CASE("contour construction") {
    auto a = field();
    auto c = kernel_contours(a, Symbol::geometric(1.2), Symbol::bernoulli(0.75));
    CHECK(std::abs(-1.0 / 1.2 - c.outer.center) > c.outer.radius);
    CHECK(c.inner.radius < 1.0 / 0.75);
    CHECK(c.inner.radius < c.outer.radius - std::abs(c.outer.center));
    CHECK(std::abs(c.outer.center) < c.outer.radius);
    CHECK_THROWS_AS(kernel_contours(a, Symbol::identity(), Symbol::identity(), 1.0), DomainError);
}

TEST_CASE("discrete Bessel kernel") {
    for (double sigma : {0.5, 1.0, 2.0})
        for (int x : {-4, -1, 0, 3})
            for (int y : {-3, 0, 2})
                CHECK(bessel_kernel(sigma, x, y) == doctest::Approx(bessel_series(sigma, x, y)).epsilon(1e-10));

    std::vector<int> xs{-5, -2, 0, 1, 4};
    Matrix J1 = bessel_kernel_matrix(1.3, xs, 1 << 12), J2 = bessel_kernel_matrix(1.3, xs, 1 << 13);
    CHECK((J1 - J2).cwiseAbs().maxCoeff() < 1e-10);

    // small sigma approaches the step profile 1_{x<0}
    for (int x = -4; x <= 4; ++x) {
        CHECK(bessel_kernel(0.0, x, x) == doctest::Approx(x < 0 ? 1.0 : 0.0).epsilon(1e-12));
        CHECK(std::abs(bessel_kernel(1e-4, x, x) - (x < 0 ? 1.0 : 0.0)) < 1e-3);
    }
    CHECK(std::isfinite(bessel_kernel(1.0, 200, -200)));
    CHECK(std::isfinite(bessel_kernel(1.0, -200, 200)));

    std::vector<int> sites;
    for (int y = -4; y <= 4; ++y) sites.push_back(y);
    Matrix J = bessel_kernel_matrix(1.7, sites);
    for (int mask = 1; mask < (1 << 9); mask += 7) {
        std::vector<int> idx;
        for (int b = 0; b < 9; ++b)
            if (mask >> b & 1) idx.push_back(b);
        Matrix sub(idx.size(), idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) sub(i, j) = J(idx[i], idx[j]);
        CHECK(correlation_det(sub) >= -1e-9);
    }
}

TEST_CASE("rescaled finite kernel and the Bessel limit") {
    auto a = field();
    // small N: same determinants as the level kernel at time zeta/N
    const int N = 4;
    std::vector<int> ys{-3, -1, 0, 2};
    Matrix G = bessel_finite_kernel(a, 1.0, N, ys);
    Schedule pb{{Step::Kind::purebirth, 1.0 / N}};
    std::vector<TimePoint> q;
    for (int y : ys) q.push_back({1, y + N});
    Matrix K = kernel_level_matrix(N, pb, q, a);
    for (int i = 0; i < 4; ++i) CHECK(G(i, i) == doctest::Approx(K(i, i)).epsilon(1e-10));
    CHECK(correlation_det(G.topLeftCorner(3, 3)) == doctest::Approx(correlation_det(K.topLeftCorner(3, 3))).epsilon(1e-9));

    auto one = InhomogeneitySequence::constant(1.0, 1000);
    auto dev1 = bessel_limit_check(one, 1.0, {400}, 6);
    CHECK(dev1[0].value() < 0.02);
    auto dev = bessel_limit_check(a, 1.0, {200, 800}, 6);
    CHECK(dev[1].value() < dev[0].value());

    Matrix Z = bessel_finite_kernel(a, 0.0, 50, {0, 1, 2, 5});
    for (int i = 0; i < 4; ++i) CHECK(std::abs(Z(i, i)) < 1e-9);
    CHECK(std::abs(bessel_kernel(0.0, 3, 3)) < 1e-9);
    CHECK_THROWS_AS(bessel_finite_kernel(a, 5.0, 6, {0}), DomainError);
}

TEST_CASE("Monte Carlo correlations") {
    auto a = field();
    auto packed_est = mc_correlation({{{0, 0}}, {{0, 1}}, {{0, 2}}, {{0, 0}, {0, 1}}}, {}, 2, a, 1000, 3);
    CHECK(packed_est[0].mean == 1.0);
    CHECK(packed_est[1].mean == 1.0);
    CHECK(packed_est[2].mean == 0.0);
    CHECK(packed_est[3].mean == 1.0);

    Schedule one{{Step::Kind::bernoulli, 0.7}};
    auto est = mc_correlation({{{1, 1}}}, one, 1, a, 100000, 4);
    CHECK(std::abs(est[0].z(0.7 * a[0])) < 4.0);

    Schedule sched{{Step::Kind::bernoulli, 0.6}, {Step::Kind::geometric, 0.5}, {Step::Kind::bernoulli, 0.4}};
    std::vector<TimePoint> pts{{1, 1}, {2, 2}, {3, 3}};
    auto mc = mc_correlation({pts}, sched, 2, a, 200000, 5);
    CHECK(std::abs(mc[0].z(correlation_det(kernel_level_matrix(2, sched, pts, a)))) < 4.0);

    std::vector<LevelPoint> lp{{1, 1}, {2, 0}, {2, 2}};
    auto mca = mc_correlation_array({lp}, sched, a, 200000, 6);
    CHECK(std::abs(mca[0].z(correlation_det(kernel_array_matrix(schedule_symbol(sched, 0, 3), lp, a)))) < 4.0);
}
