#include "doctest.h"

#include "inhomog/ensembles.hpp"

using namespace inhomog;

namespace {

const auto kA = InhomogeneitySequence::periodic({0.7, 1.2, 0.95, 1.1}, 200);

EnsembleSpec make_spec(int N, int M, std::vector<Symbol> steps, const InhomogeneitySequence& a = kA) {
    EnsembleSpec s;
    s.N = N;
    s.M = M;
    s.steps = std::move(steps);
    s.a = a;
    return s;
}

// compliant with the factorization windows: |a - 1| <= 0.15, one alpha in the big window
EnsembleSpec limit_spec(int M) {
    std::vector<Symbol> steps{Symbol::bernoulli(0.75), Symbol::bernoulli(0.3), Symbol::geometric(0.5)};
    if (M == 0) steps[0] = Symbol::bernoulli(0.2);
    return make_spec(4, M, steps, InhomogeneitySequence::periodic({0.85, 1.15, 1.0}, 400));
}

double max_correlation_gap(const EnsembleSpec& spec) {
    FixedEndpointKernel K(spec);
    PathLaw law = brute_force_marginals(spec);
    std::vector<SpacetimePoint> pts;
    for (int r = 1; r < spec.L(); ++r)
        for (int x = 0; x < spec.extent(); ++x) pts.push_back({r, x});
    double gap = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        gap = std::max(gap, std::abs(K.correlation({pts[i]}) - law.one_point(pts[i])));
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            gap = std::max(gap, std::abs(K.correlation({pts[i], pts[j]}) - law.correlation({pts[i], pts[j]})));
    }
    return gap;
}

}  // namespace

TEST_CASE("gram matrix") {
    auto id = make_spec(3, 0, {Symbol::identity(), Symbol::identity()});
    CHECK((gram(id) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

    const double a0 = 0.6, a1 = 0.45;
    auto two = make_spec(1, 1, {Symbol::bernoulli(a0), Symbol::bernoulli(a1)});
    double direct = (1 - a0 * kA[0]) * a1 * kA[0] + a0 * kA[0] * (1 - a1 * kA[1]);
    CHECK(gram(two)(0, 0) == doctest::Approx(direct).epsilon(1e-15));

    auto mixed = make_spec(3, 2,
                           {Symbol::bernoulli(0.5), Symbol{{0.3}, {0.4}, 0.0}, Symbol::purebirth(0.7),
                            Symbol::geometric(0.25)});
    Matrix G = gram(mixed);
    CHECK((G - gram_contour(mixed)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(G.determinant() > 0.0);

    Matrix S(2, 2);
    S << 1.0, 2.0, 0.5, 1.0 + 1e-14;
    CHECK_THROWS_AS(check_gram(S), NearSingularError);
    CHECK_NOTHROW(check_gram(G));
}

TEST_CASE("fixed endpoint kernel") {
    auto spec = make_spec(3, 2, {Symbol::bernoulli(0.5), Symbol::geometric(0.4), Symbol::purebirth(0.6),
                                 Symbol::bernoulli(0.8)});
    FixedEndpointKernel K(spec);
    for (int r = 1; r < spec.L(); ++r) {
        double trace = 0.0;
        for (int x = 0; x < spec.extent(); ++x) trace += K({r, x}, {r, x});
        CHECK(std::abs(trace - 3.0) < 1e-8);
    }
    CHECK_THROWS_AS(K({0, 1}, {1, 1}), DomainError);
    CHECK_THROWS_AS(K({1, 9}, {1, 1}), std::out_of_range);

    // one path, two steps: the middle position given both endpoints
    auto bridge = make_spec(1, 2, {Symbol::geometric(0.6), Symbol::bernoulli(0.7)});
    Matrix T0 = t_matrix(bridge.steps[0], 4, kA), T1 = t_matrix(bridge.steps[1], 4, kA);
    double Z = 0.0;
    for (int x = 0; x < 3; ++x) Z += T0(0, x) * T1(x, 2);
    FixedEndpointKernel Kb(bridge);
    for (int x = 0; x < 3; ++x) CHECK(Kb({1, x}, {1, x}) == doctest::Approx(T0(0, x) * T1(x, 2) / Z).epsilon(1e-13));

    // the reproducing-kernel assembly
    double gap = 0.0;
    for (int r = 1; r < spec.L(); ++r)
        for (int rp = 1; rp < spec.L(); ++rp)
            for (int x = 0; x < spec.extent(); x += 2)
                for (int y = 0; y < spec.extent(); y += 2)
                    gap = std::max(gap, std::abs(K({r, x}, {rp, y}) - kernel_reproducing(spec, {r, x}, {rp, y})));
    CHECK(gap < 1e-9);
}

TEST_CASE("brute force path law") {
    const double a0 = 0.6, a1 = 0.45;
    auto two = make_spec(1, 1, {Symbol::bernoulli(a0), Symbol::bernoulli(a1)});
    PathLaw law = brute_force_marginals(two);
    REQUIRE(law.exact);
    REQUIRE(law.tuples.size() == 2);
    const double stay = (1 - a0 * kA[0]) * a1 * kA[0], move = a0 * kA[0] * (1 - a1 * kA[1]);
    CHECK(law.one_point({1, 0}) == doctest::Approx(stay / (stay + move)).epsilon(1e-15));
    CHECK(law.one_point({1, 1}) == doctest::Approx(move / (stay + move)).epsilon(1e-15));
    CHECK(law.exact_mass() == 1);

    auto spec = make_spec(2, 2, {Symbol::bernoulli(0.5), Symbol::geometric(0.4), Symbol::bernoulli(0.8)});
    PathLaw big = brute_force_marginals(spec);
    CHECK(big.exact_mass() == 1);
    FixedEndpointKernel K(spec);
    for (int x = 0; x < spec.extent(); ++x) CHECK(std::abs(big.one_point({1, x}) - K({1, x}, {1, x})) < 1e-10);

    CHECK_THROWS_AS(brute_force_marginals(spec, 10), BudgetError);
    // pure-birth steps fall back to floating point
    auto pb = make_spec(2, 1, {Symbol::purebirth(0.5), Symbol::bernoulli(0.6)});
    PathLaw fl = brute_force_marginals(pb);
    CHECK_FALSE(fl.exact);
    CHECK(max_correlation_gap(pb) < 1e-10);
}

TEST_CASE("kernel against path enumeration") {
    CHECK(max_correlation_gap(make_spec(1, 2, {Symbol::bernoulli(0.7), Symbol::geometric(0.5)})) < 1e-9);
    CHECK(max_correlation_gap(make_spec(2, 2, {Symbol::bernoulli(0.6), Symbol::bernoulli(0.4),
                                               Symbol::bernoulli(0.8)})) < 1e-9);
    CHECK(max_correlation_gap(make_spec(2, 3, {Symbol::geometric(0.3), Symbol::bernoulli(0.5),
                                               Symbol::geometric(0.6), Symbol::bernoulli(0.7)})) < 1e-9);
}

TEST_CASE("block symbols") {
    EnsembleSpec spec;
    spec.p = 2;
    spec.N = 2;
    spec.M = 1;
    spec.a = kA;
    spec.block_contour = default_contour(kA, Symbol::identity());
    BlockSymbol f;
    f.p = 2;
    f.entries = {[](cplx w) { return 1.0 - 0.3 * w; }, [](cplx) { return cplx(0.2); },
                 [](cplx w) { return 0.1 * w; }, [](cplx w) { return 1.0 - 0.4 * w; }};
    BlockSymbol g;
    g.p = 2;
    g.entries = {[](cplx w) { return 1.0 - 0.5 * w; }, [](cplx w) { return 0.3 * w; },
                 [](cplx) { return cplx(0.25); }, [](cplx w) { return 1.0 - 0.2 * w; }};
    spec.block_steps = {f, g, f};
    CHECK((gram(spec) - gram_contour(spec)).cwiseAbs().maxCoeff() < 1e-9);

    FixedEndpointKernel K(spec);
    for (int r = 1; r < spec.L(); ++r) {
        double trace = 0.0;
        for (int x = 0; x < spec.extent(); ++x) trace += K({r, x}, {r, x});
        CHECK(std::abs(trace - 4.0) < 1e-8);
    }
    CHECK(max_correlation_gap(spec) < 1e-9);
}

TEST_CASE("factorization windows") {
    auto spec = limit_spec(1);
    Factorization fac = factorize(spec);
    CHECK(fac.c == doctest::Approx(0.15));
    REQUIRE(fac.big_alphas.size() == 1);
    for (cplx z : {cplx(0.3, 0.2), cplx(-0.5, 0.1), cplx(0.9, -0.4)})
        CHECK(std::abs(fac.s_plus(z) * fac.s_minus(z) - symbol_eval(Symbol{{0.75, 0.3}, {0.5}, 0.0}, 1.0 - z)) < 1e-14);

    auto no_big = limit_spec(1);
    no_big.steps[0] = Symbol::bernoulli(0.2);
    CHECK_THROWS_WITH_AS(factorize(no_big), doctest::Contains("alpha window"), DomainError);
    auto bad_beta = limit_spec(1);
    bad_beta.steps[2] = Symbol::geometric(2.5);
    CHECK_THROWS_WITH_AS(factorize(bad_beta), doctest::Contains("beta window"), DomainError);
    auto wide = limit_spec(1);
    wide.a = InhomogeneitySequence::periodic({0.6, 1.3}, 100);
    CHECK_THROWS_WITH_AS(factorize(wide), doctest::Contains("a-bounds"), DomainError);
    CHECK_THROWS_WITH_AS(factorize(spec, 0.1), doctest::Contains("a-bounds"), DomainError);

    auto zero = limit_spec(0);
    Factorization f0 = factorize(zero);
    CHECK(f0.big_alphas.empty());
    CHECK(f0.s_minus(cplx(0.4, 0.7)) == cplx(1.0));
}

TEST_CASE("limiting kernel") {
    for (int M : {1, 0}) {
        auto rep = ladder_deviation(limit_spec(M), {4, 8, 16}, 4 + M);
        MESSAGE("M = " << M << ": " << rep.deviation[0] << " " << rep.deviation[1] << " " << rep.deviation[2]);
        // with M = 0 the paths cannot move, so every N already sits at the limit
        if (M == 1) CHECK(rep.strictly_decreasing());
        CHECK(rep.deviation[2] < 1e-8);
    }
    // two resolutions, homogeneous a
    auto flat = limit_spec(1);
    flat.a = InhomogeneitySequence::constant(1.0, 100);
    LimitOptions coarse, fine;
    fine.points = 2 * coarse.points;
    LimitKernel Kc(flat, coarse), Kf(flat, fine);
    double gap = 0.0, mass = 0.0;
    for (int r = 1; r < 3; ++r)
        for (int x = 0; x < 6; ++x) {
            for (int y = 0; y < 6; ++y) gap = std::max(gap, std::abs(Kc({r, x}, {2, y}) - Kf({r, x}, {2, y})));
            double rho = Kf({r, x}, {r, x});
            CHECK(rho >= -1e-12);
            CHECK(rho <= 1.0 + 1e-12);
            if (r == 1) mass += rho;
        }
    CHECK(gap < 1e-10);
    CHECK(std::isfinite(mass));
    CHECK(mass < 16.0);

    LimitOptions tight;
    tight.outer = 3.5;
    CHECK_THROWS_AS(LimitKernel(limit_spec(1), tight), DomainError);
}
