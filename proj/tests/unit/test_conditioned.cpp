#include "doctest.h"

#include <algorithm>
#include <random>

#include "inhomog/conditioned.hpp"

using namespace inhomog;

namespace {

const auto kA = InhomogeneitySequence::periodic({0.6, 1.3, 0.9}, 600);
const auto kB = InhomogeneitySequence::periodic({0.3, 0.7, 0.55}, 600);
const auto kG = InhomogeneitySequence::periodic({0.8, 1.1, 0.95}, 600);

struct Case {
    DriftKind kind;
    const InhomogeneitySequence* a;
    std::vector<double> gammas;  // satisfy the ordering conditions
    double t;
};

std::vector<Case> cases() {
    return {{DriftKind::pb, &kA, {0.2, 1.2, 2.3}, 0.8},
            {DriftKind::B, &kB, {0.9, 0.35, 0.13}, 2.0},
            {DriftKind::g, &kG, {1.0, 1.25, 1.5}, 2.0}};
}

// det(h_{g_i}(x_j)) straight from the characteristic polynomials
double plain_h_det(DriftKind kind, const std::vector<double>& g, const Config& x, const InhomogeneitySequence& a) {
    const std::size_t N = g.size();
    Matrix M(N, N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) M(i, j) = hgamma_eval(kind, g[i], std::size_t(x[j]), a);
    return M.determinant();
}

}  // namespace

TEST_CASE("shifted sequences and constants") {
    auto b = shifted_sequence(DriftKind::B, 0.4, kB);
    CHECK(b[1] == doctest::Approx(0.4 * 0.7 + 0.6));
    CHECK(b.sup() == doctest::Approx(0.4 * 0.7 + 0.6));
    CHECK(shifted_sequence(DriftKind::g, 1.5, kG)[0] == doctest::Approx(1.5 * 0.8 + 0.5));
    CHECK(drift_constant(DriftKind::pb, 0.5, 2.0) == doctest::Approx(std::exp(1.0)));
    CHECK(drift_constant(DriftKind::B, 0.5, 3.0) == doctest::Approx(8.0));
    CHECK(drift_constant(DriftKind::g, 2.0, 3.0) == doctest::Approx(8.0));
    CHECK_THROWS_AS(base_symbol(DriftKind::B, 1.5), DomainError);
    CHECK_THROWS_AS(shifted_sequence(DriftKind::g, 0.9, kG), DomainError);
    CHECK(drift_hypotheses_hold(DriftKind::g, kG));
    CHECK_FALSE(drift_hypotheses_hold(DriftKind::B, kA));
    CHECK_THROWS_AS(drifted_transition({DriftKind::B, 0.5, kA}, 1.0, 0, 1), DomainError);

    // zero drift is the plain pure-birth chain; gamma = 1 is the plain Bernoulli step
    for (int y = 2; y < 9; ++y)
        CHECK(drifted_transition({DriftKind::pb, 0.0, kA}, 0.7, 2, y) ==
              doctest::Approx(t_purebirth(2, std::size_t(y), 0.7, kA)).epsilon(1e-13));
    for (int x = 0; x < 6; ++x) {
        CHECK(drifted_transition({DriftKind::B, 1.0, kB}, 1.0, x, x + 1) == doctest::Approx(kB[x]).epsilon(1e-15));
        CHECK(drifted_transition({DriftKind::B, 1.0, kB}, 1.0, x, x) == doctest::Approx(1 - kB[x]).epsilon(1e-15));
    }
    // one geometric step, written from the definition
    const double g = 1.3;
    double expect = 1.0 / (g * (1 + kG[4]));
    for (int k = 2; k < 4; ++k) expect *= (g * (1 + kG[k]) - 1) / (g * (1 + kG[k]));
    CHECK(drifted_transition({DriftKind::g, g, kG}, 1.0, 2, 4) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("Doob transform route") {
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> kind_d(0, 2), x_d(0, 12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_gap = 0.0, worst_row = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        DriftKind kind = DriftKind(kind_d(gen));
        const InhomogeneitySequence& a = kind == DriftKind::pb ? kA : kind == DriftKind::B ? kB : kG;
        double gamma = kind == DriftKind::pb ? 3.0 * u(gen) : kind == DriftKind::B ? 0.05 + 0.95 * u(gen) : 1.0 + u(gen);
        double t = kind == DriftKind::pb ? 0.2 + 1.5 * u(gen) : double(1 + trial % 3);
        int x = x_d(gen);
        DriftedWalkSpec spec{kind, gamma, a};
        std::size_t tail = drifted_tail(kind, gamma, t, a, 1e-13);
        double sum = 0.0;
        for (int y = x; y < x + int(tail); ++y) {
            double d = drifted_transition(spec, t, x, y);
            worst_gap = std::max(worst_gap, std::abs(d - drifted_transition_doob(spec, t, x, y)));
            sum += d;
        }
        worst_row = std::max(worst_row, std::abs(sum - 1.0));
    }
    CHECK(worst_gap < 1e-10);
    CHECK(worst_row < 1e-10);
}

TEST_CASE("eigenfunction ladder") {
    for (const Case& c : cases()) {
        Matrix T = t_matrix(base_symbol(c.kind, c.t), 260, *c.a);
        for (double g : c.gammas) {
            double lam = drift_constant(c.kind, g, c.t), worst = 0.0;
            for (int x = 0; x < 30; ++x) {
                double s = 0.0;
                for (int y = x; y < 260; ++y) s += T(x, y) * hgamma_eval(c.kind, g, std::size_t(y), *c.a);
                worst = std::max(worst, std::abs(s / (lam * hgamma_eval(c.kind, g, std::size_t(x), *c.a)) - 1.0));
            }
            CHECK(worst < 1e-10);
        }
    }
}

TEST_CASE("scaled h-determinants") {
    for (const Case& c : cases())
        for (const Config& x : {Config{0, 1, 2}, Config{2, 5, 9}, Config{1, 7, 20}}) {
            double plain = plain_h_det(c.kind, c.gammas, x, *c.a);
            LogDet d = h_gamma_logdet(c.kind, c.gammas, x, *c.a);
            CHECK(d.sign * std::exp(d.log_abs) == doctest::Approx(plain).epsilon(1e-10));
        }
    LogDet flat = h_gamma_logdet(DriftKind::pb, {0.5, 0.5}, {1, 3}, kA);
    CHECK(flat.sign == 0);
}

TEST_CASE("drifted semigroup") {
    for (const Case& c : cases()) {
        const int bound = drifted_semigroup_bound(c.kind, c.gammas, c.t, 8, *c.a, 1e-12);
        DriftedSemigroup P(c.kind, c.gammas, c.t, *c.a, bound);
        for (const Config& x : {Config{0, 1, 2}, Config{1, 4, 8}}) {
            double sum = 0.0, lowest = 0.0;
            for (auto& [y, p] : P.row(x)) {
                sum += p;
                lowest = std::min(lowest, p);
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
            CHECK(lowest > -1e-15);
        }

        // permuting the drifts leaves every entry unchanged
        std::mt19937_64 gen(11);
        const Config x{0, 2, 3};
        auto base = P.row(x);
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            std::vector<double> g = c.gammas;
            std::shuffle(g.begin(), g.end(), gen);
            DriftedSemigroup Q(c.kind, g, c.t, *c.a, bound);
            for (auto& [y, p] : base) worst = std::max(worst, std::abs(Q(x, y) - p));
        }
        CHECK(worst < 1e-10);

        // one particle: the drifted walk itself
        for (int y = 3; y < 9; ++y)
            CHECK(drifted_semigroup(c.kind, {c.gammas[1]}, c.t, {3}, {y}, *c.a) ==
                  doctest::Approx(drifted_transition({c.kind, c.gammas[1], *c.a}, c.t, 3, y)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(drifted_semigroup(DriftKind::pb, {0.4, 0.4}, 1.0, {0, 1}, {1, 2}, kA), DegenerateParameterError);

    // nearly equal drifts: reported only
    const std::vector<double> near{0.4, 0.4005, 0.401};
    DriftedSemigroup P(DriftKind::pb, near, 0.5, kA, drifted_semigroup_bound(DriftKind::pb, near, 0.5, 3, kA));
    double sum = 0.0;
    for (auto& [y, p] : P.row({0, 1, 3})) sum += p;
    MESSAGE("near-equal drifts: row sum - 1 = " << sum - 1.0);
}

TEST_CASE("semigroup property") {
    struct S {
        DriftKind kind;
        const InhomogeneitySequence* a;
        std::vector<double> g;
        double s, t;
    };
    for (const S& c : {S{DriftKind::pb, &kA, {0.2, 1.2}, 0.5, 0.7}, S{DriftKind::B, &kB, {0.9, 0.35}, 1, 2},
                       S{DriftKind::g, &kG, {1.0, 1.3}, 1, 1}}) {
        const int bound = drifted_semigroup_bound(c.kind, c.g, c.s + c.t, 4, *c.a, 1e-13) + 20;
        DriftedSemigroup Ps(c.kind, c.g, c.s, *c.a, bound), Pt(c.kind, c.g, c.t, *c.a, bound),
            Pst(c.kind, c.g, c.s + c.t, *c.a, bound);
        const Config x{1, 4};
        auto first = Ps.row(x);
        double worst = 0.0;
        for (const Config& y : weyl_configs(2, 14)) {
            if (y[0] < x[0]) continue;
            double comp = 0.0;
            for (auto& [z, p] : first)
                if (z[1] <= y[1]) comp += p * Pt(z, y);
            worst = std::max(worst, std::abs(comp - Pst(x, y)));
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("non-collision probabilities") {
    CHECK(noncollision_prob(DriftKind::pb, {0.7}, {3}, kA).value == 1.0);
    for (const Case& c : cases()) {
        auto nc = noncollision_prob(c.kind, c.gammas, {0, 2, 3}, *c.a);
        CHECK(nc.conditions_ok);
        CHECK(nc.value > 0.0);
        CHECK(nc.value <= 1.0);
    }
    // spreading the start and the drifts raises the probability towards one
    double prev = 0.0;
    for (int s = 1; s <= 12; ++s) {
        double v = noncollision_prob(DriftKind::pb, {0.1, 0.8 + 0.4 * s}, {0, 2 * s}, kA).value;
        CHECK(v >= prev);
        if (v < 1.0 - 1e-12) CHECK(v > prev);
        prev = v;
    }
    CHECK(prev > 0.99);
    // too close drifts are flagged but still evaluated
    auto close = noncollision_prob(DriftKind::pb, {0.2, 0.5}, {0, 3}, kA);
    CHECK_FALSE(close.conditions_ok);
    CHECK(close.value > 0.0);
    CHECK_FALSE(ordering_conditions_hold(DriftKind::B, {0.3, 0.9}, kB));
    CHECK(ordering_conditions_hold(DriftKind::g, {1.0, 1.2}, kG));
}

TEST_CASE("level eigenfunction determinant form") {
    for (const Case& c : cases())
        for (std::size_t N = 1; N <= 3; ++N) {
            std::vector<double> g(c.gammas.begin(), c.gammas.begin() + long(N));
            for (const Config& x : weyl_configs(int(N), 7))
                CHECK(level_eigenfunction_det(c.kind, g, x, *c.a) ==
                      doctest::Approx(level_eigenfunction_recursive(c.kind, g, x, *c.a)).epsilon(1e-11));
        }
}

TEST_CASE("conditioned transitions") {
    for (const Case& c : cases()) {
        const Config x{0, 2, 3};
        for (const Config& y : {Config{1, 3, 5}, Config{0, 3, 4}, Config{2, 4, 7}}) {
            auto rep = conditioned_transition_check(c.kind, c.gammas, c.t, x, y, *c.a);
            CHECK(rep.max_error() < 1e-10);
        }
        auto still = conditioned_transition_check(c.kind, c.gammas, 0.0, x, x, *c.a);
        CHECK(still.semigroup == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(conditioned_transition_check(c.kind, c.gammas, 0.0, x, {0, 2, 4}, *c.a).semigroup == 0.0);
    }
    // two pure-birth walks over one step
    auto rep = conditioned_transition_check(DriftKind::pb, {0.2, 2.0}, 1.0, {0, 1}, {1, 3}, kA);
    CHECK(rep.max_error() < 1e-10);
    CHECK(rep.killed > 0.0);
}

TEST_CASE("survival Monte Carlo") {
    const std::vector<double> g{0.2, 2.0};
    const Config x{0, 1};
    double exact = noncollision_prob(DriftKind::pb, g, x, kA).value;
    auto est = mc_survival_pb2(g, x, 30.0, kA, 20000, 77);
    CHECK(est.correction < 1e-4);
    CHECK(est.contains(exact));
    MESSAGE("survival exact " << exact << " mc " << est.p_hat << " +- " << est.sigma);
}

TEST_CASE("conditioned Monte Carlo") {
    const std::vector<double> g{0.9, 0.35};
    auto rep = conditioned_transition_check(DriftKind::B, g, 3.0, {0, 1}, {1, 3}, kB, 20000, 5, 40.0);
    CHECK(rep.survivors > 4000);
    CHECK(rep.chi2.p_value > 1e-4);
    CHECK(rep.max_z < 4.0);
}
