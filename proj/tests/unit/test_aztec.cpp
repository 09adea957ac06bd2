#include "doctest.h"

#include <random>

#include "inhomog/aztec.hpp"
#include "inhomog/dynamics.hpp"

using namespace inhomog;

namespace {

AztecWeighting random_weighting(int N, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.3, 3.0);
    AztecWeighting W(N);
    for (int x = 0; x < N; ++x)
        for (int n = 1; n <= N; ++n)
            for (DimerKind k : kDimerKinds) W.set(k, x, n, u(gen));
    return W;
}

double max_gap(const std::map<DimerCover, double>& p, const std::map<DimerCover, double>& q) {
    double m = 0.0;
    for (auto& [d, v] : p) {
        auto it = q.find(d);
        m = std::max(m, std::abs(v - (it == q.end() ? 0.0 : it->second)));
    }
    return m;
}

DimerCover figure_cover() {
    DimerCover d(3);
    d.add(DimerKind::w, 0, 1);
    d.add(DimerKind::n, 0, 2);
    d.add(DimerKind::s, 0, 2);
    d.add(DimerKind::w, 1, 1);
    d.add(DimerKind::e, 1, 1);
    d.add(DimerKind::n, 2, 1);
    d.add(DimerKind::w, 2, 2);
    d.add(DimerKind::e, 2, 2);
    d.add(DimerKind::e, 2, 3);
    d.add(DimerKind::w, 1, 3);
    d.add(DimerKind::e, 1, 3);
    d.add(DimerKind::s, 0, 3);
    return d;
}

}  // namespace

TEST_CASE("square probabilities and gauge") {
    AztecWeighting W(2);
    CHECK(square_prob(W, 0, 1) == 0.5);
    W.set(DimerKind::w, 1, 2, 2.0);
    W.set(DimerKind::e, 1, 2, 3.0);
    CHECK(square_prob(W, 1, 2) == doctest::Approx(6.0 / 7.0).epsilon(1e-15));
    CHECK_THROWS_AS(square_prob(W, 2, 1), DomainError);
    CHECK_THROWS_AS(W.set(DimerKind::n, 0, 1, 0.0), DomainError);

    AztecWeighting R = random_weighting(2, 3);
    AztecWeighting G = gauge_transform(gauge_transform(R, {1, 1}, 2.5), {2, 0}, 0.3);
    CHECK((rho_table(R) - rho_table(G)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(max_gap(dimer_measure(R), dimer_measure(G)) < 1e-14);
    CHECK_THROWS_AS(gauge_transform(R, {0, 0}, 2.0), DomainError);
}

TEST_CASE("cover enumeration") {
    for (int N = 1; N <= 4; ++N) {
        auto covers = enumerate_covers(N);
        CHECK(covers.size() == std::size_t(1) << (N * (N + 1) / 2));
        for (auto& d : covers) {
            CHECK(valid_cover(d));
            CHECK(d.dimer_count() == std::size_t(N * (N + 1)));
            auto p = dimer_to_particles(d);
            for (int n = 1; n <= N; ++n) CHECK(int(p[n - 1].size()) == n);
        }
    }
    DimerCover broken(2);
    broken.add(DimerKind::n, 0, 1);
    CHECK_FALSE(valid_cover(broken));
    CHECK_THROWS_AS(dimer_to_particles(broken), AztecError);
}

TEST_CASE("dimers to particles") {
    DimerCover d = figure_cover();
    REQUIRE(valid_cover(d));
    auto p = dimer_to_particles(d);
    CHECK(p[0] == Config{1});
    CHECK(p[1] == Config{0, 2});
    CHECK(p[2] == Config{0, 1, 2});

    for (DimerKind a : {DimerKind::n, DimerKind::w}) {
        DimerCover one(1);
        one.add(a, 0, 1);
        one.add(a == DimerKind::n ? DimerKind::s : DimerKind::e, 0, 1);
        CHECK(dimer_to_particles(one)[0] == Config{0});
    }
    bool seen = false;
    for (auto& c : enumerate_covers(2)) seen = seen || dimer_to_particles(c) == std::vector<Config>{{0}, {0, 1}};
    CHECK(seen);
}

TEST_CASE("urban renewal") {
    AztecWeighting ones(3);
    AztecWeighting half = urban_renewal(ones);
    CHECK(half.size() == 2);
    for (int x = 0; x < 2; ++x)
        for (int n = 1; n <= 2; ++n)
            for (DimerKind k : kDimerKinds) CHECK(half.get(k, x, n) == 0.5);

    AztecWeighting W(2);
    const double a = 1.5, b = 0.7, c = 2.0, d = 0.4;
    W.set(DimerKind::w, 1, 2, a);
    W.set(DimerKind::e, 1, 2, b);
    W.set(DimerKind::n, 1, 2, c);
    W.set(DimerKind::s, 1, 2, d);
    CHECK(urban_renewal(W).get(DimerKind::e, 0, 1) == doctest::Approx(b / (a * b + c * d)).epsilon(1e-15));

    auto seq = InhomogeneitySequence::periodic({0.3, 0.7, 0.55, 0.2}, 40);
    for (int k = 1; k <= 6; ++k) {
        Matrix rho = rho_table(urban_renewal(a_weighting(k + 1, seq)));
        for (int x = 0; x < k; ++x)
            for (int n = 1; n <= k; ++n) CHECK(std::abs(rho(x, n - 1) - seq[x]) < 1e-12);
    }
    auto tower = ur_tower(random_weighting(4, 9));
    for (int k = 1; k <= 4; ++k) CHECK(tower[k - 1].size() == k);
}

TEST_CASE("shuffle law is the dimer measure") {
    for (int N = 1; N <= 4; ++N) {
        AztecWeighting W = random_weighting(N, 100 + N);
        CHECK(max_gap(dimer_measure(W), shuffle_law(W)) < 1e-12);
    }
    // size one: a west-east pair with probability rho of UR^N_1
    AztecWeighting W = random_weighting(1, 4);
    auto law = shuffle_law(W);
    DimerCover we(1);
    we.add(DimerKind::w, 0, 1);
    we.add(DimerKind::e, 0, 1);
    CHECK(law[we] == doctest::Approx(square_prob(W, 0, 1)).epsilon(1e-14));
}

TEST_CASE("shuffle sampler") {
    const long samples = 40000;
    for (bool uniform : {true, false}) {
        AztecWeighting W = uniform ? AztecWeighting(2) : random_weighting(2, 17);
        auto exact = dimer_measure(W);
        if (uniform)
            for (auto& [d, p] : exact) CHECK(p == doctest::Approx(1.0 / 8));
        std::map<DimerCover, long> counts;
        std::vector<DimerCover> traj;
        for (long r = 0; r < samples; ++r) {
            DimerCover d = shuffle_sample(W, RngStream{21, std::uint64_t(r)}, &traj);
            CHECK(traj.size() == 2);
            ++counts[d];
        }
        CHECK(chi_square_gof(counts, exact).p_value > 1e-4);
    }
    // identical seeds give identical covers
    AztecWeighting W = random_weighting(5, 2);
    CHECK(shuffle_sample(W, RngStream{3, 4}) == shuffle_sample(W, RngStream{3, 4}));
    CHECK(valid_cover(shuffle_sample(W, RngStream{3, 5})));
}

TEST_CASE("consistency of weighting families") {
    auto a = InhomogeneitySequence::periodic({0.25, 0.6, 0.8}, 40);
    auto rep = consistency_check([&](int k) { return a_weighting(k, a); }, 6);
    CHECK(rep.deviation.size() == 6);
    CHECK(rep.max_deviation() < 1e-12);
    CHECK(consistency_check([](int k) { return AztecWeighting(k, 2.0); }, 5).max_deviation() == 0.0);
    auto perturbed = consistency_check(
        [&](int k) {
            AztecWeighting W = a_weighting(k, a);
            if (k == 3) W.set(DimerKind::s, 1, 2, 5.0);
            return W;
        },
        4);
    CHECK(perturbed.max_deviation() > 0.1);
}

TEST_CASE("shuffle against push-block") {
    auto a = InhomogeneitySequence::periodic({0.3, 0.65, 0.5}, 40);
    auto rep = shuffle_vs_pushblock(a, 2, 3, 30000, 8);
    REQUIRE(rep.shuffle_counts.size() == 4);
    CHECK(rep.shuffle_counts[0].size() == 1);
    CHECK(rep.shuffle_counts[0].begin()->first == packed(2));
    CHECK(rep.push_counts[0].begin()->first == packed(2));
    CHECK(rep.min_p() > 1e-4);

    // the shuffle's level-2 law at t = 2 against the exact two-step Bernoulli law
    Schedule two{{Step::Kind::bernoulli, 1.0}, {Step::Kind::bernoulli, 1.0}};
    Matrix T = t_matrix(schedule_symbol(two, 0, 2), 12, a);
    std::map<Config, double> exact;
    for (auto& [y, p] : markov_row(T, packed(2), a)) exact[y] = p;
    CHECK(chi_square_gof(rep.shuffle_counts[2], exact).p_value > 1e-4);

    CHECK_THROWS_AS(shuffle_vs_pushblock(InhomogeneitySequence::constant(1.0, 10), 2, 1, 10, 1), DomainError);
}

TEST_CASE("tiling svg") {
    DimerCover d = figure_cover();
    std::string svg = tiling_svg(d);
    std::size_t rects = 0;
    for (std::size_t p = svg.find("<rect"); p != std::string::npos; p = svg.find("<rect", p + 1)) ++rects;
    CHECK(rects == d.dimer_count());
    CHECK(svg.rfind("<svg", 0) == 0);
}
