#include "inhomog/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include "json.hpp"
#include <numeric>
#include <sstream>

#include "inhomog/aztec.hpp"
#include "inhomog/conditioned.hpp"
#include "inhomog/correlations.hpp"
#include "inhomog/dynamics.hpp"
#include "inhomog/edges.hpp"
#include "inhomog/ensembles.hpp"
#include "inhomog/interlacing.hpp"
#include "inhomog/parallel.hpp"
#include "inhomog/toeplitz.hpp"

namespace inhomog {

namespace {

using Clock = std::chrono::steady_clock;

class Recorder {
public:
    Recorder(std::vector<ResultRecord>& out, std::string experiment)
        : out_(out), experiment_(std::move(experiment)), last_(Clock::now()) {}

    void below(const std::string& metric, double value, double tol) { push(metric, value, {}, tol, value < tol); }
    void above(const std::string& metric, double value, double tol) { push(metric, value, {}, tol, value > tol); }
    void exact(const std::string& metric, double value, double target) {
        push(metric, value, {}, target, value == target);
    }
    // |value - target| within k standard errors
    void within(const std::string& metric, double value, double target, double se, double k) {
        push(metric, value, se, target, std::abs(value - target) <= k * se);
    }
    void flag(const std::string& metric, bool ok) { push(metric, ok ? 1.0 : 0.0, {}, 1.0, ok); }
    void report(const std::string& metric, double value) { push(metric, value, {}, {}, {}); }

private:
    void push(const std::string& metric, double value, std::optional<double> se, std::optional<double> tol,
              std::optional<bool> pass) {
        auto now = Clock::now();
        ResultRecord r;
        r.experiment = experiment_;
        r.metric = metric;
        r.value = value;
        r.stderr_ = se;
        r.tolerance = tol;
        r.pass = pass;
        r.wall_seconds = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        out_.push_back(std::move(r));
    }

    std::vector<ResultRecord>& out_;
    std::string experiment_;
    Clock::time_point last_;
};

long replicas(long n, const SuiteOptions& opt) { return std::max<long>(1, std::lround(double(n) * opt.replica_scale)); }

std::uint64_t seed_for(const SuiteOptions& opt, std::uint64_t tag) { return mix64(opt.seed * 0x100 + tag); }

InhomogeneitySequence field(std::size_t length = 400) {
    return InhomogeneitySequence::periodic({0.8, 1.25, 1.0}, length);
}

template <class Key, class Fn>
std::map<Key, long> tally(long n, Fn&& sample) {
    auto parts = parallel_chunks<std::map<Key, long>>(n, [&](long lo, long hi) {
        std::map<Key, long> c;
        for (long r = lo; r < hi; ++r) ++c[sample(r)];
        return c;
    });
    std::map<Key, long> out;
    for (auto& p : parts)
        for (auto& [k, v] : p) out[k] += v;
    return out;
}

void toeplitz_suite(const SuiteOptions& opt, std::vector<ResultRecord>& out) {
    Recorder rec(out, "toeplitz");
    const auto a = InhomogeneitySequence::periodic({0.7, 1.3, 1.0, 0.85, 1.15, 0.95}, 400);
    const RngStream rng{seed_for(opt, 1), 0};
    auto draw = [&](std::uint64_t i, std::uint64_t j) {
        return Symbol{{0.95 * rng.uniform(i, j, 0) / a.sup()}, {1.5 * rng.uniform(i, j, 1)}, 2.0 * rng.uniform(i, j, 2)};
    };
    for (std::uint64_t i = 0; i < 20; ++i) {
        const Symbol f = draw(i, 0), g = draw(i, 1);
        const std::string id = "pair" + std::to_string(i);
        rec.below(id + ".composition", t_compose_check(f, g, a, 40), 1e-9);
        const std::size_t rows = 40;
        const Matrix T = t_matrix(f, rows + tail_length(f, a, 1e-15), a);
        rec.below(id + ".row_sum", row_sum_residual(T, rows), 1e-10);
        rec.below(id + ".duality", duality_residual(T, a, rows), 1e-9);
        const cplx lam(a.inf() + (a.sup() - a.inf()) * rng.uniform(i, 2, 0), 0.1 + 0.2 * rng.uniform(i, 2, 1));
        rec.below(id + ".eigenfunction", eigenfunction_residual(T, f, 20, lam, a), 1e-9);
    }
}

void interlacing_suite(const SuiteOptions&, std::vector<ResultRecord>& out) {
    Recorder rec(out, "interlacing");
    const auto a = field();
    const std::vector<std::pair<std::string, Symbol>> symbols{
        {"bernoulli", Symbol::bernoulli(0.5)}, {"geometric", Symbol::geometric(0.4)}, {"purebirth", Symbol::purebirth(0.8)}};
    for (const auto& [name, f] : symbols)
        for (int N : {1, 2})
            rec.below("intertwining." + name + ".N" + std::to_string(N), verify_intertwining(f, N, a, N == 1 ? 12 : 10),
                      1e-9);
}

void correlations_suite(const SuiteOptions& opt, std::vector<ResultRecord>& out) {
    Recorder rec(out, "correlations");
    const auto a = field();
    const Schedule sched{{Step::Kind::bernoulli, 0.6}, {Step::Kind::geometric, 0.5}, {Step::Kind::purebirth, 0.7}};
    const Symbol f = schedule_symbol(sched, 0, sched.size());
    for (int N : {2, 3}) {
        const std::size_t L = std::size_t(N) + tail_length(f, a, 1e-13);
        std::map<Config, double> exact;
        for (auto& [y, p] : markov_row(t_matrix(f, L, a), packed(N), a)) exact[y] = p;
        const std::uint64_t seed = seed_for(opt, 10 + N);
        auto counts = tally<Config>(replicas(100000, opt), [&](long r) {
            ArrayState s = packed_array(N);
            run_schedule(s, sched, a, RngStream{seed, std::uint64_t(r)});
            return s.levels[N - 1];
        });
        rec.above("level_law.N" + std::to_string(N) + ".p_value", chi_square_gof(counts, exact).p_value, 0.001);
    }
    const std::vector<std::vector<TimePoint>> pairs{
        {{1, 1}, {3, 3}}, {{2, 1}, {2, 3}}, {{3, 2}, {3, 4}}, {{1, 2}, {2, 2}}, {{3, 1}, {3, 2}}, {{1, 0}, {3, 5}}};
    auto est = mc_correlation(pairs, sched, 2, a, replicas(1000000, opt), seed_for(opt, 13));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double exact = correlation_det(kernel_level_matrix(2, sched, pairs[i], a));
        std::ostringstream id;
        id << "two_point.(" << pairs[i][0].t << "," << pairs[i][0].x << ")(" << pairs[i][1].t << "," << pairs[i][1].x << ")";
        rec.within(id.str(), est[i].mean, exact, est[i].stderr_, 4.0);
    }
}

void dynamics_suite(const SuiteOptions& opt, std::vector<ResultRecord>& out) {
    const auto a = field();
    {
        Recorder rec(out, "dynamics.coupling");
        const std::uint64_t seed = seed_for(opt, 20);
        long mismatches = 0;
        for (std::uint64_t r = 0; r < 1000; ++r) {
            const RngStream rng{seed, r};
            const int N = 1 + int(rng.bits(99) % 4);
            ArrayState d = packed_array(N), c = packed_array(N);
            for (std::uint64_t t = 0; t < 6; ++t) {
                const bool bern = rng.uniform(98, t) < 0.5;
                if (bern) {
                    const double alpha = 0.95 * rng.uniform(97, t) / a.sup();
                    step_bernoulli(d, alpha, a, rng, t);
                    step_recursive(c, Step::Kind::bernoulli, alpha, a, rng, t);
                } else {
                    const double beta = 2.0 * rng.uniform(97, t);
                    step_geometric(d, beta, a, rng, t);
                    step_recursive(c, Step::Kind::geometric, beta, a, rng, t);
                }
                if (!(d == c)) {
                    ++mismatches;
                    break;
                }
            }
        }
        rec.exact("mismatched_runs", double(mismatches), 0.0);
    }
    {
        Recorder rec(out, "dynamics.duality");
        const std::uint64_t seed = seed_for(opt, 21);
        const Environment half{[](int, int) { return 0.5; }};
        long bad = 0;
        for (std::uint64_t r = 0; r < 100; ++r) {
            ArrayState x = packed_array(40);
            for (std::uint64_t t = 0; t < 1 + r % 6; ++t) step_env(x, half, EnvKind::B, RngStream{seed, r}, t);
            ArrayState z = hgt_map(hgt_map(x));
            bool same = z.depth() >= 2;
            for (int j = 0; same && j < z.depth(); ++j) same = z.levels[j] == x.levels[j];
            bad += !same;
        }
        rec.exact("hgt_involution_failures", double(bad), 0.0);

        auto pb = duality_test(purebirth_env(a), EnvKind::pb, 1.0, 3, 16, replicas(100000, opt), seed_for(opt, 22));
        rec.exact("purebirth.truncation_failures", double(pb.truncation_failures), 0.0);
        rec.above("purebirth.min_p_value", pb.min_p(), 0.001);
        const Environment th{[&a](int x, int y) { return 0.45 * a[x] * (y % 2 ? 1.1 : 0.9); }};
        auto bg = duality_test(th, EnvKind::B, 3, 3, 32, replicas(100000, opt), seed_for(opt, 23));
        rec.exact("bernoulli_geometric.truncation_failures", double(bg.truncation_failures), 0.0);
        rec.above("bernoulli_geometric.min_p_value", bg.min_p(), 0.001);
    }
}

double row_total(const std::map<Config, double>& row) {
    double s = 0.0;
    for (auto& [y, p] : row) s += p;
    return s;
}

void edges_suite(const SuiteOptions& opt, std::vector<ResultRecord>& out) {
    Recorder rec(out, "edges");
    const auto a = field();
    // Bernoulli steps have bounded reach, so these rows are exhaustive
    for (EdgeSide side : {EdgeSide::right, EdgeSide::left}) {
        const std::string s = side == EdgeSide::right ? "right" : "left";
        double worst = 0.0, lowest = 0.0;
        for (int N = 1; N <= 3; ++N) {
            auto starts = side == EdgeSide::right ? weyl_configs(N, 5) : std::vector<Config>{};
            if (side == EdgeSide::left)
                for (const Config& c : weyl_configs(N, 5 + N - 1)) {
                    Config w = c;
                    for (int i = 0; i < N; ++i) w[i] -= i;  // weakly increasing
                    starts.push_back(w);
                }
            for (double alpha : {0.2, 0.5, 0.7})
                for (const Config& x : starts) {
                    auto row = edge_kernel_row(side, Symbol::bernoulli(alpha), x, a, x.back() + 2 * N + 2);
                    worst = std::max(worst, std::abs(row_total(row) - 1.0));
                    for (auto& [y, p] : row) lowest = std::min(lowest, p);
                }
        }
        rec.below(s + ".row_sum", worst, 1e-9);
        rec.above(s + ".min_entry", lowest, -1e-12);

        const Symbol f = Symbol::bernoulli(0.35) * Symbol::geometric(0.2), g = Symbol::purebirth(0.4);
        const int bound = 14;
        const Config x = side == EdgeSide::right ? Config{0, 2} : Config{1, 1};
        auto rf = edge_kernel_row(side, f, x, a, bound);
        auto rfg = edge_kernel_row(side, f * g, x, a, bound);
        std::map<Config, std::map<Config, double>> rg;
        for (auto& [y, p] : rf) rg[y] = edge_kernel_row(side, g, y, a, bound);
        double gap = 0.0;
        for (auto& [z, pz] : rfg) {
            if (z.back() > 8) continue;
            double c = 0.0;
            for (auto& [y, p] : rf) c += p * rg[y][z];
            gap = std::max(gap, std::abs(c - pz));
        }
        rec.below(s + ".semigroup", gap, 1e-9);

        // dyadic field: products of a_x and 1/a_y are exact
        const auto b = InhomogeneitySequence::periodic({0.5, 2.0, 1.0}, 60);
        const std::size_t L = 20;
        Matrix id = psi_matrix(side, -1, L, b) * psi_matrix(side, 1, L, b);
        rec.exact(s + ".psi_inverse", (id - Matrix::Identity(L, L)).topRows(L - 1).cwiseAbs().maxCoeff(), 0.0);

        const Schedule sched{{Step::Kind::bernoulli, 0.45}, {Step::Kind::geometric, 0.3}, {Step::Kind::bernoulli, 0.6}};
        const Config x0 = side == EdgeSide::right ? Config{1, 3} : Config{0, 2};
        auto probs = edge_path_probs(side, x0, sched, a, 24);
        auto counts = edge_empirical_paths(side, array_with_edge(side, x0), sched, a, replicas(100000, opt),
                                           seed_for(opt, side == EdgeSide::right ? 30 : 31));
        rec.above(s + ".trajectory_p_value", chi_square_gof(counts, probs).p_value, 0.001);
    }
}

void aztec_suite(const SuiteOptions& opt, std::vector<ResultRecord>& out) {
    Recorder rec(out, "aztec");
    rec.exact("covers.N2", double(enumerate_covers(2).size()), 8.0);
    rec.exact("covers.N3", double(enumerate_covers(3).size()), 64.0);

    AztecWeighting W(2);
    const RngStream wr{seed_for(opt, 40), 0};
    for (int x = 0; x < 2; ++x)
        for (int n = 1; n <= 2; ++n)
            for (DimerKind k : kDimerKinds) W.set(k, x, n, 0.3 + 2.7 * wr.uniform(std::uint64_t(x), std::uint64_t(n), std::uint64_t(k)));
    const std::uint64_t seed = seed_for(opt, 41);
    auto counts = tally<DimerCover>(replicas(100000, opt),
                                    [&](long r) { return shuffle_sample(W, RngStream{seed, std::uint64_t(r)}); });
    rec.above("shuffle.N2.p_value", chi_square_gof(counts, dimer_measure(W)).p_value, 0.001);

    const auto a = InhomogeneitySequence::periodic({0.25, 0.6, 0.8}, 40);
    rec.below("consistency.k6", consistency_check([&](int k) { return a_weighting(k, a); }, 6).max_deviation(), 1e-12);

    const auto b = InhomogeneitySequence::periodic({0.3, 0.65, 0.5}, 40);
    auto sp = shuffle_vs_pushblock(b, 2, 3, replicas(100000, opt), seed_for(opt, 42));
    for (std::size_t t = 0; t < sp.per_t.size(); ++t)
        rec.above("shuffle_vs_pushblock.t" + std::to_string(t + 1) + ".p_value", sp.per_t[t].p_value, 0.001);
}

void conditioned_suite(const SuiteOptions& opt, std::vector<ResultRecord>& out) {
    Recorder rec(out, "conditioned");
    const auto kA = InhomogeneitySequence::periodic({0.6, 1.3, 0.9}, 600);
    const auto kB = InhomogeneitySequence::periodic({0.3, 0.7, 0.55}, 600);
    const auto kG = InhomogeneitySequence::periodic({0.8, 1.1, 0.95}, 600);
    auto seq = [&](DriftKind k) -> const InhomogeneitySequence& {
        return k == DriftKind::pb ? kA : k == DriftKind::B ? kB : kG;
    };

    const RngStream rng{seed_for(opt, 50), 0};
    double gap = 0.0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        const DriftKind kind = DriftKind(trial % 3);
        const auto& a = seq(kind);
        const double u = rng.uniform(trial, 0);
        const double gamma = kind == DriftKind::pb ? 3.0 * u : kind == DriftKind::B ? 0.05 + 0.95 * u : 1.0 + u;
        const double t = kind == DriftKind::pb ? 0.2 + 1.5 * rng.uniform(trial, 1) : double(1 + trial % 4);
        const int x = int(rng.bits(trial, 2) % 13);
        const DriftedWalkSpec spec{kind, gamma, a};
        const std::size_t tail = drifted_tail(kind, gamma, t, a, 1e-13);
        for (int y = x; y < x + int(tail); ++y)
            gap = std::max(gap, std::abs(drifted_transition(spec, t, x, y) - drifted_transition_doob(spec, t, x, y)));
    }
    rec.below("doob_vs_direct", gap, 1e-10);

    struct Case {
        DriftKind kind;
        std::vector<double> gammas;
        double t;
    };
    for (const Case& c : {Case{DriftKind::pb, {0.2, 1.2, 2.3}, 0.8}, Case{DriftKind::B, {0.9, 0.35, 0.13}, 2.0},
                          Case{DriftKind::g, {1.0, 1.25, 1.5}, 2.0}}) {
        const auto& a = seq(c.kind);
        const int bound = drifted_semigroup_bound(c.kind, c.gammas, c.t, 8, a, 1e-12);
        DriftedSemigroup P(c.kind, c.gammas, c.t, a, bound);
        const Config x{0, 2, 3};
        auto base = P.row(x);
        double worst = 0.0;
        for (std::uint64_t k = 0; k < 20; ++k) {
            std::vector<double> g = c.gammas;
            // Fisher-Yates on counter draws
            for (int i = 2; i > 0; --i) std::swap(g[i], g[rng.bits(100 + k, std::uint64_t(i)) % (i + 1)]);
            DriftedSemigroup Q(c.kind, g, c.t, a, bound);
            for (auto& [y, p] : base) worst = std::max(worst, std::abs(Q(x, y) - p));
        }
        rec.below("permutation." + to_string(c.kind), worst, 1e-10);
    }

    const std::vector<double> g{0.2, 2.0};
    const Config x{0, 1};
    const double exact = noncollision_prob(DriftKind::pb, g, x, kA).value;
    auto est = mc_survival_pb2(g, x, 30.0, kA, replicas(100000, opt), seed_for(opt, 51));
    // exact value inside [p_hat - correction, p_hat] widened by 4 sigma
    rec.within("survival.pb2", est.p_hat, exact, est.sigma, 4.0);
    out.back().pass = est.contains(exact, 4.0);
    rec.below("survival.pb2.tail_correction", est.correction, 1e-4);
}

void ensembles_suite(const SuiteOptions&, std::vector<ResultRecord>& out) {
    Recorder rec(out, "ensembles");
    const auto a = InhomogeneitySequence::periodic({0.7, 1.2, 0.95, 1.1}, 200);
    auto spec = [&](int N, int M, std::vector<Symbol> steps) {
        EnsembleSpec s;
        s.N = N;
        s.M = M;
        s.steps = std::move(steps);
        s.a = a;
        return s;
    };
    const std::vector<EnsembleSpec> oracle{
        spec(1, 3, {Symbol::bernoulli(0.7), Symbol::geometric(0.5)}),
        spec(2, 3, {Symbol::geometric(0.4), Symbol::bernoulli(0.6), Symbol::geometric(0.3)}),
        spec(2, 3, {Symbol::geometric(0.3), Symbol::bernoulli(0.5), Symbol::geometric(0.6), Symbol::bernoulli(0.7)})};
    for (const EnsembleSpec& s : oracle) {
        FixedEndpointKernel K(s);
        PathLaw law = brute_force_marginals(s);
        std::vector<SpacetimePoint> pts;
        for (int r = 1; r < s.L(); ++r)
            for (int x = 0; x < s.extent(); ++x) pts.push_back({r, x});
        double gap = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            gap = std::max(gap, std::abs(K.correlation({pts[i]}) - law.one_point(pts[i])));
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                gap = std::max(gap, std::abs(K.correlation({pts[i], pts[j]}) - law.correlation({pts[i], pts[j]})));
        }
        rec.below("lgv.N" + std::to_string(s.N) + ".L" + std::to_string(s.L()), gap, 1e-9);
        rec.flag("lgv.N" + std::to_string(s.N) + ".L" + std::to_string(s.L()) + ".exact_mass",
                 law.exact && law.exact_mass() == 1);
    }

    EnsembleSpec lim = spec(4, 1, {Symbol::bernoulli(0.75), Symbol::bernoulli(0.3), Symbol::geometric(0.5)});
    lim.a = InhomogeneitySequence::periodic({0.85, 1.15, 1.0}, 400);
    auto ladder = ladder_deviation(lim, {4, 8, 16}, 5);
    for (std::size_t i = 0; i < ladder.Ns.size(); ++i)
        rec.report("limit.deviation.N" + std::to_string(ladder.Ns[i]), ladder.deviation[i]);
    rec.flag("limit.strictly_decreasing", ladder.strictly_decreasing());
}

void bessel_suite(const SuiteOptions&, std::vector<ResultRecord>& out) {
    Recorder rec(out, "bessel");
    const auto a = field(2000);
    auto dev = bessel_limit_check(a, 1.0, {200, 400}, 6);
    rec.below("deviation.N200", dev[0].value(), 0.05);
    rec.below("deviation.N400", dev[1].value(), dev[0].value());
    const double sigma = a.mean();
    std::vector<int> xs;
    for (int y = -6; y <= 6; ++y) xs.push_back(y);
    const Matrix J1 = bessel_kernel_matrix(sigma, xs, 256), J2 = bessel_kernel_matrix(sigma, xs, 512);
    rec.below("quadrature_self_consistency", (J1 - J2).cwiseAbs().maxCoeff(), 1e-10);
}

using SuiteFn = void (*)(const SuiteOptions&, std::vector<ResultRecord>&);

const std::map<std::string, SuiteFn>& registry() {
    static const std::map<std::string, SuiteFn> m{
        {"toeplitz", toeplitz_suite}, {"interlacing", interlacing_suite}, {"dynamics", dynamics_suite},
        {"correlations", correlations_suite}, {"edges", edges_suite}, {"aztec", aztec_suite},
        {"conditioned", conditioned_suite}, {"ensembles", ensembles_suite}, {"bessel", bessel_suite}};
    return m;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"toeplitz", "interlacing", "dynamics", "correlations", "edges",
                                                "aztec",    "conditioned", "ensembles", "bessel"};
    return names;
}

bool is_suite(const std::string& name) { return name == "all" || registry().count(name) > 0; }

std::vector<ResultRecord> run_suite(const std::string& name, const SuiteOptions& opt) {
    std::vector<ResultRecord> out;
    if (name == "all") {
        for (const auto& n : suite_names()) registry().at(n)(opt, out);
        return out;
    }
    auto it = registry().find(name);
    if (it == registry().end()) throw DomainError("unknown suite: " + name);
    it->second(opt, out);
    return out;
}

bool all_pass(const std::vector<ResultRecord>& records) { return first_failure(records).empty(); }

std::string first_failure(const std::vector<ResultRecord>& records) {
    for (const auto& r : records)
        if (r.pass && !*r.pass) return r.experiment + "/" + r.metric;
    return {};
}

std::string records_csv(const std::vector<ResultRecord>& records) {
    std::string s = "experiment,metric,value,stderr,tolerance,pass\n";
    for (const auto& r : records) {
        s += r.experiment + "," + r.metric + "," + fmt(r.value) + ",";
        s += (r.stderr_ ? fmt(*r.stderr_) : "") + ",";
        s += (r.tolerance ? fmt(*r.tolerance) : "") + ",";
        s += r.pass ? (*r.pass ? "true" : "false") : "";
        s += "\n";
    }
    return s;
}

std::string records_jsonl(const std::vector<ResultRecord>& records) {
    std::string s;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["experiment"] = r.experiment;
        j["metric"] = r.metric;
        j["value"] = r.value;
        j["stderr"] = r.stderr_ ? nlohmann::ordered_json(*r.stderr_) : nlohmann::ordered_json(nullptr);
        j["tolerance"] = r.tolerance ? nlohmann::ordered_json(*r.tolerance) : nlohmann::ordered_json(nullptr);
        j["pass"] = r.pass ? nlohmann::ordered_json(*r.pass) : nlohmann::ordered_json(nullptr);
        j["wall_seconds"] = r.wall_seconds;
        s += j.dump() + "\n";
    }
    return s;
}

}  // namespace inhomog
