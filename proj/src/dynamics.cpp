#include "inhomog/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inhomog/parallel.hpp"

namespace inhomog {

namespace {

constexpr int kNoCap = std::numeric_limits<int>::max();

std::uint64_t particle_key(int n, int i) { return (std::uint64_t(n) << 32) | std::uint64_t(i); }

// Largest m with u < prod_{k<m} q(start + k), stopped at `cap`.
template <class Q>
int geometric_landing(int start, int cap, double u, Q&& q) {
    int pos = start;
    double surv = 1.0;
    while (pos < cap) {
        surv *= q(pos);
        if (u < surv)
            ++pos;
        else
            break;
    }
    return pos;
}

// Moves the cascade of particles above-right of (n, i) (1-indexed) after it landed on x.
void push_cascade(std::vector<Config>& X, int n, int i, std::vector<std::vector<char>>* pushed,
                  std::vector<std::pair<int, int>>* moved) {
    int m = n, j = i, pos = X[n - 1][i - 1];
    while (m < int(X.size()) && X[m][j] == pos) {
        X[m][j] = pos + 1;
        if (pushed) (*pushed)[m][j] = 1;
        if (moved) moved->emplace_back(m + 1, j + 1);
        ++m;
        ++j;
        ++pos;
    }
}

}  // namespace

ArrayState packed_array(int N) {
    ArrayState s;
    for (int n = 1; n <= N; ++n) s.levels.push_back(packed(n));
    return s;
}

bool valid_array(const ArrayState& s) {
    for (int n = 0; n < s.depth(); ++n) {
        if (int(s.levels[n].size()) != n + 1 || !is_weyl(s.levels[n])) return false;
        if (n > 0 && !interlaces(s.levels[n - 1], s.levels[n])) return false;
    }
    return true;
}

Symbol step_symbol(const Step& s) {
    switch (s.kind) {
        case Step::Kind::bernoulli: return Symbol::bernoulli(s.param);
        case Step::Kind::geometric: return Symbol::geometric(s.param);
        case Step::Kind::purebirth: return Symbol::purebirth(s.param);
    }
    return Symbol::identity();
}

Symbol schedule_symbol(const Schedule& s, std::size_t from, std::size_t to) {
    Symbol f = Symbol::identity();
    for (std::size_t k = from; k < to && k < s.size(); ++k) f = f * step_symbol(s[k]);
    return f;
}

void validate_schedule(const Schedule& s, const InhomogeneitySequence& a) {
    for (const Step& st : s) {
        if (st.param < 0.0 || !std::isfinite(st.param)) throw DomainError("negative or non-finite step parameter");
        if (st.kind == Step::Kind::bernoulli && st.param * a.sup() > 1.0 + 1e-15)
            throw DomainError("Bernoulli alpha exceeds 1/sup(a)");
    }
}

Environment bernoulli_env(double alpha, const InhomogeneitySequence& a) {
    return {[alpha, &a](int x, int) { return alpha * a[x]; }};
}

Environment geometric_env(double beta, const InhomogeneitySequence& a) {
    return {[beta, &a](int x, int) { return beta * a[x] / (1.0 + beta * a[x]); }};
}

Environment purebirth_env(const InhomogeneitySequence& a) {
    return {[&a](int x, int) { return a[x]; }};
}

void validate_env(const Environment& env, EnvKind kind, int sites, int levels) {
    double lo = INFINITY, hi = 0.0;
    for (int x = 0; x < sites; ++x)
        for (int y = 0; y < levels; ++y) {
            double v = env.theta(x, y);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(lo > 0.0)) throw DomainError("environment must be bounded away from 0");
    if (kind == EnvKind::pb ? !std::isfinite(hi) : !(hi < 1.0))
        throw DomainError("environment exceeds its upper bound");
}

void step_env(ArrayState& s, const Environment& env, EnvKind kind, const RngStream& rng, std::uint64_t step) {
    auto& X = s.levels;
    const int N = s.depth();
    if (kind == EnvKind::B) {
        std::vector<std::vector<char>> pushed(N);
        for (int n = 0; n < N; ++n) pushed[n].assign(n + 1, 0);
        for (int n = 1; n <= N; ++n)
            for (int i = 1; i <= n; ++i) {
                if (pushed[n - 1][i - 1]) continue;
                int x = X[n - 1][i - 1];
                if (i <= n - 1 && X[n - 2][i - 1] == x) continue;  // blocked
                if (rng.uniform(kStepTag, step, n, i) < env.theta(x, n - 1)) {
                    X[n - 1][i - 1] = x + 1;
                    push_cascade(X, n, i, &pushed, nullptr);
                }
            }
    } else if (kind == EnvKind::g) {
        const std::vector<Config> before = X;
        for (int n = 1; n <= N; ++n)
            for (int i = 1; i <= n; ++i) {
                int start = X[n - 1][i - 1];
                if (i >= 2) start = std::max(start, X[n - 2][i - 2] + 1);  // pushed to x'+1
                int cap = i <= n - 1 ? before[n - 2][i - 1] : kNoCap;     // blocked by pre-step position
                double u = rng.uniform(kStepTag, step, n, i);
                X[n - 1][i - 1] = geometric_landing(start, cap, u, [&](int k) { return env.theta(k, n - 1); });
            }
    } else {
        throw DomainError("step_env: continuous-time environment needs run_env_purebirth");
    }
    s.clock += 1.0;
}

void run_env_purebirth(ArrayState& s, const Environment& env, double duration, const RngStream& rng,
                       std::uint64_t segment) {
    if (duration < 0.0) throw DomainError("negative duration");
    auto& X = s.levels;
    const int N = s.depth();
    const double t0 = s.clock, t_end = s.clock + duration;
    // Each particle runs on its own unit-rate clock, time-changed by its current
    // rate; rings of lower levels never depend on higher levels.
    std::vector<std::vector<double>> next(N);
    std::vector<std::vector<std::uint64_t>> rings(N);
    auto budget = [&](int n, int i) {
        return rng.exponential(kClockTag, segment, particle_key(n, i), rings[n - 1][i - 1]++);
    };
    for (int n = 1; n <= N; ++n) {
        next[n - 1].resize(n);
        rings[n - 1].assign(n, 0);
        for (int i = 1; i <= n; ++i)
            next[n - 1][i - 1] = t0 + budget(n, i) / env.theta(X[n - 1][i - 1], n - 1);
    }
    std::vector<std::pair<int, int>> moved;
    while (true) {
        int bn = 0, bi = 0;
        double bt = INFINITY;
        for (int n = 1; n <= N; ++n)
            for (int i = 1; i <= n; ++i)
                if (next[n - 1][i - 1] < bt) {
                    bt = next[n - 1][i - 1];
                    bn = n;
                    bi = i;
                }
        if (!(bt <= t_end)) break;
        int x = X[bn - 1][bi - 1];
        bool blocked = bi <= bn - 1 && X[bn - 2][bi - 1] == x;
        if (!blocked) {
            X[bn - 1][bi - 1] = x + 1;
            moved.clear();
            push_cascade(X, bn, bi, nullptr, &moved);
            for (auto [m, j] : moved) {
                double old_rate = env.theta(X[m - 1][j - 1] - 1, m - 1);
                double rest = (next[m - 1][j - 1] - bt) * old_rate;
                next[m - 1][j - 1] = bt + rest / env.theta(X[m - 1][j - 1], m - 1);
            }
        }
        next[bn - 1][bi - 1] = bt + budget(bn, bi) / env.theta(X[bn - 1][bi - 1], bn - 1);
    }
    s.clock = t_end;
}

void step_bernoulli(ArrayState& s, double alpha, const InhomogeneitySequence& a, const RngStream& rng,
                    std::uint64_t step) {
    if (alpha < 0.0 || alpha * a.sup() > 1.0 + 1e-15) throw DomainError("alpha outside [0, 1/sup(a)]");
    step_env(s, bernoulli_env(alpha, a), EnvKind::B, rng, step);
}

void step_geometric(ArrayState& s, double beta, const InhomogeneitySequence& a, const RngStream& rng,
                    std::uint64_t step) {
    if (beta < 0.0) throw DomainError("negative beta");
    step_env(s, geometric_env(beta, a), EnvKind::g, rng, step);
}

void run_purebirth(ArrayState& s, double duration, const InhomogeneitySequence& a, const RngStream& rng,
                   std::uint64_t segment) {
    run_env_purebirth(s, purebirth_env(a), duration, rng, segment);
}

void step_recursive(ArrayState& s, Step::Kind kind, double param, const InhomogeneitySequence& a,
                    const RngStream& rng, std::uint64_t step) {
    const int N = s.depth();
    const std::vector<Config> old = s.levels;
    std::vector<Config> nw = old;
    constexpr int inf = std::numeric_limits<int>::max(), ninf = std::numeric_limits<int>::min();
    for (int n = 1; n <= N; ++n)
        for (int i = 1; i <= n; ++i) {
            const int xt = old[n - 1][i - 1];
            const double u = rng.uniform(kStepTag, step, n, i);
            const int left_new = (n >= 2 && i >= 2) ? nw[n - 2][i - 2] + 1 : ninf;
            if (kind == Step::Kind::bernoulli) {
                int b = u < param * a[xt] ? 1 : 0;
                int upper = (n >= 2 && i <= n - 1) ? nw[n - 2][i - 1] : inf;
                nw[n - 1][i - 1] = std::min(upper, std::max(xt + b, left_new));
            } else if (kind == Step::Kind::geometric) {
                int start = std::max(xt, left_new);
                int g = 0;
                double surv = 1.0;
                while (true) {
                    int k = start + g;
                    surv *= param * a[k] / (1.0 + param * a[k]);
                    if (u < surv)
                        ++g;
                    else
                        break;
                    if (n >= 2 && i <= n - 1 && start + g >= old[n - 2][i - 1]) break;
                }
                int upper = (n >= 2 && i <= n - 1) ? old[n - 2][i - 1] : inf;
                nw[n - 1][i - 1] = std::min(upper, start + g);
            } else {
                throw DomainError("step_recursive covers the discrete-time dynamics only");
            }
        }
    s.levels = std::move(nw);
    s.clock += 1.0;
}

void run_step(ArrayState& s, const Step& st, const InhomogeneitySequence& a, const RngStream& rng,
              std::uint64_t key) {
    switch (st.kind) {
        case Step::Kind::bernoulli: step_bernoulli(s, st.param, a, rng, key); break;
        case Step::Kind::geometric: step_geometric(s, st.param, a, rng, key); break;
        case Step::Kind::purebirth: run_purebirth(s, st.param, a, rng, key); break;
    }
}

void run_schedule(ArrayState& s, const Schedule& sched, const InhomogeneitySequence& a, const RngStream& rng) {
    for (std::size_t k = 0; k < sched.size(); ++k) run_step(s, sched[k], a, rng, k);
}

std::vector<int> left_edge(const ArrayState& s) {
    std::vector<int> e;
    for (const Config& l : s.levels) e.push_back(l.front());
    return e;
}

std::vector<int> right_edge(const ArrayState& s) {
    std::vector<int> e;
    for (const Config& l : s.levels) e.push_back(l.back());
    return e;
}

void left_edge_step(std::vector<int>& edge, Step::Kind kind, double param, const InhomogeneitySequence& a,
                    const RngStream& rng, std::uint64_t step) {
    const std::vector<int> old = edge;
    for (int n = 1; n <= int(edge.size()); ++n) {
        const int xt = old[n - 1];
        const double u = rng.uniform(kStepTag, step, n, 1);
        if (kind == Step::Kind::bernoulli) {
            int moved = xt + (u < param * a[xt] ? 1 : 0);
            edge[n - 1] = n >= 2 ? std::min(edge[n - 2], moved) : moved;
        } else if (kind == Step::Kind::geometric) {
            int cap = n >= 2 ? old[n - 2] : kNoCap;
            edge[n - 1] = geometric_landing(xt, cap, u, [&](int k) { return param * a[k] / (1.0 + param * a[k]); });
        } else {
            throw DomainError("edge recursions cover the discrete-time dynamics only");
        }
    }
}

void right_edge_step(std::vector<int>& edge, Step::Kind kind, double param, const InhomogeneitySequence& a,
                     const RngStream& rng, std::uint64_t step) {
    for (int n = 1; n <= int(edge.size()); ++n) {
        const int xt = edge[n - 1];
        const double u = rng.uniform(kStepTag, step, n, n);
        if (kind == Step::Kind::bernoulli) {
            int moved = xt + (u < param * a[xt] ? 1 : 0);
            edge[n - 1] = n >= 2 ? std::max(edge[n - 2] + 1, moved) : moved;
        } else if (kind == Step::Kind::geometric) {
            int start = n >= 2 ? std::max(xt, edge[n - 2] + 1) : xt;
            edge[n - 1] =
                geometric_landing(start, kNoCap, u, [&](int k) { return param * a[k] / (1.0 + param * a[k]); });
        } else {
            throw DomainError("edge recursions cover the discrete-time dynamics only");
        }
    }
}

int pinned_columns(const ArrayState& s) {
    if (s.levels.empty()) return 0;
    const Config& last = s.levels.back();
    int k = 0;
    while (k < int(last.size()) && last[k] == k) ++k;
    return k;
}

ArrayState hgt_map(const ArrayState& s, int levels) {
    if (levels > pinned_columns(s))
        throw TruncationError("hgt_map: column " + std::to_string(pinned_columns(s)) +
                              " is not pinned within the stored levels");
    const int D = s.depth();
    ArrayState out;
    out.clock = s.clock;
    for (int j = 0; j < levels; ++j) {
        Config lvl(j + 1);
        for (int i = 0; i <= j; ++i) {
            int h = 0;
            for (int n = i; n < D; ++n)
                if (s.levels[n][i] > j) ++h;
            lvl[i] = h + i;
        }
        out.levels.push_back(std::move(lvl));
    }
    return out;
}

ArrayState hgt_map(const ArrayState& s) { return hgt_map(s, pinned_columns(s)); }

double DualityReport::min_p() const {
    double p = 1.0;
    for (const auto& r : per_level) p = std::min(p, r.p_value);
    return p;
}

DualityReport duality_test(const Environment& env, EnvKind kind, double horizon, int levels, int depth,
                           long replicas, std::uint64_t seed) {
    Environment dual{[th = env.theta](int x, int y) { return th(y, x); }};
    EnvKind dual_kind = kind == EnvKind::pb ? EnvKind::pb : kind == EnvKind::B ? EnvKind::g : EnvKind::B;
    auto evolve = [&](ArrayState& s, const Environment& e, EnvKind k, const RngStream& r) {
        if (k == EnvKind::pb) {
            run_env_purebirth(s, e, horizon, r, 0);
        } else {
            for (long t = 0; t < long(horizon); ++t) step_env(s, e, k, r, std::uint64_t(t));
        }
    };
    using Hist = std::vector<std::map<Config, long>>;
    struct Partial {
        Hist orig, direct;
        long failures = 0;
    };
    auto parts = parallel_chunks<Partial>(replicas, [&](long lo, long hi) {
        Partial p;
        p.orig.resize(levels);
        p.direct.resize(levels);
        for (long r = lo; r < hi; ++r) {
            ArrayState a = packed_array(depth);
            evolve(a, env, kind, RngStream{seed, std::uint64_t(2 * r)});
            if (pinned_columns(a) < levels) {
                ++p.failures;
            } else {
                ArrayState img = hgt_map(a, levels);
                for (int j = 0; j < levels; ++j) ++p.orig[j][img.levels[j]];
            }
            ArrayState b = packed_array(levels);
            evolve(b, dual, dual_kind, RngStream{seed, std::uint64_t(2 * r + 1)});
            for (int j = 0; j < levels; ++j) ++p.direct[j][b.levels[j]];
        }
        return p;
    });
    DualityReport rep;
    Hist orig(levels), direct(levels);
    for (auto& p : parts) {
        rep.truncation_failures += p.failures;
        for (int j = 0; j < levels; ++j) {
            for (auto& [k, c] : p.orig[j]) orig[j][k] += c;
            for (auto& [k, c] : p.direct[j]) direct[j][k] += c;
        }
    }
    for (int j = 0; j < levels; ++j) rep.per_level.push_back(chi_square_two_sample(orig[j], direct[j]));
    return rep;
}

}  // namespace inhomog
