#include "inhomog/conditioned.hpp"

#include <algorithm>
#include <cmath>

#include "inhomog/parallel.hpp"

namespace inhomog {

namespace {

void check_site(int x, const char* what) {
    if (x < 0) throw DomainError(std::string(what) + " must be non-negative");
}

void check_gammas(DriftKind kind, const std::vector<double>& gammas, const InhomogeneitySequence& a) {
    if (gammas.empty()) throw DomainError("need at least one drift");
    for (double g : gammas) validate_gamma(kind, g);
    if (kind == DriftKind::B && a.sup() > 1.0 + 1e-15)
        throw DomainError("Bernoulli drift needs sup(a) <= 1");
}

void check_weyl(const Config& x, std::size_t N, const char* what) {
    if (x.size() != N) throw DomainError(std::string(what) + " has the wrong length");
    if (!is_weyl(x) || x.front() < 0) throw DomainError(std::string(what) + " is not in the Weyl chamber");
}

// h_g(x) = p_x(z_g)
double h_point(DriftKind kind, double gamma) {
    switch (kind) {
        case DriftKind::pb: return -gamma;
        case DriftKind::B: return 1.0 - 1.0 / gamma;
        case DriftKind::g: return 1.0 / gamma - 1.0;
    }
    return 0.0;
}

// log h_g(x) = sum_{k<x} log(1 - z/a_k); every factor is positive in the allowed ranges
double log_h(DriftKind kind, double gamma, int x, const InhomogeneitySequence& a) {
    const double z = h_point(kind, gamma);
    double s = 0.0;
    for (int k = 0; k < x; ++k) s += std::log1p(-z / a[k]);
    return s;
}

double log_c(DriftKind kind, double gamma, double t) {
    switch (kind) {
        case DriftKind::pb: return t * gamma;
        case DriftKind::B: return -t * std::log(gamma);
        case DriftKind::g: return t * std::log(gamma);
    }
    return 0.0;
}

// 1 / (level jump weight): v_g(x)
double v_weight(DriftKind kind, double gamma, int x, const InhomogeneitySequence& a) {
    switch (kind) {
        case DriftKind::pb: return 1.0 / (a[x] + gamma);
        case DriftKind::B: return 1.0 / (gamma * a[x] + 1.0 - gamma);
        case DriftKind::g: return 1.0 / (gamma * a[x] - 1.0 + gamma);
    }
    return 0.0;
}

double pair_constant(DriftKind kind, double g2, double g1) {
    switch (kind) {
        case DriftKind::pb: return 1.0 / (g2 - g1);
        case DriftKind::B: return g1 / (g1 - g2);
        case DriftKind::g: return g1 / (g2 - g1);
    }
    return 0.0;
}

// One-step drifted walk probabilities written straight from the definition.
double bernoulli_jump(double gamma, int x, const InhomogeneitySequence& a) { return gamma * a[x] + 1.0 - gamma; }
double geometric_onward(double gamma, int k, const InhomogeneitySequence& a) {
    double w = gamma * (1.0 + a[k]);
    return (w - 1.0) / w;
}

bool is_integer_time(double t) { return t >= 0.0 && std::floor(t) == t && t <= 1e6; }

}  // namespace

InhomogeneitySequence shifted_sequence(DriftKind kind, double gamma, const InhomogeneitySequence& a) {
    validate_gamma(kind, gamma);
    auto f = [&](double v) {
        switch (kind) {
            case DriftKind::pb: return v + gamma;
            case DriftKind::B: return gamma * v + 1.0 - gamma;
            case DriftKind::g: return gamma * v + gamma - 1.0;
        }
        return v;
    };
    std::vector<double> vals(a.values());
    for (double& v : vals) v = f(v);
    return InhomogeneitySequence(std::move(vals), f(a.inf()), f(a.sup()));
}

Symbol base_symbol(DriftKind kind, double t) {
    if (kind == DriftKind::pb) {
        if (!(t >= 0.0)) throw DomainError("negative time");
        return Symbol::purebirth(t);
    }
    if (!is_integer_time(t)) throw DomainError("discrete-time kinds need a non-negative integer time");
    Symbol f;
    std::size_t n = std::size_t(t);
    if (kind == DriftKind::B)
        f.alphas.assign(n, 1.0);
    else
        f.betas.assign(n, 1.0);
    return f;
}

double drift_constant(DriftKind kind, double gamma, double t) {
    validate_gamma(kind, gamma);
    return std::exp(log_c(kind, gamma, t));
}

bool drift_hypotheses_hold(DriftKind kind, const InhomogeneitySequence& a) {
    if (kind == DriftKind::B) return a.sup() <= 1.0;
    if (kind == DriftKind::g) return a.sup() - a.inf() < 1.0;
    return true;
}

double drifted_transition(const DriftedWalkSpec& spec, double t, int x, int y) {
    check_gammas(spec.kind, {spec.gamma}, spec.a);
    check_site(x, "x");
    check_site(y, "y");
    Symbol f = base_symbol(spec.kind, t);
    if (y < x) return 0.0;
    InhomogeneitySequence b = shifted_sequence(spec.kind, spec.gamma, spec.a);
    if (spec.kind == DriftKind::pb) return t_purebirth(std::size_t(x), std::size_t(y), t, b);
    return t_matrix(f, std::size_t(y) + 1, b)(x, y);
}

double drifted_transition_doob(const DriftedWalkSpec& spec, double t, int x, int y) {
    check_gammas(spec.kind, {spec.gamma}, spec.a);
    check_site(x, "x");
    check_site(y, "y");
    Symbol f = base_symbol(spec.kind, t);
    if (y < x) return 0.0;
    double base = t_matrix(f, std::size_t(y) + 1, spec.a)(x, y);
    if (base == 0.0) return 0.0;
    double lr = log_h(spec.kind, spec.gamma, y, spec.a) - log_h(spec.kind, spec.gamma, x, spec.a) -
                log_c(spec.kind, spec.gamma, t);
    return std::exp(lr) * base;
}

std::size_t drifted_tail(DriftKind kind, double gamma, double t, const InhomogeneitySequence& a, double eps) {
    return tail_length(base_symbol(kind, t), shifted_sequence(kind, gamma, a), eps);
}

namespace {

// log h tables: lh[i][x] = log h_{g_i}(x) for x < size
std::vector<std::vector<double>> log_h_table(DriftKind kind, const std::vector<double>& gammas, int size,
                                             const InhomogeneitySequence& a) {
    std::vector<std::vector<double>> lh(gammas.size(), std::vector<double>(std::size_t(size), 0.0));
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        const double z = h_point(kind, gammas[i]);
        for (int x = 1; x < size; ++x) lh[i][x] = lh[i][x - 1] + std::log1p(-z / a[x - 1]);
    }
    return lh;
}

LogDet logdet_from(const std::vector<std::vector<double>>& lh, const Config& x) {
    const std::size_t N = lh.size();
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8> M(N, N);
    double scale = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        double m = -INFINITY;
        for (std::size_t i = 0; i < N; ++i) m = std::max(m, lh[i][x[j]]);
        scale += m;
        for (std::size_t i = 0; i < N; ++i) M(i, j) = std::exp(lh[i][x[j]] - m);
    }
    double d = N <= 8 ? M.determinant() : 0.0;
    LogDet out;
    if (d == 0.0 || !std::isfinite(d)) return out;
    out.sign = d > 0 ? 1 : -1;
    out.log_abs = std::log(std::abs(d)) + scale;
    return out;
}

}  // namespace

LogDet h_gamma_logdet(DriftKind kind, const std::vector<double>& gammas, const Config& x,
                      const InhomogeneitySequence& a) {
    const std::size_t N = gammas.size();
    if (x.size() != N) throw DomainError("configuration and drift vector differ in length");
    if (N > 8) throw DomainError("at most 8 particles");
    int top = 0;
    for (int v : x) top = std::max(top, v);
    return logdet_from(log_h_table(kind, gammas, top + 1, a), x);
}

DriftedSemigroup::DriftedSemigroup(DriftKind kind, std::vector<double> gammas, double t,
                                   const InhomogeneitySequence& a, int bound)
    : kind_(kind), gammas_(std::move(gammas)), a_(a), bound_(bound) {
    check_gammas(kind_, gammas_, a_);
    if (gammas_.size() > 8) throw DomainError("at most 8 particles");
    if (bound <= int(gammas_.size())) throw DomainError("bound too small for the number of particles");
    for (double g : gammas_) log_c_ += log_c(kind_, g, t);
    T_ = t_matrix(base_symbol(kind_, t), std::size_t(bound), a_);
    logh_ = log_h_table(kind_, gammas_, bound, a_);
}

double DriftedSemigroup::operator()(const Config& x, const Config& y) const {
    const std::size_t N = gammas_.size();
    check_weyl(x, N, "x");
    if (y.size() != N) throw DomainError("y has the wrong length");
    if (x.back() >= bound_ || y.back() >= bound_) throw DomainError("configuration outside the truncation");
    if (!is_weyl(y) || y.front() < 0) return 0.0;
    double km = km_det(T_, x, y);
    if (km == 0.0) return 0.0;
    LogDet hx = logdet_from(logh_, x);
    if (hx.sign == 0) throw DegenerateParameterError("h-determinant of the start is singular");
    LogDet hy = logdet_from(logh_, y);
    if (hy.sign == 0) return 0.0;
    return hx.sign * hy.sign * std::exp(hy.log_abs - hx.log_abs - log_c_) * km;
}

std::map<Config, double> DriftedSemigroup::row(const Config& x) const {
    const std::size_t N = gammas_.size();
    check_weyl(x, N, "x");
    LogDet hx = logdet_from(logh_, x);
    if (hx.sign == 0) throw DegenerateParameterError("h-determinant of the start is singular");
    std::map<Config, double> out;
    for (const Config& y : weyl_configs(int(N), bound_)) {
        if (y.front() < x.front()) continue;
        double km = km_det(T_, x, y);
        if (km == 0.0) continue;
        LogDet hy = logdet_from(logh_, y);
        if (hy.sign == 0) continue;
        out[y] = hx.sign * hy.sign * std::exp(hy.log_abs - hx.log_abs - log_c_) * km;
    }
    return out;
}

int drifted_semigroup_bound(DriftKind kind, const std::vector<double>& gammas, double t, int x_max,
                            const InhomogeneitySequence& a, double eps) {
    std::size_t tail = 0;
    for (double g : gammas) tail = std::max(tail, drifted_tail(kind, g, t, a, eps));
    return x_max + int(tail) + 2 * int(gammas.size()) + 1;
}

double drifted_semigroup(DriftKind kind, const std::vector<double>& gammas, double t, const Config& x,
                         const Config& y, const InhomogeneitySequence& a) {
    int top = std::max(x.empty() ? 0 : x.back(), y.empty() ? 0 : y.back());
    return DriftedSemigroup(kind, gammas, t, a, top + 1)(x, y);
}

bool ordering_conditions_hold(DriftKind kind, const std::vector<double>& gammas,
                              const InhomogeneitySequence& a) {
    const double lo = a.inf(), hi = a.sup();
    for (std::size_t i = 0; i + 1 < gammas.size(); ++i) {
        const double g1 = gammas[i], g2 = gammas[i + 1];
        bool ok = true;
        switch (kind) {
            case DriftKind::pb: ok = g2 - g1 > hi - lo; break;
            case DriftKind::B: ok = hi < 1.0 && g2 / g1 < (1.0 - hi) / (1.0 - lo); break;
            case DriftKind::g: ok = g2 / g1 > (1.0 + hi) / (1.0 + lo); break;
        }
        if (!ok) return false;
    }
    return true;
}

NonCollision noncollision_prob(DriftKind kind, const std::vector<double>& gammas, const Config& x,
                               const InhomogeneitySequence& a) {
    check_gammas(kind, gammas, a);
    check_weyl(x, gammas.size(), "x");
    LogDet d = h_gamma_logdet(kind, gammas, x, a);
    double diag = 0.0;
    for (std::size_t i = 0; i < gammas.size(); ++i) diag += log_h(kind, gammas[i], x[i], a);
    NonCollision out;
    out.value = d.sign == 0 ? 0.0 : d.sign * std::exp(d.log_abs - diag);
    out.conditions_ok = ordering_conditions_hold(kind, gammas, a) && out.value > 0.0 && out.value <= 1.0 + 1e-12;
    return out;
}

std::map<Config, double> killed_row(DriftKind kind, const std::vector<double>& gammas, double t,
                                    const Config& x, const InhomogeneitySequence& a, int bound) {
    check_gammas(kind, gammas, a);
    const int N = int(gammas.size());
    check_weyl(x, std::size_t(N), "x");
    if (x.back() >= bound) throw DomainError("start outside the truncation");
    std::map<Config, double> cur{{x, 1.0}};
    if (t == 0.0) return cur;

    if (kind == DriftKind::pb) {
        // uniformization of the product chain; a jump onto the next particle kills
        double lam = 0.0;
        for (double g : gammas) lam += a.sup() + g;
        const double mu = lam * t;
        if (mu > 600.0) throw DomainError("time too large for uniformization");
        std::map<Config, double> acc;
        double w = std::exp(-mu), cdf = 0.0;
        for (int k = 0;; ++k) {
            if (k > 0) w *= mu / k;
            for (auto& [c, p] : cur) acc[c] += w * p;
            cdf += w;
            if (k > mu && 1.0 - cdf < 1e-16) break;
            if (k > 100000) break;
            std::map<Config, double> next;
            for (auto& [c, p] : cur) {
                double stay = 1.0;
                for (int i = 0; i < N; ++i) {
                    double r = (a[c[i]] + gammas[i]) / lam;
                    stay -= r;
                    Config d = c;
                    ++d[i];
                    if (i + 1 < N && d[i] == c[i + 1]) continue;
                    if (d[i] >= bound) continue;
                    next[d] += p * r;
                }
                next[c] += p * stay;
            }
            cur.swap(next);
        }
        return acc;
    }

    if (!is_integer_time(t)) throw DomainError("discrete-time kinds need a non-negative integer time");
    for (int step = 0; step < int(t); ++step) {
        std::map<Config, double> next;
        for (auto& [c, p] : cur) {
            // geometric walker i must land below the old position of walker i + 1
            Config d(N);
            auto rec = [&](auto&& self, int i, double q) -> void {
                if (i == N) {
                    next[d] += q;
                    return;
                }
                const int hi = i + 1 < N ? c[i + 1] - 1 : bound - 1;
                const double g = gammas[i];
                if (kind == DriftKind::B) {
                    // simultaneous unit moves cannot cross, so only a tie kills
                    double up = bernoulli_jump(g, c[i], a);
                    d[i] = c[i];
                    bool free = i == 0 || d[i - 1] < c[i];
                    if (free && 1.0 - up > 0.0) self(self, i + 1, q * (1.0 - up));
                    if (c[i] + 1 < bound && up > 0.0) {
                        d[i] = c[i] + 1;
                        self(self, i + 1, q * up);
                    }
                } else {
                    double pass = 1.0;
                    for (int y = c[i]; y <= hi; ++y) {
                        d[i] = y;
                        self(self, i + 1, q * pass / (g * (1.0 + a[y])));
                        pass *= geometric_onward(g, y, a);
                    }
                }
            };
            rec(rec, 0, p);
        }
        cur.swap(next);
    }
    return cur;
}

DriftedPath simulate_drifted(DriftKind kind, const std::vector<double>& gammas, const Config& x, double t,
                             double horizon, const InhomogeneitySequence& a, const RngStream& rng) {
    const int N = int(gammas.size());
    if (horizon < t) throw DomainError("horizon before t");
    DriftedPath out;
    Config c = x;
    bool recorded = t == 0.0;
    if (recorded) out.at_t = c;

    if (kind == DriftKind::pb) {
        double now = 0.0;
        for (std::uint64_t ev = 0;; ++ev) {
            double total = 0.0;
            for (int i = 0; i < N; ++i) total += a[c[i]] + gammas[i];
            now += rng.exponential(kDriftTag, ev, 0) / total;
            if (!recorded && now > t) {
                out.at_t = c;
                recorded = true;
            }
            if (now > horizon) break;
            double u = rng.uniform(kDriftTag, ev, 1) * total;
            int i = 0;
            for (; i + 1 < N; ++i) {
                u -= a[c[i]] + gammas[i];
                if (u < 0.0) break;
            }
            ++c[i];
            if (i + 1 < N && c[i] == c[i + 1]) {
                out.survived = false;
                return out;
            }
        }
        out.at_end = c;
        return out;
    }

    if (!is_integer_time(t) || !is_integer_time(horizon))
        throw DomainError("discrete-time kinds need integer times");
    for (int step = 1; step <= int(horizon); ++step) {
        Config d = c;
        for (int i = 0; i < N; ++i) {
            const double g = gammas[i];
            if (kind == DriftKind::B) {
                if (rng.uniform(kDriftTag, std::uint64_t(step), std::uint64_t(i)) < bernoulli_jump(g, c[i], a)) ++d[i];
            } else {
                for (std::uint64_t j = 0; rng.uniform(kDriftTag, std::uint64_t(step), std::uint64_t(i), j) <
                                          geometric_onward(g, d[i], a);
                     ++j)
                    ++d[i];
            }
        }
        for (int i = 0; i + 1 < N; ++i)
            if (kind == DriftKind::B ? d[i] >= d[i + 1] : d[i] >= c[i + 1]) {
                out.survived = false;
                return out;
            }
        c = d;
        if (step == int(t)) out.at_t = c;
    }
    out.at_end = c;
    return out;
}

SurvivalEstimate mc_survival_pb2(const std::vector<double>& gammas, const Config& x, double horizon,
                                 const InhomogeneitySequence& a, long replicas, std::uint64_t seed) {
    check_gammas(DriftKind::pb, gammas, a);
    if (gammas.size() != 2) throw DomainError("survival estimate is for two walks");
    check_weyl(x, 2, "x");
    const double slow = a.sup() + gammas[0], fast = a.inf() + gammas[1];
    if (!(slow < fast)) throw DomainError("drifts do not separate the walks");
    const double ratio = slow / fast;
    struct Part {
        long survivors = 0;
        double corr = 0.0;
    };
    auto parts = parallel_chunks<Part>(replicas, [&](long lo, long hi) {
        Part p;
        for (long r = lo; r < hi; ++r) {
            DriftedPath path = simulate_drifted(DriftKind::pb, gammas, x, horizon, horizon, a,
                                                RngStream{seed, std::uint64_t(r)});
            if (!path.survived) continue;
            ++p.survivors;
            p.corr += std::pow(ratio, path.at_end[1] - path.at_end[0]);
        }
        return p;
    });
    SurvivalEstimate est;
    est.replicas = replicas;
    double corr = 0.0;
    for (auto& p : parts) {
        est.survivors += p.survivors;
        corr += p.corr;
    }
    est.p_hat = double(est.survivors) / double(replicas);
    est.correction = corr / double(replicas);
    est.sigma = std::sqrt(std::max(est.p_hat * (1.0 - est.p_hat), 1e-300) / double(replicas));
    return est;
}

double ConditionedReport::max_error() const {
    return std::max(std::abs(semigroup - ratio), std::abs(killed - killed_doob));
}

ConditionedReport conditioned_transition_check(DriftKind kind, const std::vector<double>& gammas, double t,
                                               const Config& x, const Config& y,
                                               const InhomogeneitySequence& a, long replicas,
                                               std::uint64_t seed, double horizon) {
    check_gammas(kind, gammas, a);
    const std::size_t N = gammas.size();
    check_weyl(x, N, "x");
    check_weyl(y, N, "y");
    ConditionedReport rep;
    const int bound = std::max(drifted_semigroup_bound(kind, gammas, t, x.back(), a), y.back() + 1);
    DriftedSemigroup P(kind, gammas, t, a, bound);
    rep.semigroup = P(x, y);

    auto killed = killed_row(kind, gammas, t, x, a, y.back() + 1);
    auto it = killed.find(y);
    rep.killed = it == killed.end() ? 0.0 : it->second;
    double nx = noncollision_prob(kind, gammas, x, a).value;
    double ny = noncollision_prob(kind, gammas, y, a).value;
    rep.ratio = ny / nx * rep.killed;

    Matrix T = t_matrix(base_symbol(kind, t), std::size_t(y.back()) + 1, a);
    double lg = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        lg += log_h(kind, gammas[i], y[i], a) - log_h(kind, gammas[i], x[i], a) - log_c(kind, gammas[i], t);
    rep.killed_doob = std::exp(lg) * km_det(T, x, y);

    if (replicas <= 0) return rep;
    auto parts = parallel_chunks<std::map<Config, long>>(replicas, [&](long lo, long hi) {
        std::map<Config, long> c;
        for (long r = lo; r < hi; ++r) {
            DriftedPath path = simulate_drifted(kind, gammas, x, t, horizon, a, RngStream{seed, std::uint64_t(r)});
            if (path.survived) ++c[path.at_t];
        }
        return c;
    });
    for (auto& p : parts)
        for (auto& [k, v] : p) {
            rep.counts[k] += v;
            rep.survivors += v;
        }
    rep.exact = P.row(x);
    rep.chi2 = chi_square_gof(rep.counts, rep.exact);
    const double n = double(rep.survivors);
    for (auto& [c, p] : rep.exact) {
        if (p * n < 5.0) continue;
        auto ct = rep.counts.find(c);
        double k = ct == rep.counts.end() ? 0.0 : double(ct->second);
        rep.max_z = std::max(rep.max_z, std::abs(k - n * p) / std::sqrt(n * p * (1.0 - p)));
    }
    return rep;
}

double level_eigenfunction_recursive(DriftKind kind, const std::vector<double>& gammas, const Config& x,
                                     const InhomogeneitySequence& a) {
    check_gammas(kind, gammas, a);
    const std::size_t N = gammas.size();
    check_weyl(x, N, "x");
    if (N == 1) return 1.0;
    std::vector<double> lower(gammas.begin(), gammas.end() - 1);
    const double gN = gammas[N - 1], gM = gammas[N - 2];
    double sum = 0.0;
    for (const Config& c : children(x)) {
        double w = 1.0;
        for (int v : c)
            w *= v_weight(kind, gN, v, a) * std::exp(log_h(kind, gM, v, a) - log_h(kind, gN, v, a));
        sum += w * level_eigenfunction_recursive(kind, lower, c, a);
    }
    return sum;
}

double level_eigenfunction_det(DriftKind kind, const std::vector<double>& gammas, const Config& x,
                               const InhomogeneitySequence& a) {
    check_gammas(kind, gammas, a);
    const std::size_t N = gammas.size();
    check_weyl(x, N, "x");
    double pref = 1.0;
    for (std::size_t j = 1; j < N; ++j)
        for (std::size_t i = 0; i < j; ++i) pref *= pair_constant(kind, gammas[j], gammas[i]);
    LogDet d = h_gamma_logdet(kind, gammas, x, a);
    if (d.sign == 0) return 0.0;
    double lg = d.log_abs;
    for (int v : x) lg -= log_h(kind, gammas[N - 1], v, a);
    return pref * d.sign * std::exp(lg);
}

}  // namespace inhomog
