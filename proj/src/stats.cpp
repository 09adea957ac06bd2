#include "inhomog/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

namespace inhomog {

double chi_square_sf(double statistic, int dof) {
    if (dof <= 0) return 1.0;
    if (!std::isfinite(statistic)) return 0.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probs,
                          double min_expected) {
    double n = 0.0;
    for (double o : observed) n += o;
    TestResult r;
    if (n == 0.0) return r;
    std::vector<double> obs, expct;
    double pool_o = 0.0, pool_e = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        double e = n * probs[i];
        if (e <= 0.0 && observed[i] > 0.0) {
            // an outcome of probability zero was observed
            r.statistic = std::numeric_limits<double>::infinity();
            r.dof = int(observed.size()) - 1;
            r.p_value = 0.0;
            return r;
        }
        if (e < min_expected) {
            pool_o += observed[i];
            pool_e += e;
        } else {
            obs.push_back(observed[i]);
            expct.push_back(e);
        }
    }
    if (pool_e > 0.0) {
        if (pool_e >= min_expected || obs.empty()) {
            obs.push_back(pool_o);
            expct.push_back(pool_e);
        } else {
            std::size_t k = 0;
            for (std::size_t i = 1; i < expct.size(); ++i)
                if (expct[i] < expct[k]) k = i;
            obs[k] += pool_o;
            expct[k] += pool_e;
        }
    }
    for (std::size_t i = 0; i < obs.size(); ++i) {
        double d = obs[i] - expct[i];
        r.statistic += d * d / expct[i];
    }
    r.dof = int(obs.size()) - 1;
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

TestResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                 double min_expected) {
    double na = 0.0, nb = 0.0;
    for (double v : a) na += v;
    for (double v : b) nb += v;
    TestResult r;
    if (na == 0.0 || nb == 0.0) return r;
    const double n = na + nb, frac = std::min(na, nb) / n;
    std::vector<double> ca, cb;
    double pa = 0.0, pb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] + b[i]) * frac < min_expected) {
            pa += a[i];
            pb += b[i];
        } else {
            ca.push_back(a[i]);
            cb.push_back(b[i]);
        }
    }
    if (pa + pb > 0.0) {
        if ((pa + pb) * frac >= min_expected || ca.empty()) {
            ca.push_back(pa);
            cb.push_back(pb);
        } else {
            std::size_t k = 0;
            for (std::size_t i = 1; i < ca.size(); ++i)
                if (ca[i] + cb[i] < ca[k] + cb[k]) k = i;
            ca[k] += pa;
            cb[k] += pb;
        }
    }
    for (std::size_t i = 0; i < ca.size(); ++i) {
        double col = ca[i] + cb[i];
        double ea = col * na / n, eb = col * nb / n;
        r.statistic += (ca[i] - ea) * (ca[i] - ea) / ea + (cb[i] - eb) * (cb[i] - eb) / eb;
    }
    r.dof = int(ca.size()) - 1;
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

MeanEstimate binomial_estimate(long hits, long trials) {
    MeanEstimate m;
    if (trials <= 0) return m;
    m.mean = double(hits) / double(trials);
    m.stderr_ = std::sqrt(m.mean * (1.0 - m.mean) / double(trials));
    return m;
}

}  // namespace inhomog
