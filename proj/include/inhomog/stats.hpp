#pragma once

#include <functional>
#include <map>
#include <vector>

namespace inhomog {

struct TestResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Goodness of fit against exact probabilities. Cells with expected count below
// `min_expected` are pooled into one cell (together with any unlisted mass).
TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probs,
                          double min_expected = 5.0);

template <class Key>
TestResult chi_square_gof(const std::map<Key, long>& counts, const std::map<Key, double>& probs,
                          double min_expected = 5.0) {
    std::vector<double> obs, p;
    long total = 0;
    for (auto& [k, c] : counts) total += c;
    long matched = 0;
    for (auto& [k, q] : probs) {
        auto it = counts.find(k);
        long c = it == counts.end() ? 0 : it->second;
        matched += c;
        obs.push_back(double(c));
        p.push_back(q);
    }
    // samples landing on keys of zero listed probability go to the pooled cell
    double leftover_p = 1.0;
    for (double q : p) leftover_p -= q;
    obs.push_back(double(total - matched));
    p.push_back(std::max(0.0, leftover_p));
    return chi_square_gof(obs, p, min_expected);
}

// Two-sample homogeneity test on a 2 x k contingency table.
TestResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                 double min_expected = 5.0);

template <class Key>
TestResult chi_square_two_sample(const std::map<Key, long>& a, const std::map<Key, long>& b,
                                 double min_expected = 5.0) {
    std::map<Key, std::pair<double, double>> joint;
    for (auto& [k, c] : a) joint[k].first += double(c);
    for (auto& [k, c] : b) joint[k].second += double(c);
    std::vector<double> va, vb;
    for (auto& [k, pr] : joint) {
        va.push_back(pr.first);
        vb.push_back(pr.second);
    }
    return chi_square_two_sample(va, vb, min_expected);
}

double chi_square_sf(double statistic, int dof);

struct MeanEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    double z(double exact) const { return stderr_ > 0 ? (mean - exact) / stderr_ : (mean == exact ? 0.0 : 1e300); }
};

MeanEstimate binomial_estimate(long hits, long trials);

}  // namespace inhomog
