#pragma once

#include <vector>

#include "inhomog/dynamics.hpp"
#include "inhomog/quadrature.hpp"

namespace inhomog {

struct LevelPoint {
    int n;  // level, from 1
    int x;
};

// `t` counts completed schedule steps.
struct TimePoint {
    int t;
    int x;
};

struct KernelContours {
    ContourSpec outer;  // encloses 0 and [inf a, sup a], excludes every -1/beta
    ContourSpec inner;  // encloses 0, inside `outer`, excludes every 1/alpha
};

// `outer_symbol` supplies the betas to exclude, `inner_symbol` the alphas.
KernelContours kernel_contours(const InhomogeneitySequence& a, const Symbol& outer_symbol,
                               const Symbol& inner_symbol, double nesting = 0.6);

// Full-array kernel after the dynamics with symbol f, from the packed start.
double kernel_array(const Symbol& f, LevelPoint p1, LevelPoint p2, const InhomogeneitySequence& a,
                    double nesting = 0.6);
// K(i, j) = kernel_array(f, pts[i], pts[j]) on shared nodes.
Matrix kernel_array_matrix(const Symbol& f, const std::vector<LevelPoint>& pts, const InhomogeneitySequence& a,
                           double nesting = 0.6);

// Space-time kernel of level N along a schedule.
double kernel_level(int N, const Schedule& sched, TimePoint q1, TimePoint q2, const InhomogeneitySequence& a,
                    double nesting = 0.6);
Matrix kernel_level_matrix(int N, const Schedule& sched, const std::vector<TimePoint>& pts,
                           const InhomogeneitySequence& a, double nesting = 0.6);

double correlation_det(const Matrix& K);

// Discrete Bessel kernel J_sigma(x, y); `points` = 0 picks the node count adaptively.
double bessel_kernel(double sigma, int x, int y, int points = 0);
// J(i, j) = J_sigma(xs[i], xs[j])
Matrix bessel_kernel_matrix(double sigma, const std::vector<int>& xs, int points = 0);

// Finite-N kernel of {X^{(N)}(zeta/N) - N} with the gauge factor
// (N/zeta)^{y2-y1} prod a_k ratio removed, on the sites ys.
Matrix bessel_finite_kernel(const InhomogeneitySequence& a, double zeta, int N, const std::vector<int>& ys);

struct BesselDeviation {
    int N;
    double diagonal;  // max |K_N(y, y) - J(y, y)|
    double minors;    // max over 2x2 principal minors
    double value() const { return std::max(diagonal, minors); }
};

// Sites |y| <= m, sigma = zeta * mean of the stored prefix of a.
std::vector<BesselDeviation> bessel_limit_check(const InhomogeneitySequence& a, double zeta,
                                                const std::vector<int>& N_list, int m);

// Monte Carlo frequencies of "every point of the set is occupied", replica r on stream r.
std::vector<MeanEstimate> mc_correlation(const std::vector<std::vector<TimePoint>>& point_sets,
                                         const Schedule& sched, int N, const InhomogeneitySequence& a,
                                         long replicas, std::uint64_t seed);
std::vector<MeanEstimate> mc_correlation_array(const std::vector<std::vector<LevelPoint>>& point_sets,
                                               const Schedule& sched, const InhomogeneitySequence& a,
                                               long replicas, std::uint64_t seed);

}  // namespace inhomog
