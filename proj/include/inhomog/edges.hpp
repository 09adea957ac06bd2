#pragma once

#include <map>
#include <vector>

#include "inhomog/dynamics.hpp"

namespace inhomog {

enum class EdgeSide { right, left };

// psi_r(x, y) = 1_{x<=y} / a_y, psi_l(x, y) = 1_{y<x} / a_y; negative powers use
// psi_r^{-1}(x, y) = a_x (1_{x=y} - 1_{x+1=y}), psi_l^{-1}(x, y) = a_x (1_{x+1=y} - 1_{x=y}).
// The truncation to [0, L) is exact for every power: each entry only involves
// intermediate sites between x and y.
Matrix psi_matrix(EdgeSide side, int n, std::size_t L, const InhomogeneitySequence& a);
double psi_power(EdgeSide side, int n, int x, int y, const InhomogeneitySequence& a);

// Transition kernel of the right edge (X_1^{(1)}, ..., X_N^{(N)}) or of the left edge
// (X_1^{(N)}, ..., X_1^{(1)}) from a fixed state x, for any target y with entries < bound.
class EdgeKernel {
public:
    EdgeKernel(EdgeSide side, const Symbol& f, const Config& x, const InhomogeneitySequence& a, int bound);
    double operator()(const Config& y) const;
    int bound() const { return bound_; }

private:
    EdgeSide side_;
    int N_;
    int bound_;
    // rows_[i][j][y] = (psi^{-k_i} T psi^{m_j})(x_i, y)
    std::vector<std::vector<std::vector<double>>> rows_;
};

double edge_kernel_right(const Symbol& f, const Config& x, const Config& y, const InhomogeneitySequence& a);
double edge_kernel_left(const Symbol& f, const Config& x, const Config& y, const InhomogeneitySequence& a);

// All targets with entries < bound (strict chamber on the right, weak on the left).
std::map<Config, double> edge_kernel_row(EdgeSide side, const Symbol& f, const Config& x,
                                         const InhomogeneitySequence& a, int bound);

// Signed weight of the full array z (z[n-1] = level n) under the determinantal
// measure whose edge marginal is the edge kernel from x.
double edge_measure_weight(EdgeSide side, const Symbol& f, const Config& x, const std::vector<Config>& z,
                           const InhomogeneitySequence& a);

// Edge state of an array in the kernel's coordinate order.
Config edge_state(EdgeSide side, const ArrayState& s);

// Any array whose edge is the given state (remaining particles packed against it).
ArrayState array_with_edge(EdgeSide side, const Config& edge);

using EdgePath = std::vector<Config>;

// Law of the edge after the schedule, from full-array simulation.
std::map<Config, long> edge_empirical_law(EdgeSide side, const ArrayState& start, const Schedule& sched,
                                          const InhomogeneitySequence& a, long replicas, std::uint64_t seed);
// Same, recording the edge after every step.
std::map<EdgePath, long> edge_empirical_paths(EdgeSide side, const ArrayState& start, const Schedule& sched,
                                              const InhomogeneitySequence& a, long replicas, std::uint64_t seed);
// Path probabilities as products of one-step edge kernels, over paths with entries < bound.
std::map<EdgePath, double> edge_path_probs(EdgeSide side, const Config& x, const Schedule& sched,
                                           const InhomogeneitySequence& a, int bound);

}  // namespace inhomog
