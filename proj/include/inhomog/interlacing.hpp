#pragma once

#include <vector>

#include "inhomog/toeplitz.hpp"

namespace inhomog {

// Coordinates of one level, increasing (strictly for the Weyl chamber).
using Config = std::vector<int>;

struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool is_weyl(const Config& x);
bool is_weak_weyl(const Config& x);
// y_1 <= x_1 < y_2 <= ... < y_{N+1}, with |x| = N and |y| = N + 1
bool interlaces(const Config& x, const Config& y);
Config packed(int N);

// All strictly increasing N-tuples with entries in [0, bound).
std::vector<Config> weyl_configs(int N, int bound);
// All x with x interlacing y.
std::vector<Config> children(const Config& y);
// All y interlacing over x with y_{N+1} < bound.
std::vector<Config> parents(const Config& x, int bound);

double lambda_kernel(const Config& y, const Config& x, const InhomogeneitySequence& a);
double h_det(const Config& x, const InhomogeneitySequence& a);
double h_recursive(const Config& x, const InhomogeneitySequence& a);
// determinant route, cross-checked against the recursion
double h_N(const Config& x, const InhomogeneitySequence& a, bool cross_check = true);
double link_kernel(const Config& y, const Config& x, const InhomogeneitySequence& a);

// det(T(x_i, y_j)) from a precomputed truncation of T_f
double km_det(const Matrix& T, const Config& x, const Config& y);
double km_det(const Symbol& f, const Config& x, const Config& y, const InhomogeneitySequence& a);
double markov_step(const Matrix& T, const Config& x, const Config& y, const InhomogeneitySequence& a);
double markov_step(const Symbol& f, const Config& x, const Config& y, const InhomogeneitySequence& a);

// Exact law of the level-N configuration after T started from x, over
// configurations with every coordinate below T.cols().
std::vector<std::pair<Config, double>> markov_row(const Matrix& T, const Config& x,
                                                  const InhomogeneitySequence& a);

double verify_intertwining(const Symbol& f, int N, const InhomogeneitySequence& a, int truncation);
double gt_coherence_check(const Symbol& f, int N, const InhomogeneitySequence& a, int truncation);

}  // namespace inhomog
